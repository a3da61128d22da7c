"""Pointwise consistency of S_h against the curvature operator for smooth test fields."""

import math

from _common import parser, save, setup

from capillary_mm import experiments as ex


def main():
    p = parser(__doc__)
    p.add_argument("--field", choices=("radial", "saddle", "linear"), default="radial")
    p.add_argument("--h", type=float, nargs="+", default=[0.02, 0.01, 0.005])
    p.add_argument("--half-width", type=float, default=0.8)
    p.add_argument("--displaced", action="store_true")
    args = p.parse_args()
    out = setup(args)
    z = {"radial": (0.5 * math.cos(0.3), 0.5 * math.sin(0.3)), "saddle": (0.3, 0.1), "linear": (0.05, 0.02)}
    field_ = {"radial": ex.radial_field(), "saddle": ex.saddle_field(), "linear": ex.linear_field()}[args.field]
    res = ex.consistency_probe(field_, z[args.field], args.h, half_width=args.half_width,
                               center=(0.0, 0.0), displaced=args.displaced)
    save(res.rows(), out, f"consistency_{args.field}.csv", args)
    print(f"errors {res.error}, fitted order {res.order:.3f}")


if __name__ == "__main__":
    main()

"""Translating soliton in the strip [-1, 1] x [-H, H]: per-step interface errors."""

import math

from _common import parser, save, setup

from capillary_mm import experiments as ex


def main():
    p = parser(__doc__)
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--b", type=float, default=-1 / math.sqrt(2))
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--half-height", type=float, default=6.0)
    args = p.parse_args()
    out = setup(args)
    dom = ex.soliton_domain(args.nx, args.b, args.half_height)
    res = ex.soliton_invariance_test(dom, args.b, args.h, args.steps)
    save(res.rows(), out, "soliton.csv", args)
    print(f"max Hausdorff {res.max_hausdorff_dx:.3f} dx, final drift {res.final_drift_dx:+.4f} dx")


if __name__ == "__main__":
    main()

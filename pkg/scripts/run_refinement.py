"""Cauchy differences of the level-set evolution under halving of h."""

import numpy as np
from _common import parser, save, setup

from capillary_mm import experiments as ex
from capillary_mm.grid import build_strip, set_beta


def main():
    p = parser(__doc__)
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--T", type=float, default=0.1)
    p.add_argument("--h", type=float, nargs="+", default=[1 / 50, 1 / 100, 1 / 200])
    p.add_argument("--levels", type=int, default=256)
    p.add_argument("--lattice", action="store_true", help="plain lattice values instead of interpolation")
    args = p.parse_args()
    out = setup(args)
    d = set_beta(build_strip(2.0, 2.0, args.nx), args.beta)
    X, Y = d.coords
    u0 = np.where(d.mask, 0.3 * X + Y, 0.0)
    res = ex.refinement_cauchy_study(d, u0, args.T, args.h, n_levels=args.levels,
                                     interpolate=not args.lattice)
    save(res.rows(), out, "refinement.csv", args)
    print(f"sup differences {res.diffs}, dlam {res.dlam:.5f}")


if __name__ == "__main__":
    main()

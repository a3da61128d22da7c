"""Relaxation of a tilted interface to the prescribed side-wall angles."""

import math

from _common import parser, save, setup

from capillary_mm import experiments as ex
from capillary_mm.grid import build_strip


def main():
    p = parser(__doc__)
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--height", type=float, default=2.0)
    p.add_argument("--slope", type=float, default=0.3)
    p.add_argument("--h", type=float, default=0.005)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--two-sided", action="store_true", help="cos(3 pi/4) on the left wall")
    args = p.parse_args()
    out = setup(args)
    b = math.cos(math.pi / 4)
    beta = {"left": -b if args.two_sided else b, "right": b, "else": 0.0}
    res = ex.contact_angle_relaxation(build_strip(2.0, args.height, args.nx), beta, args.slope,
                                      args.h, args.steps)
    save(res.rows(), out, "contact_angle.csv", args)
    print(f"final angles: left {res.final('left'):.2f}, right {res.final('right'):.2f}")


if __name__ == "__main__":
    main()

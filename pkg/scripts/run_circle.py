"""Shrinking circle in the unit disk: radius history and extinction time."""

import math

import numpy as np
from _common import parser, save, setup

from capillary_mm.analytic import PastExtinction, shrinking_circle_radius
from capillary_mm.grid import RegionSet, build_disk
from capillary_mm.scheme import evolve_set


def main():
    p = parser(__doc__)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--r0", type=float, default=0.5)
    p.add_argument("--h", type=float, default=1 / 400)
    args = p.parse_args()
    out = setup(args)
    d = build_disk(1.0, args.n)
    X, Y = d.coords
    steps = int(math.ceil(0.6 * args.r0**2 / args.h))
    ev = evolve_set(d, RegionSet.from_levels(np.hypot(X, Y) - args.r0, d.mask), args.h, steps)
    rows = []
    for t, reg in zip(ev.times, ev.regions):
        r = math.sqrt(reg.membership.sum() * d.dx**2 / math.pi)
        try:
            exact = shrinking_circle_radius(args.r0, t)
        except PastExtinction:
            exact = 0.0
        rows.append({"t": t, "radius": r, "exact": exact})
    save(rows, out, "circle.csv", args)
    print(f"extinction at {ev.extinction_time} (exact {args.r0 ** 2 / 2})")


if __name__ == "__main__":
    main()

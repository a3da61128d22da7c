"""Capillary minimizing-movement scheme for mean curvature flow with a prescribed contact angle."""

from .grid import GridDomain, RegionSet, build_disk, build_polygon, build_strip, set_beta
from .distance import signed_geodesic_distance
from .solver import SolverConfig, solve_capillary_tv
from .scheme import evolve, evolve_set, function_step, set_step

__all__ = [
    "GridDomain", "RegionSet", "build_disk", "build_polygon", "build_strip", "set_beta",
    "signed_geodesic_distance", "SolverConfig", "solve_capillary_tv",
    "evolve", "evolve_set", "function_step", "set_step",
]

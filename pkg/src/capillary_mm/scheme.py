"""Set operator ``T_h``, its level-set lift ``S_h`` and the time-stepped approximation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .distance import signed_geodesic_distance
from .grid import GridDomain, RegionSet, set_beta
from .solver import DualField, NonConvergence, SolveReport, SolverConfig, solve_capillary_tv

log = logging.getLogger(__name__)

DEFAULT_LEVELS = 256


class NestingError(AssertionError):
    """Per-level results of a level stack are not nested."""


@dataclass
class SetMinimizer:
    """The minimizer ``w`` for data ``d_{Omega,E}`` together with its dual and report."""

    w: np.ndarray
    z: DualField
    report: SolveReport
    data: np.ndarray

    def region(self, domain: GridDomain) -> RegionSet:
        return RegionSet.from_levels(self.w, domain.mask)


def set_minimizer(domain: GridDomain, region: RegionSet, h: float,
                  cfg: SolverConfig | None = None, z0: DualField | None = None,
                  strict: bool = True) -> SetMinimizer:
    """Solve the capillary step with the signed geodesic distance to ``region`` as data."""
    g = signed_geodesic_distance(domain, region)
    w, z, rep = solve_capillary_tv(domain, g, h, cfg, z0=z0)
    if strict and not rep.converged:
        raise NonConvergence(rep, w, z)
    return SetMinimizer(w=w, z=z, report=rep, data=g)


def set_step(domain: GridDomain, region: RegionSet, h: float,
             cfg: SolverConfig | None = None, z0: DualField | None = None) -> RegionSet:
    """``T_h(E) = {w <= 0}``; the returned region carries ``w`` as sub-cell levels."""
    if h <= 0:
        raise ValueError("time step h must be positive")
    return set_minimizer(domain, region, h, cfg, z0).region(domain)


# -- level stacks --------------------------------------------------------------------


@dataclass
class LevelStack:
    """Per-level results ``T_h({u >= lambda_k})`` for ``lambda_k = lambda_0 + k dlam``."""

    levels: np.ndarray
    dlam: float
    regions: np.ndarray  # (K+1, ny, nx) bool
    reports: list = field(default_factory=list)
    solved: np.ndarray | None = None  # which levels needed a solve

    def check_nested(self, mask: np.ndarray) -> None:
        for k in range(len(self.levels) - 1):
            extra = self.regions[k + 1] & ~self.regions[k] & mask
            if extra.any():
                raise NestingError(
                    f"level {k + 1} result is not contained in level {k} "
                    f"({int(extra.sum())} cells)")

    @property
    def iterations(self) -> int:
        return sum(r.iterations for r in self.reports)

    @property
    def max_rel_gap(self) -> float:
        return max((r.rel_gap for r in self.reports), default=0.0)

    @property
    def eps_sup(self) -> float:
        return max((r.eps_sup for r in self.reports), default=0.0)


def level_lattice(u: np.ndarray, mask: np.ndarray, dlam: float | None = None,
                  n_levels: int = DEFAULT_LEVELS, base: float | None = None):
    """Levels ``base + k dlam`` covering ``[min u, max u]`` on the mask.

    ``dlam`` defaults to ``(max u - min u) / n_levels`` (or 1 for constant ``u``)
    and ``base`` to ``min u``.
    """
    vals = u[mask]
    lo, hi = float(vals.min()), float(vals.max())
    if dlam is None:
        dlam = (hi - lo) / n_levels if hi > lo else 1.0
    if dlam <= 0:
        raise ValueError("level spacing must be positive")
    lam0 = lo if base is None else float(base)
    k_lo = max(0, math.floor((lo - lam0) / dlam))
    k_hi = math.floor((hi - lam0) / dlam + 1e-12)
    ks = np.arange(k_lo, max(k_hi, k_lo) + 1)
    return lam0 + ks * dlam, dlam


def function_step(domain: GridDomain, u: np.ndarray, h: float,
                  cfg: SolverConfig | None = None, dlam: float | None = None,
                  n_levels: int = DEFAULT_LEVELS, base: float | None = None,
                  warm_start: bool = True, strict: bool = True,
                  interpolate: bool = False):
    """Quantized ``S_h u(x) = max{lambda_k : x in T_h({u >= lambda_k})}``.

    Levels are solved from the top down, each warm-started from the dual field
    of the level above.  Cells contained in no level result get
    ``lambda_0 - dlam``.  Returns ``(S_h u, LevelStack)``; the stack is checked
    for nesting and :class:`NestingError` is raised on violation.

    With ``interpolate=True`` a cell whose highest level is ``lambda_k`` gets
    the root in ``[lambda_k, lambda_{k+1})`` of the linear interpolant of the
    two minimizers ``w_k`` and ``w_{k+1}`` at that cell.  This keeps
    ``{S_h u >= lambda_k}`` equal to the stored level results while removing
    the downward rounding of the plain lattice value, which otherwise builds
    up over many steps.
    """
    if h <= 0:
        raise ValueError("time step h must be positive")
    domain.check_shape(u, "u")
    mask = domain.mask
    if not np.isfinite(u[mask]).all():
        raise ValueError("u must be finite")
    levels, dlam = level_lattice(u, mask, dlam, n_levels, base)
    K = len(levels)
    regions = np.zeros((K,) + mask.shape, dtype=bool)
    solved = np.zeros(K, dtype=bool)
    reports = []
    out = np.full(mask.shape, levels[0] - dlam)
    assigned = np.zeros(mask.shape, dtype=bool)
    z = None
    w_above = None
    for k in range(K - 1, -1, -1):
        lam = levels[k]
        phi = np.where(mask, lam - u, 1.0)
        member = (phi <= 0) & mask
        w = None
        if member.any() and (member | ~mask).all():
            regions[k] = mask
        elif member.any():
            res = set_minimizer(domain, RegionSet(member, phi), h, cfg,
                                z0=z if warm_start else None, strict=strict)
            w = res.w
            regions[k] = (w <= 0) & mask
            solved[k] = True
            reports.append(res.report)
            z = res.z
        new = regions[k] & ~assigned
        out[new] = lam
        if interpolate and w is not None and w_above is not None:
            num = -w[new]
            den = w_above[new] - w[new]
            frac = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
            out[new] = lam + dlam * np.clip(frac, 0.0, 1.0 - 1e-9)
        assigned |= regions[k]
        w_above = w
    stack = LevelStack(levels=levels, dlam=dlam, regions=regions, reports=reports, solved=solved)
    stack.check_nested(mask)
    return np.where(mask, out, 0.0), stack


# -- time evolution -----------------------------------------------------------------


@dataclass
class Evolution:
    times: list
    snapshots: list
    stacks: list = field(default_factory=list)
    failed_at: float | None = None
    error: str | None = None


def evolve(domain: GridDomain, u0: np.ndarray, h: float, T: float,
           cfg: SolverConfig | None = None, dlam: float | None = None,
           n_levels: int = DEFAULT_LEVELS, snapshot_every: int = 1,
           interpolate: bool = True) -> Evolution:
    """``u^h(t) = S_h^{floor(t/h)} u0`` for ``t`` up to ``T``.

    The level spacing is fixed from ``u0`` and the lattice base is kept across
    steps.  Sub-lattice interpolation is on by default (see
    :func:`function_step`).  On non-convergence the
    snapshots computed so far are returned with ``failed_at`` set.
    """
    if T <= 0:
        raise ValueError("horizon T must be positive")
    n_steps = int(math.floor(T / h + 1e-9))
    levels, dlam = level_lattice(u0, domain.mask, dlam, n_levels)
    base = float(levels[0])
    u = np.where(domain.mask, u0, 0.0)
    ev = Evolution(times=[0.0], snapshots=[u.copy()])
    for n in range(1, n_steps + 1):
        try:
            u, stack = function_step(domain, u, h, cfg, dlam=dlam, base=base,
                                     interpolate=interpolate)
        except NonConvergence as exc:
            ev.failed_at = n * h
            ev.error = str(exc)
            log.warning("evolution stopped at step %d: %s", n, exc)
            break
        ev.stacks.append(stack)
        if n % snapshot_every == 0 or n == n_steps:
            ev.times.append(n * h)
            ev.snapshots.append(u.copy())
    return ev


@dataclass
class SetEvolution:
    times: list
    regions: list
    reports: list = field(default_factory=list)
    extinction_time: float | None = None
    failed_at: float | None = None


def evolve_set(domain: GridDomain, region: RegionSet, h: float, n_steps: int,
               cfg: SolverConfig | None = None, stop_when_empty: bool = True,
               warm_start: bool = True) -> SetEvolution:
    """Repeated ``T_h`` on a region; records the first time the region is empty."""
    ev = SetEvolution(times=[0.0], regions=[region])
    z = None
    for n in range(1, n_steps + 1):
        try:
            res = set_minimizer(domain, region, h, cfg, z0=z if warm_start else None)
        except NonConvergence as exc:
            ev.failed_at = n * h
            log.warning("set evolution stopped at step %d: %s", n, exc)
            break
        z = res.z
        region = res.region(domain)
        ev.times.append(n * h)
        ev.regions.append(region)
        ev.reports.append(res.report)
        if region.is_empty(domain):
            ev.extinction_time = n * h
            if stop_when_empty:
                break
    return ev


# -- property probes ----------------------------------------------------------------


def beta_compare_step(domain: GridDomain, u: np.ndarray, h: float, beta1, beta2,
                      cfg: SolverConfig | None = None, dlam: float | None = None,
                      n_levels: int = DEFAULT_LEVELS) -> dict:
    """Run ``S_h`` with two contact data ``beta1 <= beta2`` on a common lattice.

    Returns the largest cellwise excess of ``S_{h,beta2} u`` over ``S_{h,beta1} u``
    (zero when the ordering holds) together with the lattice spacing.
    """
    d1 = set_beta(domain, beta1)
    d2 = set_beta(domain, beta2)
    if (d1.beta > d2.beta).any():
        raise ValueError("beta1 must not exceed beta2 on any boundary face")
    levels, dlam = level_lattice(u, domain.mask, dlam, n_levels)
    s1, st1 = function_step(d1, u, h, cfg, dlam=dlam, base=levels[0])
    s2, st2 = function_step(d2, u, h, cfg, dlam=dlam, base=levels[0])
    excess = (s2 - s1)[domain.mask]
    return {
        "violation": float(max(excess.max(), 0.0)),
        "dlam": dlam,
        "eps_solver": max(st1.eps_sup, st2.eps_sup),
        "s1": s1,
        "s2": s2,
    }


def interface_halo(domain: GridDomain, member: np.ndarray, width: int = 1) -> np.ndarray:
    """Cells within ``width`` cells (8-neighbourhood) of the region's interface."""
    m = domain.mask
    inside = member & m
    outside = ~member & m
    st = np.ones((3, 3), dtype=bool)
    band = (ndimage.binary_dilation(inside, st) & outside) | (ndimage.binary_dilation(outside, st) & inside)
    if width > 1:
        band = ndimage.binary_dilation(band, st, iterations=width - 1)
    return band & m


def continuity_probe(domain: GridDomain, regions: Sequence[RegionSet], h: float,
                     cfg: SolverConfig | None = None) -> dict:
    """Compare ``intersection_n T_h(E_n)`` with ``T_h(intersection_n E_n)`` on a finite nested sequence.

    Differences are allowed only within one cell of the interface of
    ``T_h(intersection E_n)``.
    """
    mask = domain.mask
    for a, b in zip(regions, regions[1:]):
        if (b.membership & ~a.membership & mask).any():
            raise ValueError("regions must be non-increasing")
    inter_out = mask.copy()
    for r in regions:
        inter_out &= set_step(domain, r, h, cfg).membership
    # for a finite non-increasing sequence the intersection is the last set
    target = set_step(domain, regions[-1], h, cfg).membership
    diff = (inter_out ^ target) & mask
    halo = interface_halo(domain, target, 1)
    return {
        "mismatch": int(diff.sum()),
        "outside_halo": int((diff & ~halo).sum()),
        "equal": not diff.any(),
        "within_halo": not (diff & ~halo).any(),
    }

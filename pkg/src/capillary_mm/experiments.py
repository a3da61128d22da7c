"""Studies that turn qualitative properties of the scheme into numbers.

Every study is deterministic for a fixed configuration and seed and returns a
dataclass whose ``rows()`` method yields flat dictionaries for CSV output.
Tolerances are expressed in units of ``dx``, ``dlam`` or the solver error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .analytic import SolitonParams, eval_F, soliton_profile
from .grid import WALL_NAMES, DomainError, GridDomain, RegionSet, build_strip, set_beta
from .scheme import (DEFAULT_LEVELS, beta_compare_step, evolve, function_step,
                     level_lattice, set_minimizer)
from .solver import SolverConfig, gradient, solve_capillary_tv


class InterfaceAtCap(RuntimeError):
    """The evolving interface reached the top or bottom of a strip."""


class NoContact(ValueError):
    """The interface does not cross the band next to the selected wall."""


# -- interface geometry ----------------------------------------------------------------


def interface_cells(domain: GridDomain, member: np.ndarray) -> np.ndarray:
    """Centres of member cells with a non-member 4-neighbour inside the domain, shape (n, 2)."""
    m = domain.mask
    inside = member & m
    outside = ~member & m
    touch = np.zeros_like(inside)
    touch[:, 1:] |= outside[:, :-1]
    touch[:, :-1] |= outside[:, 1:]
    touch[1:, :] |= outside[:-1, :]
    touch[:-1, :] |= outside[1:, :]
    j, i = np.nonzero(inside & touch)
    return np.column_stack([domain.xc[i], domain.yc[j]])


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric max-min distance between two point clouds."""
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return math.inf
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def column_crossings(domain: GridDomain, phi: np.ndarray) -> np.ndarray:
    """Height of the lowest sign change of ``phi`` (``<= 0`` below, ``> 0`` above) per column.

    Columns without a crossing give ``nan``.
    """
    out = np.full(domain.nx, np.nan)
    for i in range(domain.nx):
        rows = np.nonzero(domain.mask[:, i])[0]
        col = phi[rows, i]
        k = np.nonzero((col[:-1] <= 0) & (col[1:] > 0))[0]
        if len(k):
            k = k[0]
            a, b = col[k], col[k + 1]
            out[i] = domain.yc[rows[k]] + domain.dx * (-a) / (b - a)
    return out


def contact_angle_measure(domain: GridDomain, phi: np.ndarray, wall: str, band: int = 6) -> float:
    """Angle in degrees between the interface normal and the wall's outward normal.

    ``phi`` is a level function that is negative on the region.  Sub-cell zero
    crossings on the ``band`` grid lines next to the wall are fitted by a
    least-squares line; the normal used points into the region, so an interface
    meeting the wall at contact value ``beta`` measures ``arccos(beta)``.
    """
    if wall not in WALL_NAMES:
        raise ValueError(f"unknown wall {wall!r}")
    if domain.shape not in ("strip", "mask") or not domain.mask.all():
        raise DomainError("contact angle measurement needs a rectangular domain")
    vertical = wall in ("left", "right")
    f = phi if vertical else phi.T
    along = domain.xc if vertical else domain.yc
    across = domain.yc if vertical else domain.xc
    n_lines = f.shape[1]
    if band < 2 or band > n_lines:
        raise ValueError("band must hold at least two grid lines")
    lines = range(band) if wall in ("left", "bottom") else range(n_lines - band, n_lines)
    pts, side = [], []
    for i in lines:
        col = f[:, i]
        k = np.nonzero(((col[:-1] <= 0) & (col[1:] > 0)) | ((col[:-1] > 0) & (col[1:] <= 0)))[0]
        if len(k) != 1:
            raise NoContact(f"{len(k)} interface crossings on grid line {i} next to the {wall} wall")
        k = k[0]
        a, b = col[k], col[k + 1]
        pts.append((along[i], across[k] + domain.dx * a / (a - b)))
        side.append(1.0 if a <= 0 else -1.0)  # region below (+1) or above (-1)
    if len(set(side)) > 1:
        raise NoContact("region switches side inside the band")
    p = np.array(pts)
    slope = np.polyfit(p[:, 0], p[:, 1], 1)[0]
    # normal into the region for a line across = slope * along + c
    n = side[0] * np.array([slope, -1.0]) / math.hypot(slope, 1.0)
    if not vertical:
        n = n[::-1]
    nu = {"left": (-1.0, 0.0), "right": (1.0, 0.0), "bottom": (0.0, -1.0), "top": (0.0, 1.0)}[wall]
    return math.degrees(math.acos(float(np.clip(n @ np.array(nu), -1.0, 1.0))))


# -- soliton ---------------------------------------------------------------------------


@dataclass
class SolitonResult:
    b: float
    h: float
    dx: float
    steps: list = field(default_factory=list)
    reports: list = field(default_factory=list)

    @property
    def max_hausdorff_dx(self) -> float:
        return max((s["hausdorff_dx"] for s in self.steps), default=0.0)

    @property
    def final_drift_dx(self) -> float:
        return self.steps[-1]["mean_height_err_dx"] if self.steps else 0.0

    @property
    def max_drift_dx(self) -> float:
        return max((abs(s["mean_height_err_dx"]) for s in self.steps), default=0.0)

    def rows(self):
        return list(self.steps)


def soliton_domain(nx: int = 128, b: float = -1 / math.sqrt(2), half_height: float = 6.0) -> GridDomain:
    """Strip ``[-1, 1] x [-half_height, half_height]`` with contact value ``b`` on the side walls."""
    d = build_strip(2.0, 2 * half_height, nx)
    return set_beta(d, {"left": b, "right": b, "else": 0.0})


def soliton_invariance_test(domain: GridDomain, b: float, h: float, steps: int,
                            cfg: SolverConfig | None = None, mu: float = 0.0) -> SolitonResult:
    """Iterate ``T_h`` from the soliton subgraph and compare with the exact translate.

    ``domain`` must be a strip of width 2 centred at ``x = 0``; its side-wall
    contact values are set to ``b`` and the caps to zero.  Errors are reported
    in units of ``dx``: the symmetric Hausdorff distance of interface cell
    centres and the error of the mean interface height.
    """
    if domain.shape != "strip" or abs(domain.params["width"] - 2.0) > 1e-12:
        raise DomainError("soliton test needs a strip of width 2")
    params = SolitonParams(b, mu)
    domain = set_beta(domain, {"left": b, "right": b, "else": 0.0})
    X, Y = domain.coords
    dx = domain.dx
    region = RegionSet.from_levels(np.where(domain.mask, Y - soliton_profile(params, X, 0.0), 1.0),
                                   domain.mask)
    res = SolitonResult(b=b, h=h, dx=dx)
    z = None
    for n in range(1, steps + 1):
        t = n * h
        sm = set_minimizer(domain, region, h, cfg, z0=z)
        z = sm.z
        region = sm.region(domain)
        member = region.membership
        if member[-1].any() or (~member[0]).any():
            raise InterfaceAtCap(f"interface reached a cap at step {n}")
        exact = (Y <= soliton_profile(params, X, t)) & domain.mask
        hd = hausdorff(interface_cells(domain, member), interface_cells(domain, exact))
        heights = column_crossings(domain, sm.w)
        exact_h = soliton_profile(params, domain.xc, t)
        if np.isnan(heights).any():
            raise InterfaceAtCap(f"interface lost in some column at step {n}")
        res.reports.append(sm.report)
        res.steps.append({
            "step": n, "t": t,
            "hausdorff_dx": hd / dx,
            "mean_height_err_dx": float((heights - exact_h).mean()) / dx,
            "max_height_err_dx": float(np.abs(heights - exact_h).max()) / dx,
            "iterations": sm.report.iterations,
            "rel_gap": sm.report.rel_gap,
        })
    return res


@dataclass
class ContactAngleResult:
    beta: dict
    steps: list = field(default_factory=list)
    reports: list = field(default_factory=list, repr=False)

    def final(self, wall: str) -> float:
        return self.steps[-1][f"angle_{wall}"]

    def rows(self):
        return list(self.steps)


def contact_angle_relaxation(domain: GridDomain, beta: dict, slope: float, h: float, steps: int,
                             cfg: SolverConfig | None = None, offset: float = 0.0,
                             band: int = 6) -> ContactAngleResult:
    """Iterate ``T_h`` from ``{y <= slope x + offset}`` and measure the side-wall angles.

    ``beta`` maps wall names to contact values as in :func:`set_beta`.
    Angles are in degrees; ``nan`` marks a step where a wall had no single
    crossing.
    """
    domain = set_beta(domain, beta)
    X, Y = domain.coords
    region = RegionSet.from_levels(np.where(domain.mask, Y - (slope * X + offset), 1.0), domain.mask)
    res = ContactAngleResult(beta=dict(beta))
    z = None
    for n in range(1, steps + 1):
        sm = set_minimizer(domain, region, h, cfg, z0=z)
        z, region = sm.z, sm.region(domain)
        res.reports.append(sm.report)
        row = {"step": n, "t": n * h}
        for wall in ("left", "right"):
            try:
                row[f"angle_{wall}"] = contact_angle_measure(domain, sm.w, wall, band)
            except NoContact:
                row[f"angle_{wall}"] = math.nan
        res.steps.append(row)
    return res


# -- consistency -----------------------------------------------------------------------


@dataclass(frozen=True)
class TestField:
    """Smooth field with analytic gradient and Hessian."""

    name: str
    value: Callable
    grad: Callable
    hess: Callable


def radial_field(center=(0.0, 0.0)) -> TestField:
    cx, cy = center

    def value(X, Y):
        return np.hypot(X - cx, Y - cy)

    def grad(x, y):
        r = math.hypot(x - cx, y - cy)
        return np.array([x - cx, y - cy]) / r

    def hess(x, y):
        r = math.hypot(x - cx, y - cy)
        p = np.array([x - cx, y - cy]) / r
        return (np.eye(2) - np.outer(p, p)) / r

    return TestField("radial", value, grad, hess)


def linear_field(a: float = 1.0, b: float = 0.5) -> TestField:
    return TestField("linear", lambda X, Y: a * X + b * Y, lambda x, y: np.array([a, b]),
                     lambda x, y: np.zeros((2, 2)))


def saddle_field(a: float = 1.0, b: float = 1.0) -> TestField:
    """``a x^2 - b y^2``."""
    return TestField("saddle", lambda X, Y: a * X**2 - b * Y**2,
                     lambda x, y: np.array([2 * a * x, -2 * b * y]),
                     lambda x, y: np.diag([2 * a, -2 * b]))


def probe_domain(z, dx: float, half_width: float, center=None) -> tuple[GridDomain, tuple[int, int]]:
    """Square box of half-width ``half_width`` around ``center`` (default ``z``).

    The grid is shifted so that ``z`` is a cell centre; returns the domain and
    the ``(j, i)`` index of that cell.
    """
    cx, cy = (z if center is None else center)
    n = max(8, 2 * int(round(half_width / dx)))
    i = int(math.floor((z[0] - (cx - half_width)) / dx))
    j = int(math.floor((z[1] - (cy - half_width)) / dx))
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError("probe point outside the box")
    d = build_strip(n * dx, n * dx, n, y0=z[1] - (j + 0.5) * dx, x0=z[0] - (i + 0.5) * dx)
    return d, (j, i)


@dataclass
class ProbeResult:
    field: str
    z: tuple
    target: float
    h: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    error: list = field(default_factory=list)
    displaced: list = field(default_factory=list)
    solves: list = field(default_factory=list)
    order: float = math.nan

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.error, self.error[1:]))

    def rows(self):
        out = []
        for k, h in enumerate(self.h):
            row = {"field": self.field, "h": h, "ratio": self.ratio[k], "target": self.target,
                   "error": self.error[k], "solves": self.solves[k], "fitted_order": self.order}
            if self.displaced:
                row["ratio_plus"], row["ratio_minus"] = self.displaced[k]
            out.append(row)
        return out


def pointwise_step(domain: GridDomain, phi: np.ndarray, cell: tuple[int, int], h: float,
                   cfg: SolverConfig | None = None, bracket: float | None = None,
                   xtol: float | None = None) -> tuple[float, int]:
    """``S_h phi`` at one cell, as the root in ``lambda`` of ``w_lambda(cell)``.

    ``lambda -> w_lambda(x)`` is non-decreasing, so ``S_h phi(x)`` is where it
    crosses zero; Brent's method replaces the full level stack.  Returns the
    value and the number of set solves.
    """
    j, i = cell
    mu = float(phi[j, i])
    a = bracket if bracket is not None else 8 * h + 4 * domain.dx
    xtol = xtol if xtol is not None else 1e-4 * h
    state = {"z": None, "n": 0}

    def w_at(lam):
        member = (phi >= lam) & domain.mask
        region = RegionSet(member, np.where(domain.mask, lam - phi, 1.0))
        sm = set_minimizer(domain, region, h, cfg, z0=state["z"])
        state["z"] = sm.z
        state["n"] += 1
        return float(sm.w[j, i])

    lo, hi = mu - a, mu + a
    f_lo, f_hi = w_at(lo), w_at(hi)
    for _ in range(8):
        if f_lo <= 0 < f_hi:
            break
        if f_lo > 0:
            lo -= a
            f_lo = w_at(lo)
        if f_hi <= 0:
            hi += a
            f_hi = w_at(hi)
        a *= 2
    else:
        raise RuntimeError("could not bracket the level crossing")
    root = brentq(w_at, lo, hi, xtol=xtol)
    return root, state["n"]


def consistency_probe(field_: TestField, z, h_list: Sequence[float], cfg: SolverConfig | None = None,
                      half_width: float = 0.75, dx_ratio: float = 1.0, beta=0.0,
                      displaced: bool = False, center=None) -> ProbeResult:
    """Compare ``(S_h phi(z) - phi(z)) / h`` with ``-F(grad phi(z), hess phi(z))``.

    For each ``h`` a box of half-width ``half_width`` around ``center``
    (default ``z``) is meshed with
    ``dx = dx_ratio * h`` and ``phi`` is sampled analytically.  With
    ``displaced`` the ratio is also taken at ``z +- sqrt(2h) grad phi / |grad phi|``
    (rounded to the nearest cell).
    """
    z = (float(z[0]), float(z[1]))
    p = field_.grad(*z)
    if not np.any(p):
        raise ValueError("probe needs a nonzero gradient")
    if dx_ratio <= 0 or dx_ratio > 1:
        raise ValueError("dx must not exceed h")
    target = -eval_F(p, field_.hess(*z))
    res = ProbeResult(field=field_.name, z=z, target=target)
    for h in h_list:
        dom, cell = probe_domain(z, dx_ratio * h, half_width, center)
        dom = set_beta(dom, beta)
        X, Y = dom.coords
        phi = np.where(dom.mask, field_.value(X, Y), 0.0)
        s, n = pointwise_step(dom, phi, cell, h, cfg)
        ratio = (s - phi[cell]) / h
        res.h.append(h)
        res.ratio.append(ratio)
        res.error.append(abs(ratio - target))
        res.solves.append(n)
        if displaced:
            e = p / np.linalg.norm(p) * math.sqrt(2 * h)
            ratios = []
            for sgn in (1, -1):
                jj = cell[0] + int(round(sgn * e[1] / dom.dx))
                ii = cell[1] + int(round(sgn * e[0] / dom.dx))
                sv, _ = pointwise_step(dom, phi, (jj, ii), h, cfg)
                ratios.append((sv - phi[jj, ii]) / h)
            res.displaced.append(tuple(ratios))
    if len(res.h) >= 2 and all(e > 0 for e in res.error):
        res.order = float(np.polyfit(np.log(res.h), np.log(res.error), 1)[0])
    return res


# -- refinement ------------------------------------------------------------------------


@dataclass
class RefinementResult:
    h_list: list
    diffs: list
    dlam: float
    finals: list = field(default_factory=list, repr=False)

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.diffs, self.diffs[1:]))

    @property
    def non_increasing(self) -> bool:
        return all(b <= a for a, b in zip(self.diffs, self.diffs[1:]))

    def rows(self):
        return [{"h": h, "h_half": h / 2, "sup_diff": d, "dlam": self.dlam}
                for h, d in zip(self.h_list, self.diffs)]


def refinement_cauchy_study(domain: GridDomain, u0: np.ndarray, T: float, h_list: Sequence[float],
                            cfg: SolverConfig | None = None, n_levels: int = DEFAULT_LEVELS,
                            dlam: float | None = None, interpolate: bool = True) -> RefinementResult:
    """Sup-norm differences of ``u^h(T)`` between consecutive halvings of ``h``."""
    h_list = [float(h) for h in h_list]
    if len(h_list) < 3:
        raise ValueError("need at least three time steps")
    for a, b in zip(h_list, h_list[1:]):
        if not math.isclose(b, a / 2, rel_tol=1e-9):
            raise ValueError("each time step must be half the previous one")
    _, dlam = level_lattice(u0, domain.mask, dlam, n_levels)
    finals = []
    for h in h_list:
        ev = evolve(domain, u0, h, T, cfg, dlam=dlam, interpolate=interpolate, snapshot_every=10**9)
        if ev.failed_at is not None:
            raise RuntimeError(f"evolution with h={h} failed at t={ev.failed_at}: {ev.error}")
        finals.append(ev.snapshots[-1])
    m = domain.mask
    diffs = [float(np.abs(a - b)[m].max()) for a, b in zip(finals, finals[1:])]
    return RefinementResult(h_list=h_list[:-1], diffs=diffs, dlam=dlam, finals=finals)


# -- random fields and property suites -------------------------------------------------


def random_smooth_field(domain: GridDomain, rng: np.random.Generator, n_modes: int = 4,
                        wavenumber: float = 2.0, amplitude: float = 0.5) -> np.ndarray:
    """Sum of a few plane waves with normally distributed wave vectors and amplitudes."""
    X, Y = domain.coords
    f = np.zeros(domain.mask.shape)
    for _ in range(n_modes):
        kx, ky = rng.normal(0.0, wavenumber, 2)
        ph = rng.uniform(0, 2 * math.pi)
        f += rng.normal(0.0, amplitude) * np.sin(kx * X + ky * Y + ph)
    return np.where(domain.mask, f, 0.0)


def random_bump(domain: GridDomain, rng: np.random.Generator) -> np.ndarray:
    """Non-negative smooth Gaussian bump."""
    X, Y = domain.coords
    cx = rng.uniform(domain.xc[0], domain.xc[-1])
    cy = rng.uniform(domain.yc[0], domain.yc[-1])
    s = rng.uniform(0.1, 0.5)
    return np.where(domain.mask, rng.uniform(0.05, 0.5) * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * s * s)), 0.0)


def max_gradient(domain: GridDomain, u: np.ndarray) -> float:
    gx, gy = gradient(domain, u)
    return float(np.hypot(gx, gy)[domain.mask].max())


@dataclass
class PropertyStat:
    name: str
    checks: int = 0
    violations: int = 0
    worst_slack: float = -math.inf  # measured minus allowed bound; positive means a violation
    allowance: str = ""

    def record(self, slack: float) -> None:
        self.checks += 1
        self.worst_slack = max(self.worst_slack, slack)
        if slack > 0:
            self.violations += 1

    def row(self) -> dict:
        return {"property": self.name, "checks": self.checks, "violations": self.violations,
                "worst_slack": self.worst_slack, "allowance": self.allowance}


@dataclass
class SuiteResult:
    seed: int
    stats: dict
    reports: list = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    def rows(self):
        return [s.row() for s in self.stats.values()]


def _admissible_for_gradient_bound(domain: GridDomain) -> bool:
    if not domain.convex:
        return False
    if domain.shape != "strip":
        return bool(np.ptp(domain.beta) == 0.0)
    return all(np.ptp(domain.beta[domain.wall_faces(w)]) == 0.0 for w in WALL_NAMES if len(domain.wall_faces(w)))


def contraction_suite(domain: GridDomain, trials: int, cfg: SolverConfig | None = None, h: float = 0.01,
                      seed: int = 0, shift: float = 0.7, gradient_constant: float = 2.0) -> SuiteResult:
    """Random checks of the resolvent map ``g -> w`` on a fixed domain.

    Per trial: L2 contraction and sup-norm contraction on an independent pair,
    order preservation on ``f <= f + bump``, exact shift equivariance for
    ``f + shift``, and the gradient bound when the domain is admissible.  The
    contraction allowances are the sums of the certified errors of the solves
    involved (``eps_l2`` for L2, ``eps_sup`` otherwise).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(seed)
    m = domain.mask
    dA = domain.dx
    stats = {k: PropertyStat(k, allowance=a) for k, a in (
        ("l2_contraction", "eps_l2(f) + eps_l2(g)"),
        ("order_preservation", "eps_sup(f) + eps_sup(f+bump)"),
        ("sup_contraction", "eps_sup(f) + eps_sup(g)"),
        ("shift_equivariance", "1e-9 absolute"),
    )}
    grad_ok = _admissible_for_gradient_bound(domain)
    if grad_ok:
        stats["gradient_bound"] = PropertyStat("gradient_bound", allowance=f"{gradient_constant} * dx")
    reports = []
    worst_c = -math.inf

    def solve(g):
        w, _, rep = solve_capillary_tv(domain, g, h, cfg)
        reports.append(rep)
        return w, rep

    for _ in range(trials):
        f = random_smooth_field(domain, rng)
        g = random_smooth_field(domain, rng)
        p = f + random_bump(domain, rng)
        wf, rf = solve(f)
        wg, rg = solve(g)
        wp, rp = solve(p)
        ws, _ = solve(np.where(m, f + shift, 0.0))
        l2 = lambda a: math.sqrt(float((a[m] ** 2).sum()) * dA * dA)
        stats["l2_contraction"].record(l2(wf - wg) - l2(f - g) - (rf.eps_l2 + rg.eps_l2))
        stats["sup_contraction"].record(float(np.abs(wf - wg)[m].max() - np.abs(f - g)[m].max())
                                        - (rf.eps_sup + rg.eps_sup))
        stats["order_preservation"].record(float((wf - wp)[m].max()) - (rf.eps_sup + rp.eps_sup))
        stats["shift_equivariance"].record(float(np.abs(ws - wf - shift)[m].max()) - 1e-9)
        if grad_ok:
            c = (max_gradient(domain, wf) - max_gradient(domain, f)) / domain.dx
            worst_c = max(worst_c, c)
            stats["gradient_bound"].record(c - gradient_constant)
    return SuiteResult(seed=seed, stats=stats, reports=reports,
                       extra={"gradient_constant_measured": worst_c})


@dataclass
class GradientBoundResult:
    seed: int
    constant: float
    rows_: list = field(default_factory=list)
    reports: list = field(default_factory=list, repr=False)

    @property
    def worst_constant(self) -> float:
        return max(r["c_measured"] for r in self.rows_)

    @property
    def violations(self) -> int:
        return sum(r["c_measured"] > self.constant for r in self.rows_)

    def rows(self):
        return list(self.rows_)


def gradient_bound_study(width: float = 2.0, height: float = 2.0, nx: int = 64, trials: int = 20,
                         cfg: SolverConfig | None = None, seed: int = 0, beta_max: float = 0.7,
                         h_range=(0.005, 0.05), constant: float = 2.0) -> GradientBoundResult:
    """``max |grad w| - max |grad g|`` in units of ``dx`` for random smooth ``g`` on a strip.

    Each trial draws one constant contact value per wall in ``[-beta_max, beta_max]``
    and a time step from ``h_range``.
    """
    base = build_strip(width, height, nx)
    rng = np.random.default_rng(seed)
    out = GradientBoundResult(seed=seed, constant=constant)
    for k in range(trials):
        b = rng.uniform(-beta_max, beta_max, 4)
        dom = set_beta(base, dict(zip(("left", "right", "bottom", "top"), b)))
        g = random_smooth_field(dom, rng)
        h = float(rng.uniform(*h_range))
        w, _, rep = solve_capillary_tv(dom, g, h, cfg)
        out.reports.append(rep)
        gw, gg = max_gradient(dom, w), max_gradient(dom, g)
        out.rows_.append({"trial": k, "h": h, "beta_left": b[0], "beta_right": b[1],
                          "beta_bottom": b[2], "beta_top": b[3], "max_grad_g": gg,
                          "max_grad_w": gw, "c_measured": (gw - gg) / dom.dx,
                          "converged": rep.converged})
    return out


@dataclass
class LevelRelationResult:
    rows_: list = field(default_factory=list)
    reports: list = field(default_factory=list, repr=False)

    @property
    def level_mismatches(self) -> int:
        return sum(r["level_mismatch_cells"] for r in self.rows_)

    @property
    def monotone_violations(self) -> int:
        # outputs are lattice values, so a one-level excess equals dlam up to rounding
        return sum(r["monotone_excess"] > r["dlam"] * (1 + 1e-9) for r in self.rows_)

    def rows(self):
        return list(self.rows_)


def level_relation_suite(domain: GridDomain, n_fields: int = 20, h: float = 0.02,
                         cfg: SolverConfig | None = None, n_levels: int = 64, seed: int = 0) -> LevelRelationResult:
    """Check ``{S_h u >= lambda_k} = T_h({u >= lambda_k})`` and order preservation of ``S_h``.

    Each field ``u`` is paired with ``v = u + bump >= u``; both use a common
    lattice and the excess ``max(S_h u - S_h v)`` is compared with ``dlam``.
    """
    rng = np.random.default_rng(seed)
    m = domain.mask
    out = LevelRelationResult()
    for k in range(n_fields):
        u = random_smooth_field(domain, rng)
        v = u + random_bump(domain, rng)
        lo = float(min(u[m].min(), v[m].min()))
        hi = float(max(u[m].max(), v[m].max()))
        dlam = (hi - lo) / n_levels
        su, st = function_step(domain, u, h, cfg, dlam=dlam, base=lo)
        sv, sv_st = function_step(domain, v, h, cfg, dlam=dlam, base=lo)
        out.reports.extend(st.reports + sv_st.reports)
        mism = 0
        for lam, reg in zip(st.levels, st.regions):
            mism += int((((su >= lam) & m) != reg).sum())
        out.rows_.append({"field": k, "levels": len(st.levels), "dlam": dlam,
                          "level_mismatch_cells": mism,
                          "monotone_excess": float(max((su - sv)[m].max(), 0.0))})
    return out


@dataclass
class BetaMonotonicityResult:
    rows_: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(r["excess"] > r["allowance"] for r in self.rows_)

    @property
    def reverse_violations(self) -> int:
        return sum(r["reverse_excess"] > r["allowance"] for r in self.rows_)

    def rows(self):
        return list(self.rows_)


def beta_monotonicity_suite(domain: GridDomain, n_fields: int = 10, h: float = 0.02,
                            cfg: SolverConfig | None = None, n_levels: int = 64, seed: int = 0,
                            beta_max: float = 0.7) -> BetaMonotonicityResult:
    """Compare ``S_h`` for two per-wall contact data ``beta1 <= beta2``.

    ``excess`` is ``max(S_{beta2} u - S_{beta1} u)`` and ``reverse_excess`` is
    ``max(S_{beta1} u - S_{beta2} u)``; both are judged against
    ``dlam + 2 eps_solver``.
    """
    rng = np.random.default_rng(seed)
    out = BetaMonotonicityResult()
    walls = ("left", "right", "bottom", "top")
    for k in range(n_fields):
        u = random_smooth_field(domain, rng)
        a = rng.uniform(-beta_max, beta_max, 4)
        b = np.minimum(a + rng.uniform(0, beta_max, 4), beta_max)
        r = beta_compare_step(domain, u, h, dict(zip(walls, a)), dict(zip(walls, b)), cfg,
                              n_levels=n_levels)
        m = domain.mask
        allowance = r["dlam"] + 2 * r["eps_solver"]
        out.rows_.append({"field": k, "dlam": r["dlam"], "eps_solver": r["eps_solver"],
                          "allowance": allowance, "excess": r["violation"],
                          "reverse_excess": float(max((r["s1"] - r["s2"])[m].max(), 0.0))})
    return out

"""One minimizing-movement step: the capillary total-variation proximal problem.

For data ``g`` and time step ``h`` the step minimizes

    C_beta(u) + 1/(2h) * sum (u - g)^2 dx^2,
    C_beta(u) = sum_cells |grad u| dx^2 + sum_boundary_faces beta * u(cell) dx,

with forward differences on interior faces and the gradient of each cell built
from its +x and +y faces.  The dual field ``z`` lives on interior faces and is
constrained to the unit ball cell by cell; on boundary faces its outward flux is
pinned to ``-beta``.  With ``div`` the negative adjoint of the gradient including
those pinned fluxes, optimality reads ``w = g + h div z`` and ``-div z`` is a
subgradient of ``C_beta`` at ``w``.

The saddle-point problem is solved with the accelerated first-order primal-dual
method (the primal part is ``1/h``-strongly convex).  Once
the gap is close to the target, plain iterations with a small primal step drive
the fixed-point residual down, which the accelerated steps do only slowly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .grid import GridDomain


class NonConvergence(RuntimeError):
    """The solver hit ``max_iter`` before reaching the gap target."""

    def __init__(self, report: "SolveReport", w=None, z=None):
        super().__init__(f"no convergence after {report.iterations} iterations "
                         f"(relative gap {report.rel_gap:.3e} > {report.tol:.1e})")
        self.report = report
        self.w = w
        self.z = z


@dataclass
class DualField:
    """Dual variable on interior faces, stored on the cell that owns the face.

    ``px[j, i]`` is the flux through the +x face of cell ``(j, i)`` and ``py``
    the flux through its +y face; entries whose face is not interior are zero.
    Boundary fluxes come from the domain's contact data.
    """

    px: np.ndarray
    py: np.ndarray

    @classmethod
    def zeros(cls, domain: GridDomain) -> "DualField":
        return cls(np.zeros((domain.ny, domain.nx)), np.zeros((domain.ny, domain.nx)))

    def copy(self) -> "DualField":
        return DualField(self.px.copy(), self.py.copy())

    def face_fluxes(self, domain: GridDomain) -> tuple[np.ndarray, np.ndarray]:
        """Full face arrays (x-faces ``(ny, nx+1)``, y-faces ``(ny+1, nx)``)."""
        pin_x, pin_y = domain.pinned_flux
        fx = pin_x.copy()
        fy = pin_y.copy()
        fx[:, 1:] += np.where(domain.active_x, self.px, 0.0)
        fy[1:, :] += np.where(domain.active_y, self.py, 0.0)
        return fx, fy

    def divergence(self, domain: GridDomain) -> np.ndarray:
        fx, fy = self.face_fluxes(domain)
        div = (fx[:, 1:] - fx[:, :-1] + fy[1:, :] - fy[:-1, :]) / domain.dx
        return np.where(domain.mask, div, 0.0)

    def boundary_flux(self, domain: GridDomain) -> np.ndarray:
        """Outward flux on each boundary face, in the domain's face order."""
        fx, fy = self.face_fluxes(domain)
        j, i, d = domain.face_cell[:, 0], domain.face_cell[:, 1], domain.face_dir
        out = np.empty(len(d))
        out[d == 0] = -fx[j[d == 0], i[d == 0]]
        out[d == 1] = fx[j[d == 1], i[d == 1] + 1]
        out[d == 2] = -fy[j[d == 2], i[d == 2]]
        out[d == 3] = fy[j[d == 3] + 1, i[d == 3]]
        return out

    def cell_norm(self, domain: GridDomain) -> np.ndarray:
        px = np.where(domain.active_x, self.px, 0.0)
        py = np.where(domain.active_y, self.py, 0.0)
        return np.hypot(px, py)


@dataclass
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 20000
    check_every: int = 10
    # initial primal step as a multiple of 1 / ||grad||; the dual step follows
    tau_scale: float = 1.0
    # accelerated steps run until the gap is below ``polish_factor * tol``;
    # fixed steps with primal step ``polish_tau_scale / ||grad||`` finish the solve
    polish_factor: float = 10.0
    polish_tau_scale: float = 0.03
    warm_start: DualField | None = None


@dataclass
class SolveReport:
    iterations: int = 0
    rel_gap: float = math.inf
    gap: float = math.inf
    tol: float = 0.0
    converged: bool = False
    max_dual_norm: float = 0.0
    boundary_flux_error: float = 0.0
    alignment_residual: float = 0.0
    fixed_point_residual: float = 0.0
    eps_l2: float = math.inf
    eps_sup: float = math.inf
    scale: float = 1.0
    history: list = field(default_factory=list, repr=False)

    def as_row(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "history"}


# -- discrete operators (numpy; used by diagnostics and tests) ---------------------


def gradient(domain: GridDomain, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward-difference gradient per cell; components on non-interior faces are zero."""
    gx = np.zeros(u.shape)
    gy = np.zeros(u.shape)
    gx[..., :, :-1] = (u[..., :, 1:] - u[..., :, :-1]) / domain.dx
    gy[..., :-1, :] = (u[..., 1:, :] - u[..., :-1, :]) / domain.dx
    return np.where(domain.active_x, gx, 0.0), np.where(domain.active_y, gy, 0.0)


def total_variation(domain: GridDomain, u: np.ndarray) -> float:
    gx, gy = gradient(domain, u)
    return float(np.hypot(gx, gy)[domain.mask].sum() * domain.dx**2)


def boundary_term(domain: GridDomain, u: np.ndarray) -> float:
    """Discrete trace term: ``beta`` times the boundary-adjacent cell value, per face."""
    j, i = domain.face_cell[:, 0], domain.face_cell[:, 1]
    return float(np.sum(domain.beta * u[j, i]) * domain.dx)


def capillary_tv(domain: GridDomain, u: np.ndarray) -> float:
    return total_variation(domain, u) + boundary_term(domain, u)


def energy_value(domain: GridDomain, u: np.ndarray, g: np.ndarray, h: float) -> float:
    """Discrete ``C_beta(u) + 1/(2h) ||u - g||^2``."""
    domain.check_shape(u, "u")
    domain.check_shape(g, "g")
    fid = float(((u - g)[domain.mask] ** 2).sum() * domain.dx**2) / (2 * h)
    return capillary_tv(domain, u) + fid


def dual_value(domain: GridDomain, z: DualField, g: np.ndarray, h: float) -> float:
    """Dual objective ``-<g, div z> - h/2 ||div z||^2`` (physical units)."""
    div = z.divergence(domain)
    m = domain.mask
    return float((-(g * div)[m].sum() - 0.5 * h * (div[m] ** 2).sum()) * domain.dx**2)


def _scale(domain: GridDomain, g: np.ndarray) -> float:
    return max(total_variation(domain, g), domain.area)


def optimality_certificate(domain: GridDomain, w: np.ndarray, z: DualField, g: np.ndarray,
                           h: float, report: SolveReport | None = None) -> SolveReport:
    """Fill the optimality diagnostics for a candidate primal/dual pair.

    * fixed-point residual ``max |w - (g + h div z)|`` (fields are O(1) lengths,
      so the residual is reported unnormalised);
    * largest cell norm of ``z`` over interior faces;
    * largest deviation of the boundary outward flux from ``-beta``;
    * alignment residual ``max (|grad w| - <z, grad w>) / |grad w|`` over cells
      with ``|grad w| > 0.1 max |grad g|``.

    The duality gap is split into its two nonnegative parts, the alignment
    defect ``sum |grad w| - <z, grad w>`` and the fixed-point defect
    ``sum (w - g - h div z)^2 / (2h)``.
    """
    rep = report if report is not None else SolveReport()
    m = domain.mask
    div = z.divergence(domain)
    resid = w - g - h * div
    rep.fixed_point_residual = float(np.abs(resid[m]).max())
    rep.max_dual_norm = float(z.cell_norm(domain)[m].max(initial=0.0))
    if len(domain.beta):
        rep.boundary_flux_error = float(np.abs(z.boundary_flux(domain) + domain.beta).max())
    gx, gy = gradient(domain, w)
    zx = np.where(domain.active_x, z.px, 0.0)
    zy = np.where(domain.active_y, z.py, 0.0)
    gn = np.hypot(gx, gy)
    defect = gn - (zx * gx + zy * gy)
    ggx, ggy = gradient(domain, g)
    gmax = float(np.hypot(ggx, ggy)[m].max(initial=0.0))
    sel = m & (gn > 0.1 * gmax) & (gn > 0)
    rep.alignment_residual = float((defect[sel] / gn[sel]).max(initial=0.0))
    gap = (defect[m].sum() + (resid[m] ** 2).sum() / (2 * h)) * domain.dx**2
    rep.gap = max(float(gap), 0.0)
    rep.scale = _scale(domain, g)
    rep.rel_gap = rep.gap / rep.scale
    rep.eps_l2 = math.sqrt(2 * h * rep.gap)
    rep.eps_sup = rep.eps_l2 / domain.dx
    return rep


# -- primal-dual iteration ---------------------------------------------------------


@numba.njit(cache=True)
def _divergence(px, py, ax, ay, pin_x, pin_y, mask, dx, out):
    ny, nx = mask.shape
    for j in range(ny):
        for i in range(nx):
            if not mask[j, i]:
                out[j, i] = 0.0
                continue
            east = pin_x[j, i + 1] + (px[j, i] if ax[j, i] else 0.0)
            west = pin_x[j, i] + (px[j, i - 1] if i > 0 and ax[j, i - 1] else 0.0)
            north = pin_y[j + 1, i] + (py[j, i] if ay[j, i] else 0.0)
            south = pin_y[j, i] + (py[j - 1, i] if j > 0 and ay[j - 1, i] else 0.0)
            out[j, i] = (east - west + north - south) / dx


@numba.njit(cache=True)
def _gap(u, g, px, py, div, ax, ay, mask, dx, h):
    ny, nx = mask.shape
    align = 0.0
    fixed = 0.0
    for j in range(ny):
        for i in range(nx):
            if not mask[j, i]:
                continue
            gx = (u[j, i + 1] - u[j, i]) / dx if ax[j, i] else 0.0
            gy = (u[j + 1, i] - u[j, i]) / dx if ay[j, i] else 0.0
            zx = px[j, i] if ax[j, i] else 0.0
            zy = py[j, i] if ay[j, i] else 0.0
            align += math.sqrt(gx * gx + gy * gy) - (zx * gx + zy * gy)
            r = u[j, i] - g[j, i] - h * div[j, i]
            fixed += r * r
    return (align + fixed / (2.0 * h)) * dx * dx


@numba.njit(cache=True)
def _iterate(u, ubar, px, py, g, ax, ay, pin_x, pin_y, mask, dx, h, tau, sigma, n_iter, div,
             accelerate):
    ny, nx = mask.shape
    gamma = 1.0 / h
    for _ in range(n_iter):
        # dual ascent and projection onto the unit ball per cell
        for j in range(ny):
            for i in range(nx):
                if not mask[j, i]:
                    continue
                zx = 0.0
                zy = 0.0
                if ax[j, i]:
                    zx = px[j, i] + sigma * (ubar[j, i + 1] - ubar[j, i]) / dx
                if ay[j, i]:
                    zy = py[j, i] + sigma * (ubar[j + 1, i] - ubar[j, i]) / dx
                n = math.sqrt(zx * zx + zy * zy)
                if n > 1.0:
                    zx /= n
                    zy /= n
                px[j, i] = zx
                py[j, i] = zy
        _divergence(px, py, ax, ay, pin_x, pin_y, mask, dx, div)
        theta = 1.0 / math.sqrt(1.0 + 2.0 * gamma * tau) if accelerate else 1.0
        for j in range(ny):
            for i in range(nx):
                if not mask[j, i]:
                    continue
                old = u[j, i]
                new = (old + tau * div[j, i] + tau * g[j, i] / h) / (1.0 + tau / h)
                u[j, i] = new
                ubar[j, i] = new + theta * (new - old)
        if accelerate:
            tau *= theta
            sigma /= theta
    return tau, sigma


def solve_capillary_tv(domain: GridDomain, g: np.ndarray, h: float,
                       cfg: SolverConfig | None = None, z0: DualField | None = None,
                       raise_on_fail: bool = False):
    """Minimize ``C_beta(u) + ||u - g||^2 / (2h)`` on the domain.

    Returns ``(w, z, report)``.  The iteration stops once the relative duality
    gap (gap divided by ``max(TV(g), |Omega|)``) and the fixed-point residual
    ``max |w - g - h div z|`` are both below ``cfg.tol``.  On
    hitting ``max_iter`` the last iterate is returned with ``converged=False``,
    or :class:`NonConvergence` is raised when ``raise_on_fail`` is set.
    """
    cfg = cfg or SolverConfig()
    if h <= 0:
        raise ValueError("time step h must be positive")
    domain.check_shape(g, "g")
    m = domain.mask
    if not np.isfinite(g[m]).all():
        raise ValueError("data g must be finite")
    # constants do not affect the minimizer up to a shift; centring keeps rounding uniform
    shift = float(np.median(g[m]))
    gc = np.where(m, g - shift, 0.0)
    ax = np.ascontiguousarray(domain.active_x)
    ay = np.ascontiguousarray(domain.active_y)
    pin_x, pin_y = (np.ascontiguousarray(a) for a in domain.pinned_flux)
    mask = np.ascontiguousarray(m)
    dx = domain.dx

    z = (z0 or cfg.warm_start or DualField.zeros(domain)).copy()
    z.px = np.ascontiguousarray(np.where(ax, z.px, 0.0), dtype=float)
    z.py = np.ascontiguousarray(np.where(ay, z.py, 0.0), dtype=float)
    nrm = np.maximum(np.hypot(z.px, z.py), 1.0)
    z.px /= nrm
    z.py /= nrm
    div = np.zeros(g.shape)
    _divergence(z.px, z.py, ax, ay, pin_x, pin_y, mask, dx, div)
    u = np.where(m, gc + h * div, 0.0)
    ubar = u.copy()

    L = math.sqrt(8.0) / dx
    tau = cfg.tau_scale / L
    sigma = 1.0 / (tau * L * L)
    report = SolveReport(tol=cfg.tol, scale=_scale(domain, g))
    accelerate = True
    it = 0
    while True:
        gap = _gap(u, gc, z.px, z.py, div, ax, ay, mask, dx, h)
        rel = gap / report.scale
        report.history.append((it, rel))
        if accelerate and rel <= cfg.polish_factor * cfg.tol:
            accelerate = False
            tau = cfg.polish_tau_scale / L
            sigma = 1.0 / (tau * L * L)
            ubar[:] = u
        if not accelerate and rel <= cfg.tol:
            if np.abs(u - gc - h * div)[mask].max() <= cfg.tol:
                break
        if it >= cfg.max_iter:
            break
        n = min(cfg.check_every, cfg.max_iter - it)
        tau, sigma = _iterate(u, ubar, z.px, z.py, gc, ax, ay, pin_x, pin_y, mask, dx, h,
                              tau, sigma, n, div, accelerate)
        it += n
    w = np.where(m, u + shift, 0.0)
    report.iterations = it
    optimality_certificate(domain, w, z, g, h, report)
    report.converged = report.rel_gap <= cfg.tol and report.fixed_point_residual <= 10 * cfg.tol
    if not report.converged and raise_on_fail:
        raise NonConvergence(report, w, z)
    return w, z, report

"""Cell-centred 2-D domains with boundary faces, outward normals and contact data.

Arrays are indexed ``[j, i]`` with ``j`` along y and ``i`` along x; the centre of
cell ``(j, i)`` sits at ``(x0 + (i + 0.5) dx, y0 + (j + 0.5) dx)``.  The boundary
of the domain is the set of faces separating a masked-in cell from a cell that is
masked out (or lies beyond the grid edge).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import ndimage

# face direction seen from the interior cell
MINUS_X, PLUS_X, MINUS_Y, PLUS_Y = 0, 1, 2, 3
WALL_NAMES = {"left": MINUS_X, "right": PLUS_X, "bottom": MINUS_Y, "top": PLUS_Y}
_AXIS_NORMALS = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])


class DomainError(ValueError):
    """Invalid domain parameters or contact-angle data."""


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Discretised domain Ω.

    ``beta`` holds one contact value per boundary face (same order as
    ``face_cell``); ``normals`` are unit outward normals of the analytic shape
    evaluated at the face centres.
    """

    nx: int
    ny: int
    dx: float
    x0: float
    y0: float
    mask: np.ndarray
    face_cell: np.ndarray  # (nb, 2) int, (j, i) of the interior cell
    face_dir: np.ndarray  # (nb,) int, one of MINUS_X .. PLUS_Y
    normals: np.ndarray  # (nb, 2)
    beta: np.ndarray  # (nb,)
    shape: str
    params: dict = field(default_factory=dict)
    convex: bool = True

    def __post_init__(self):
        for name in ("mask", "face_cell", "face_dir", "normals", "beta"):
            getattr(self, name).setflags(write=False)

    # -- geometry ---------------------------------------------------------
    @property
    def n_cells(self) -> int:
        return int(self.mask.sum())

    @property
    def area(self) -> float:
        return self.n_cells * self.dx**2

    @property
    def beta_max(self) -> float:
        return float(np.abs(self.beta).max()) if self.beta.size else 0.0

    @cached_property
    def xc(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    @cached_property
    def yc(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dx

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinate arrays ``(X, Y)`` of shape ``(ny, nx)``."""
        X, Y = np.meshgrid(self.xc, self.yc)
        X.setflags(write=False)
        Y.setflags(write=False)
        return X, Y

    @cached_property
    def face_centers(self) -> np.ndarray:
        j, i = self.face_cell[:, 0], self.face_cell[:, 1]
        c = np.stack([self.xc[i], self.yc[j]], axis=1)
        return c + 0.5 * self.dx * _AXIS_NORMALS[self.face_dir]

    @property
    def axis_normals(self) -> np.ndarray:
        return _AXIS_NORMALS[self.face_dir]

    @property
    def perimeter(self) -> float:
        """Discrete boundary length (staircase faces times ``dx``)."""
        return len(self.face_dir) * self.dx

    # -- staggered face structure used by the solver ------------------------
    @cached_property
    def active_x(self) -> np.ndarray:
        """Cells whose +x face is an interior face."""
        a = np.zeros_like(self.mask)
        a[:, :-1] = self.mask[:, :-1] & self.mask[:, 1:]
        a.setflags(write=False)
        return a

    @cached_property
    def active_y(self) -> np.ndarray:
        """Cells whose +y face is an interior face."""
        a = np.zeros_like(self.mask)
        a[:-1, :] = self.mask[:-1, :] & self.mask[1:, :]
        a.setflags(write=False)
        return a

    @cached_property
    def pinned_flux(self) -> tuple[np.ndarray, np.ndarray]:
        """Boundary fluxes on the x-face grid ``(ny, nx+1)`` and y-face grid ``(ny+1, nx)``.

        Fluxes are stored in the +axis convention, so a face whose outward
        normal points along -axis stores ``+beta`` and one along +axis stores
        ``-beta``; either way the outward flux equals ``-beta``.
        """
        fx = np.zeros((self.ny, self.nx + 1))
        fy = np.zeros((self.ny + 1, self.nx))
        j, i = self.face_cell[:, 0], self.face_cell[:, 1]
        d = self.face_dir
        b = self.beta
        m = d == MINUS_X
        fx[j[m], i[m]] = b[m]
        m = d == PLUS_X
        fx[j[m], i[m] + 1] = -b[m]
        m = d == MINUS_Y
        fy[j[m], i[m]] = b[m]
        m = d == PLUS_Y
        fy[j[m] + 1, i[m]] = -b[m]
        fx.setflags(write=False)
        fy.setflags(write=False)
        return fx, fy

    @cached_property
    def boundary_source(self) -> np.ndarray:
        """Per-cell sum of ``beta`` over its boundary faces, divided by ``dx``."""
        q = np.zeros((self.ny, self.nx))
        np.add.at(q, (self.face_cell[:, 0], self.face_cell[:, 1]), self.beta)
        q /= self.dx
        q.setflags(write=False)
        return q

    def wall_faces(self, wall: str) -> np.ndarray:
        """Indices of boundary faces on one side ("left", "right", "bottom", "top")."""
        return np.flatnonzero(self.face_dir == WALL_NAMES[wall])

    def check_shape(self, arr: np.ndarray, name: str = "field") -> None:
        if arr.shape[-2:] != (self.ny, self.nx):
            raise DomainError(f"{name} has shape {arr.shape}, domain is {(self.ny, self.nx)}")

    def signature(self) -> dict:
        """Plain description used in headers and config hashes."""
        return {"shape": self.shape, "nx": self.nx, "ny": self.ny, "dx": self.dx,
                "x0": self.x0, "y0": self.y0, **self.params}


@dataclass(frozen=True, eq=False)
class RegionSet:
    """A relatively closed subset of the closed domain, one flag per cell.

    ``levels`` optionally carries a level function with ``levels <= 0`` exactly
    on members; when present it locates the interface to sub-cell accuracy.
    """

    membership: np.ndarray
    levels: np.ndarray | None = None

    def __post_init__(self):
        if self.levels is not None:
            if self.levels.shape != self.membership.shape:
                raise DomainError("levels and membership differ in shape")

    @classmethod
    def from_levels(cls, levels: np.ndarray, mask: np.ndarray) -> "RegionSet":
        return cls(membership=(levels <= 0) & mask, levels=levels)

    def is_empty(self, domain: GridDomain) -> bool:
        return not (self.membership & domain.mask).any()

    def is_full(self, domain: GridDomain) -> bool:
        return bool((self.membership | ~domain.mask).all())


# -- construction -------------------------------------------------------------


def _boundary_faces(mask: np.ndarray):
    padded = np.pad(mask, 1, constant_values=False)
    inner = padded[1:-1, 1:-1]
    cells, dirs = [], []
    neighbours = {
        MINUS_X: padded[1:-1, :-2],
        PLUS_X: padded[1:-1, 2:],
        MINUS_Y: padded[:-2, 1:-1],
        PLUS_Y: padded[2:, 1:-1],
    }
    for d, nb in neighbours.items():
        j, i = np.nonzero(inner & ~nb)
        cells.append(np.stack([j, i], axis=1))
        dirs.append(np.full(len(j), d))
    cells = np.concatenate(cells)
    dirs = np.concatenate(dirs)
    order = np.lexsort((dirs, cells[:, 1], cells[:, 0]))
    return cells[order].astype(np.int64), dirs[order].astype(np.int64)


def _finish(mask, dx, x0, y0, shape, params, normal_fn=None, convex=True) -> GridDomain:
    if not mask.any():
        raise DomainError("domain mask is empty")
    _, ncomp = ndimage.label(mask)
    if ncomp != 1:
        raise DomainError(f"domain mask has {ncomp} 4-connected components")
    cells, dirs = _boundary_faces(mask)
    ny, nx = mask.shape
    proto = GridDomain(nx=nx, ny=ny, dx=dx, x0=x0, y0=y0, mask=mask, face_cell=cells,
                       face_dir=dirs, normals=_AXIS_NORMALS[dirs].copy(),
                       beta=np.zeros(len(dirs)), shape=shape, params=params, convex=convex)
    if normal_fn is not None:
        n = normal_fn(proto.face_centers)
        n = n / np.linalg.norm(n, axis=1, keepdims=True)
        proto = dataclasses.replace(proto, normals=n)
    return proto


def build_strip(width: float, height: float, nx: int, y0: float | None = None,
                x0: float | None = None) -> GridDomain:
    """Rectangle ``[x0, x0 + width] x [y0, y0 + height]``.

    ``x0`` defaults to ``-width/2`` and ``y0`` to ``-height/2``.

    The cell size is ``width / nx`` and the row count is ``round(height / dx)``.
    """
    if width <= 0 or height <= 0:
        raise DomainError("strip dimensions must be positive")
    if nx < 8:
        raise DomainError("strip needs nx >= 8")
    dx = width / nx
    ny = int(round(height / dx))
    if ny < 1:
        raise DomainError("strip height below one cell")
    y0 = -height / 2 if y0 is None else float(y0)
    x0 = -width / 2 if x0 is None else float(x0)
    mask = np.ones((ny, nx), dtype=bool)
    return _finish(mask, dx, x0, y0, "strip",
                   {"width": float(width), "height": float(height)})


def build_disk(radius: float, n: int, center: Sequence[float] = (0.0, 0.0)) -> GridDomain:
    """Disk of the given radius on an ``n x n`` grid covering its bounding box."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    if n < 16:
        raise DomainError("disk needs n >= 16")
    cx, cy = float(center[0]), float(center[1])
    dx = 2 * radius / n
    x0, y0 = cx - radius, cy - radius
    c = x0 + (np.arange(n) + 0.5) * dx
    X, Y = np.meshgrid(c, y0 - x0 + c)
    mask = (X - cx) ** 2 + (Y - cy) ** 2 < radius**2

    def normal(p):
        return p - np.array([cx, cy])

    return _finish(mask, dx, x0, y0, "disk",
                   {"radius": float(radius), "center": [cx, cy]}, normal_fn=normal)


def build_polygon(vertices: Sequence[Sequence[float]], n: int) -> GridDomain:
    """Convex polygon (vertices counter-clockwise) on an ``n``-column grid."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise DomainError("polygon needs at least three 2-D vertices")
    if n < 16:
        raise DomainError("polygon needs n >= 16")
    edges = np.roll(v, -1, axis=0) - v
    cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
    if not (cross > 0).all():
        raise DomainError("polygon must be convex and counter-clockwise")
    out_n = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
    out_n /= np.linalg.norm(out_n, axis=1, keepdims=True)
    offs = np.einsum("ij,ij->i", out_n, v)
    lo, hi = v.min(axis=0), v.max(axis=0)
    dx = (hi[0] - lo[0]) / n
    ny = int(math.ceil((hi[1] - lo[1]) / dx))
    xc = lo[0] + (np.arange(n) + 0.5) * dx
    yc = lo[1] + (np.arange(ny) + 0.5) * dx
    X, Y = np.meshgrid(xc, yc)
    pts = np.stack([X, Y], axis=-1)
    mask = ((pts @ out_n.T) < offs).all(axis=-1)

    def normal(p):
        # outward normal of the nearest edge (largest signed offset)
        k = np.argmax(p @ out_n.T - offs, axis=1)
        return out_n[k]

    return _finish(mask, dx, lo[0], lo[1], "polygon",
                   {"vertices": v.tolist()}, normal_fn=normal)


def build_from_mask(mask: np.ndarray, dx: float, x0: float = 0.0, y0: float = 0.0) -> GridDomain:
    """Arbitrary 4-connected mask; normals are the axis normals of the faces.

    Convexity is not checked and the domain is flagged nonconvex.
    """
    if dx <= 0:
        raise DomainError("dx must be positive")
    return _finish(np.asarray(mask, dtype=bool).copy(), float(dx), float(x0), float(y0),
                   "mask", {}, convex=False)


BetaSpec = float | Mapping[str, float] | np.ndarray | Callable[[np.ndarray, np.ndarray], np.ndarray]


def set_beta(domain: GridDomain, spec: BetaSpec) -> GridDomain:
    """Return a copy of ``domain`` carrying contact values ``beta = cos(theta)``.

    ``spec`` may be a constant, a mapping of wall names ("left", "right",
    "bottom", "top", plus "else" for the rest) to constants, an array with one
    value per boundary face, or a callable ``f(face_centers, normals)``.
    Values with ``|beta| >= 1`` are rejected.
    """
    nb = len(domain.face_dir)
    if callable(spec):
        beta = np.asarray(spec(domain.face_centers, domain.normals), dtype=float)
    elif isinstance(spec, Mapping):
        unknown = set(spec) - set(WALL_NAMES) - {"else"}
        if unknown:
            raise DomainError(f"unknown wall names {sorted(unknown)}")
        beta = np.full(nb, float(spec.get("else", 0.0)))
        for wall, d in WALL_NAMES.items():
            if wall in spec:
                beta[domain.face_dir == d] = float(spec[wall])
    elif np.ndim(spec) == 0:
        beta = np.full(nb, float(spec))
    else:
        beta = np.asarray(spec, dtype=float).copy()
    if beta.shape != (nb,):
        raise DomainError(f"beta must have one value per boundary face ({nb}), got {beta.shape}")
    if not np.isfinite(beta).all():
        raise DomainError("beta must be finite")
    if nb and np.abs(beta).max() >= 1:
        raise DomainError(f"contact data requires |beta| < 1, got max {np.abs(beta).max():.6g}")
    return dataclasses.replace(domain, beta=beta)

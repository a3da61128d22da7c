"""Signed geodesic distance to a region, measured along paths inside the closed domain.

The distance is negative inside the region and positive outside.  The main
routine is a first-order fast-marching solver restricted to the domain mask and
seeded on the cells adjacent to the discrete interface.  A Dijkstra solver on the
8-connected cell graph is kept as an independent check.
"""

from __future__ import annotations

import heapq
import math
import weakref

import numba
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .grid import DomainError, GridDomain, RegionSet

# relative overestimate of 8-connected graph paths against Euclidean length
OCTILE_METRICATION = math.sqrt(4 - 2 * math.sqrt(2)) - 1  # 0.0824
# first-order fast marching on a 4-point stencil overestimates diagonal distances
FMM_METRICATION = 0.1
# width (in cells) of the band where distances come from the reconstructed interface
NEAR_BAND = 4.0
NEAR_BAND_NONCONVEX = 1.5

_diameter_cache: "weakref.WeakKeyDictionary[GridDomain, float]" = weakref.WeakKeyDictionary()


@numba.njit(cache=True)
def _interface_seed(mask, member, levels, use_levels, dx):
    """Unsigned sub-cell distance on cells touching the interface, ``inf`` elsewhere."""
    ny, nx = mask.shape
    out = np.full((ny, nx), np.inf)
    for j in range(ny):
        for i in range(nx):
            if not mask[j, i]:
                continue
            tx = np.inf
            ty = np.inf
            for k in range(4):
                jj = j
                ii = i
                if k == 0:
                    ii = i - 1
                elif k == 1:
                    ii = i + 1
                elif k == 2:
                    jj = j - 1
                else:
                    jj = j + 1
                if jj < 0 or jj >= ny or ii < 0 or ii >= nx or not mask[jj, ii]:
                    continue
                if member[jj, ii] == member[j, i]:
                    continue
                if use_levels:
                    a = levels[j, i]
                    b = levels[jj, ii]
                    theta = a / (a - b)
                    if theta < 0.0:
                        theta = 0.0
                    elif theta > 1.0:
                        theta = 1.0
                else:
                    theta = 0.5
                if k < 2:
                    tx = min(tx, theta)
                else:
                    ty = min(ty, theta)
            if tx < np.inf and ty < np.inf:
                if tx == 0.0 or ty == 0.0:
                    out[j, i] = 0.0
                else:
                    out[j, i] = dx * tx * ty / math.sqrt(tx * tx + ty * ty)
            elif tx < np.inf:
                out[j, i] = dx * tx
            elif ty < np.inf:
                out[j, i] = dx * ty
    return out


@numba.njit(cache=True)
def _fast_march(mask, seed, dx):
    """First-order fast marching from the finite entries of ``seed``, which stay fixed."""
    ny, nx = mask.shape
    dist = seed.copy()
    fixed = seed < np.inf
    known = np.zeros((ny, nx), dtype=np.bool_)
    heap = [(0.0, 0)]
    heap.pop()
    for j in range(ny):
        for i in range(nx):
            if mask[j, i] and dist[j, i] < np.inf:
                heapq.heappush(heap, (dist[j, i], j * nx + i))
    while len(heap) > 0:
        d, idx = heapq.heappop(heap)
        j = idx // nx
        i = idx - j * nx
        if known[j, i] or d > dist[j, i]:
            continue
        known[j, i] = True
        for k in range(4):
            jj = j
            ii = i
            if k == 0:
                ii = i - 1
            elif k == 1:
                ii = i + 1
            elif k == 2:
                jj = j - 1
            else:
                jj = j + 1
            if jj < 0 or jj >= ny or ii < 0 or ii >= nx:
                continue
            if not mask[jj, ii] or known[jj, ii] or fixed[jj, ii]:
                continue
            # upwind values along each axis from accepted neighbours
            a = np.inf
            if ii > 0 and mask[jj, ii - 1] and known[jj, ii - 1]:
                a = dist[jj, ii - 1]
            if ii < nx - 1 and mask[jj, ii + 1] and known[jj, ii + 1]:
                a = min(a, dist[jj, ii + 1])
            b = np.inf
            if jj > 0 and mask[jj - 1, ii] and known[jj - 1, ii]:
                b = dist[jj - 1, ii]
            if jj < ny - 1 and mask[jj + 1, ii] and known[jj + 1, ii]:
                b = min(b, dist[jj + 1, ii])
            if abs(a - b) >= dx or a == np.inf or b == np.inf:
                cand = min(a, b) + dx
            else:
                cand = 0.5 * (a + b + math.sqrt(2.0 * dx * dx - (a - b) * (a - b)))
            if cand < dist[jj, ii]:
                dist[jj, ii] = cand
                heapq.heappush(heap, (cand, jj * nx + ii))
    return dist


@numba.njit(cache=True)
def _seg_dist(px, py, ax, ay, bx, by):
    vx = bx - ax
    vy = by - ay
    ll = vx * vx + vy * vy
    t = 0.0
    if ll > 0.0:
        t = ((px - ax) * vx + (py - ay) * vy) / ll
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    qx = ax + t * vx - px
    qy = ay + t * vy - py
    return math.sqrt(qx * qx + qy * qy)


@numba.njit(cache=True)
def _segments(L, defined):
    """Marching-squares segments of the zero level of ``L`` in grid units, shape (n, 4)."""
    ny, nx = L.shape
    segs = np.empty(((ny - 1) * (nx - 1) * 2, 4))
    n = 0
    cj = np.array([0, 0, 1, 1])
    ci = np.array([0, 1, 1, 0])
    px = np.zeros(4)
    py = np.zeros(4)
    for j in range(ny - 1):
        for i in range(nx - 1):
            ok = True
            for c in range(4):
                if not defined[j + cj[c], i + ci[c]]:
                    ok = False
            if not ok:
                continue
            npts = 0
            for e in range(4):
                ja = j + cj[e]
                ia = i + ci[e]
                jb = j + cj[(e + 1) % 4]
                ib = i + ci[(e + 1) % 4]
                a = L[ja, ia]
                b = L[jb, ib]
                if (a <= 0.0) != (b <= 0.0):
                    th = a / (a - b)
                    if th < 0.0:
                        th = 0.0
                    elif th > 1.0:
                        th = 1.0
                    px[npts] = ia + th * (ib - ia)
                    py[npts] = ja + th * (jb - ja)
                    npts += 1
            if npts == 2:
                segs[n, 0] = px[0]
                segs[n, 1] = py[0]
                segs[n, 2] = px[1]
                segs[n, 3] = py[1]
                n += 1
            elif npts == 4:
                # saddle: pair the crossings so the two segments are shorter
                l01 = math.hypot(px[0] - px[1], py[0] - py[1]) + math.hypot(px[2] - px[3], py[2] - py[3])
                l12 = math.hypot(px[1] - px[2], py[1] - py[2]) + math.hypot(px[3] - px[0], py[3] - py[0])
                for s in range(2):
                    if l01 <= l12:
                        k0 = 2 * s
                        k1 = 2 * s + 1
                    else:
                        k0 = 1 + 2 * s
                        k1 = (2 + 2 * s) % 4
                    segs[n, 0] = px[k0]
                    segs[n, 1] = py[k0]
                    segs[n, 2] = px[k1]
                    segs[n, 3] = py[k1]
                    n += 1
    return segs[:n]


@numba.njit(cache=True)
def _near_field(segs, mask, band):
    """Distance (in cells) from cell centres to the segments, kept within ``band`` cells."""
    ny, nx = mask.shape
    out = np.full((ny, nx), np.inf)
    R = int(math.ceil(band)) + 1
    for s in range(segs.shape[0]):
        ax = segs[s, 0]
        ay = segs[s, 1]
        bx = segs[s, 2]
        by = segs[s, 3]
        j = int(math.floor(min(ay, by)))
        i = int(math.floor(min(ax, bx)))
        for jj in range(max(0, j - R), min(ny, j + R + 2)):
            for ii in range(max(0, i - R), min(nx, i + R + 2)):
                if not mask[jj, ii]:
                    continue
                d = _seg_dist(ii, jj, ax, ay, bx, by)
                if d < out[jj, ii]:
                    out[jj, ii] = d
    for j in range(ny):
        for i in range(nx):
            if out[j, i] > band:
                out[j, i] = np.inf
    return out


def _ghost_extend(mask: np.ndarray, levels: np.ndarray):
    """Pad by two cells and fill the ghost layer next to the mask by linear extrapolation along each axis."""
    ny, nx = mask.shape
    m = np.zeros((ny + 4, nx + 4), dtype=bool)
    m[2:-2, 2:-2] = mask
    L = np.zeros(m.shape)
    L[2:-2, 2:-2] = np.where(mask, levels, 0.0)
    acc = np.zeros(m.shape)
    cnt = np.zeros(m.shape)
    for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        # ghost g, first inside cell n = g - (dj, di), second n2 = g - 2 (dj, di)
        n = np.roll(m, (dj, di), axis=(0, 1))
        n2 = np.roll(m, (2 * dj, 2 * di), axis=(0, 1))
        Ln = np.roll(L, (dj, di), axis=(0, 1))
        Ln2 = np.roll(L, (2 * dj, 2 * di), axis=(0, 1))
        g = ~m & n
        val = np.where(n2, 2 * Ln - Ln2, Ln)
        acc[g] += val[g]
        cnt[g] += 1
    ghost = cnt > 0
    L[ghost] = acc[ghost] / cnt[ghost]
    return L, m | ghost, m


def near_field_distance(domain: GridDomain, levels: np.ndarray, band: float) -> np.ndarray:
    """Unsigned Euclidean distance to the reconstructed zero level within ``band`` cells, else ``inf``."""
    L, defined, m = _ghost_extend(domain.mask, levels)
    d = _near_field(_segments(L, defined), m, float(band))
    return d[2:-2, 2:-2] * domain.dx


def interface_segments(domain: GridDomain, levels: np.ndarray, extend: bool = False) -> np.ndarray:
    """Zero-level segments ``(x0, y0, x1, y1)`` in physical coordinates.

    With ``extend`` the level field is extrapolated one ghost cell beyond the
    mask, so segments reach half a cell past the outermost cell centres.
    """
    if extend:
        L, defined, _ = _ghost_extend(domain.mask, levels)
        off = 2
    else:
        L = np.ascontiguousarray(np.where(domain.mask, levels, 0.0), dtype=float)
        defined = np.ascontiguousarray(domain.mask)
        off = 0
    s = _segments(L, defined)
    out = np.empty_like(s)
    out[:, 0::2] = domain.x0 + (s[:, 0::2] - off + 0.5) * domain.dx
    out[:, 1::2] = domain.y0 + (s[:, 1::2] - off + 0.5) * domain.dx
    return out


def interface_length(domain: GridDomain, levels: np.ndarray) -> float:
    """Length of the piecewise-linear zero level of ``levels`` inside the mask."""
    s = interface_segments(domain, levels)
    return float(np.hypot(s[:, 2] - s[:, 0], s[:, 3] - s[:, 1]).sum())


def geodesic_diameter(domain: GridDomain) -> float:
    """Approximate geodesic diameter of the mask by a double fast-marching sweep."""
    if domain in _diameter_cache:
        return _diameter_cache[domain]
    mask = np.ascontiguousarray(domain.mask)
    start = np.argwhere(mask)[0]
    diam = 0.0
    for _ in range(2):
        seed = np.full(mask.shape, np.inf)
        seed[start[0], start[1]] = 0.0
        d = _fast_march(mask, seed, domain.dx)
        d = np.where(mask, d, -np.inf)
        start = np.unravel_index(np.argmax(d), d.shape)
        diam = max(diam, float(d[start]))
    diam = max(diam, domain.dx)
    _diameter_cache[domain] = diam
    return diam


def _check(domain: GridDomain, region: RegionSet) -> np.ndarray:
    domain.check_shape(region.membership, "region")
    member = region.membership & domain.mask
    if region.levels is not None:
        lv = region.levels
        if ((lv <= 0) != member)[domain.mask].any():
            raise DomainError("region levels disagree with membership")
    return member


def signed_geodesic_distance(domain: GridDomain, region: RegionSet,
                             band: float | None = None) -> np.ndarray:
    """Signed geodesic distance ``d_{Omega,E}`` on the domain cells.

    Negative on members, positive elsewhere; values outside the mask are zero.
    An empty region gives ``+D`` everywhere and a full region ``-D``, with ``D``
    the geodesic diameter of the mask.

    When the region carries ``levels``, cells within ``band`` cells of the
    interface get their exact distance to the piecewise-linear zero level of
    ``levels`` (marching squares, with one layer of linearly extrapolated ghost
    values so the interface reaches the wall).  The default band is
    ``NEAR_BAND`` on convex domains and ``NEAR_BAND_NONCONVEX`` otherwise, where
    straight segments may leave the domain.  Without levels the interface sits
    half-way between cells.  Fast marching continues from these values.
    """
    member = _check(domain, region)
    mask = np.ascontiguousarray(domain.mask)
    D = geodesic_diameter(domain)
    if not member.any():
        return np.where(mask, D, 0.0)
    if (member | ~mask).all():
        return np.where(mask, -D, 0.0)
    use_levels = region.levels is not None
    levels = np.ascontiguousarray(region.levels if use_levels else np.zeros(mask.shape), dtype=float)
    seed = _interface_seed(mask, np.ascontiguousarray(member), levels, use_levels, domain.dx)
    if use_levels:
        if band is None:
            band = NEAR_BAND if domain.convex else NEAR_BAND_NONCONVEX
        if band > 0:
            near = near_field_distance(domain, levels, band)
            seed = np.where(np.isfinite(near), near, seed)
    dist = _fast_march(mask, seed, domain.dx)
    dist = np.minimum(dist, D)
    return np.where(mask, np.where(member, -dist, dist), 0.0)


def _cell_graph(domain: GridDomain):
    mask = domain.mask
    ny, nx = mask.shape
    index = -np.ones(mask.shape, dtype=np.int64)
    index[mask] = np.arange(mask.sum())
    rows, cols, w = [], [], []
    for dj, di, length in ((0, 1, 1.0), (1, 0, 1.0), (1, 1, math.sqrt(2)), (1, -1, math.sqrt(2))):
        a = index[: ny - dj, max(0, -di): nx - max(0, di)]
        b = index[dj:, max(0, di): nx - max(0, -di)]
        ok = (a >= 0) & (b >= 0)
        rows.append(a[ok])
        cols.append(b[ok])
        w.append(np.full(ok.sum(), length * domain.dx))
    rows, cols, w = map(np.concatenate, (rows, cols, w))
    n = int(mask.sum())
    g = coo_matrix((np.concatenate([w, w]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
                   shape=(n, n)).tocsr()
    return g, index


def dijkstra_distance_oracle(domain: GridDomain, region: RegionSet) -> np.ndarray:
    """Signed distance from shortest paths on the 8-connected cell graph.

    Edge lengths are ``dx`` and ``sqrt(2) dx``; the interface sits half a cell
    from the centres on either side, so a cell's distance is the graph distance
    to the nearest cell of the opposite kind minus ``dx / 2``.  Sub-cell levels
    are ignored.
    """
    member = _check(domain, region)
    mask = domain.mask
    D = geodesic_diameter(domain)
    if not member.any():
        return np.where(mask, D, 0.0)
    if (member | ~mask).all():
        return np.where(mask, -D, 0.0)
    g, index = _cell_graph(domain)
    flat_member = member[mask]
    ids = np.arange(len(flat_member))
    to_in = dijkstra(g, indices=ids[flat_member], min_only=True)
    to_out = dijkstra(g, indices=ids[~flat_member], min_only=True)
    signed = np.where(flat_member, -(to_out - 0.5 * domain.dx), to_in - 0.5 * domain.dx)
    signed = np.clip(signed, -D, D)
    out = np.zeros(mask.shape)
    out[mask] = signed
    return out

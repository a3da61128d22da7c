import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capillary_mm.grid import (MINUS_X, PLUS_X, DomainError, RegionSet, build_disk, build_from_mask,
                               build_polygon, build_strip, set_beta)


def test_strip_small_dimensions_and_wall_normals():
    d = build_strip(2, 12, 8)
    assert d.dx == pytest.approx(0.25)
    assert (d.ny, d.nx) == (48, 8)
    left = d.wall_faces("left")
    right = d.wall_faces("right")
    assert len(left) == len(right) == 48
    np.testing.assert_array_equal(d.normals[left], np.tile([-1.0, 0.0], (48, 1)))
    np.testing.assert_array_equal(d.normals[right], np.tile([1.0, 0.0], (48, 1)))


def test_strip_cell_count():
    d = build_strip(2, 12, 128)
    assert (d.nx, d.ny) == (128, 768)
    assert d.n_cells == 128 * 768


@pytest.mark.parametrize("w,h,n", [(-1, 2, 16), (2, 0, 16), (2, 2, 4)])
def test_strip_rejects_bad_input(w, h, n):
    with pytest.raises(DomainError):
        build_strip(w, h, n)


def test_strip_origin_defaults_and_override():
    d = build_strip(2, 4, 16)
    assert (d.x0, d.y0) == (-1.0, -2.0)
    d = build_strip(2, 4, 16, y0=0.0, x0=3.0)
    assert d.xc[0] == pytest.approx(3.0 + d.dx / 2)
    assert d.yc[0] == pytest.approx(d.dx / 2)


def test_disk_cell_count_close_to_area():
    d = build_disk(1.0, 64)
    assert abs(d.n_cells - math.pi * 32**2) / (math.pi * 32**2) < 0.05


def test_disk_normals_match_radial_direction():
    d = build_disk(1.0, 64)
    c = d.face_centers
    radial = c / np.linalg.norm(c, axis=1, keepdims=True)
    ang = np.arccos(np.clip(np.einsum("ij,ij->i", d.normals, radial), -1, 1))
    assert ang.max() <= 2 * d.dx


def test_disk_rejects_coarse_grid():
    with pytest.raises(DomainError):
        build_disk(1.0, 4)


def test_boundary_faces_separate_inside_from_outside():
    d = build_disk(1.0, 48)
    padded = np.pad(d.mask, 1)
    step = {0: (0, -1), 1: (0, 1), 2: (-1, 0), 3: (1, 0)}
    for (j, i), k in zip(d.face_cell, d.face_dir):
        dj, di = step[int(k)]
        assert d.mask[j, i]
        assert not padded[j + 1 + dj, i + 1 + di]


def test_normals_are_unit():
    for d in (build_disk(1.0, 32), build_polygon([(0, 0), (2, 0), (1, 1.5)], 32), build_strip(2, 2, 16)):
        assert np.abs(np.linalg.norm(d.normals, axis=1) - 1).max() <= 1e-12


def test_polygon_rejects_clockwise():
    with pytest.raises(DomainError):
        build_polygon([(0, 0), (1, 1.5), (2, 0)], 32)


def test_disconnected_mask_rejected():
    m = np.zeros((10, 10), bool)
    m[1:3, 1:3] = True
    m[6:8, 6:8] = True
    with pytest.raises(DomainError):
        build_from_mask(m, 0.1)


def test_constant_beta():
    d = set_beta(build_strip(2, 2, 16), 1 / math.sqrt(2))
    np.testing.assert_allclose(d.beta, 0.70710678118654752)
    assert d.beta_max == pytest.approx(1 / math.sqrt(2))


def test_two_sided_beta_table():
    b = 1 / math.sqrt(2)
    d = set_beta(build_strip(2, 2, 16), {"left": -b, "right": b, "else": 0.0})
    assert np.all(d.beta[d.face_dir == MINUS_X] == -b)
    assert np.all(d.beta[d.face_dir == PLUS_X] == b)
    assert np.all(d.beta[d.face_dir >= 2] == 0.0)


@pytest.mark.parametrize("spec", [1.0, -1.0, {"left": 1.2}, {"side": 0.1}, np.zeros(3)])
def test_beta_rejects_invalid(spec):
    with pytest.raises(DomainError):
        set_beta(build_strip(2, 2, 16), spec)


def test_beta_callable_uses_face_geometry():
    d = set_beta(build_disk(1.0, 32), lambda c, n: 0.5 * n[:, 0])
    np.testing.assert_allclose(d.beta, 0.5 * d.normals[:, 0])


def test_pinned_flux_is_minus_beta_outward():
    d = set_beta(build_strip(2, 2, 16), {"left": 0.3, "right": -0.2, "bottom": 0.1, "top": 0.4})
    fx, fy = d.pinned_flux
    assert np.all(fx[:, 0] == 0.3)     # outward (-x) flux is -0.3
    assert np.all(fx[:, -1] == 0.2)    # outward (+x) flux is +0.2 = -beta
    assert np.all(fy[0, :] == 0.1)
    assert np.all(fy[-1, :] == -0.4)


def test_region_from_levels():
    d = build_strip(2, 2, 16)
    X, Y = d.coords
    r = RegionSet.from_levels(Y - 0.1, d.mask)
    assert r.membership.sum() == 16 * 9
    assert not r.is_empty(d) and not r.is_full(d)


@given(st.integers(8, 40), st.floats(0.5, 4.0), st.floats(0.5, 4.0))
def test_strip_area_matches_row_rounding(nx, w, h):
    d = build_strip(w, h, nx)
    assert d.area == pytest.approx(nx * round(h * nx / w) * (w / nx) ** 2)
    assert d.perimeter == pytest.approx(2 * (d.nx + d.ny) * d.dx)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capillary_mm.analytic import shrinking_circle_radius
from capillary_mm.distance import signed_geodesic_distance
from capillary_mm.experiments import random_smooth_field
from capillary_mm.grid import RegionSet, build_disk, build_strip, set_beta
from capillary_mm.solver import (DualField, NonConvergence, SolverConfig, boundary_term, dual_value,
                                 energy_value, gradient, optimality_certificate, solve_capillary_tv,
                                 total_variation)

TIGHT = SolverConfig(tol=1e-8, max_iter=100000)


def test_constant_data_is_fixed():
    d = build_strip(2, 2, 32)
    g = np.where(d.mask, 3.0, 0.0)
    w, z, rep = solve_capillary_tv(d, g, 0.05)
    assert rep.converged
    assert np.abs(w - 3.0)[d.mask].max() <= 1e-12


@pytest.mark.parametrize("b", [0.5, -0.3])
def test_wall_contact_lowers_constant(b):
    """``g = 0`` with contact on the side walls: w is the constant minimizing ``2 b c + c^2 / h``."""
    h = 0.05
    d = set_beta(build_strip(2, 2, 32), {"left": b, "right": b, "else": 0.0})
    g = np.zeros(d.mask.shape)
    w, _, rep = solve_capillary_tv(d, g, h, TIGHT)
    assert rep.converged
    # brute-force oracle over constants
    cs = np.linspace(-0.1, 0.1, 20001)
    e = [energy_value(d, np.full(g.shape, c), g, h) for c in cs[::50]]
    c_best = cs[::50][int(np.argmin(e))]
    assert np.ptp(w[d.mask]) <= 1e-6
    assert w[0, 0] == pytest.approx(-h * b, abs=1e-6)
    assert w[0, 0] == pytest.approx(c_best, abs=1e-3)


def test_energy_of_constants():
    d = build_strip(2, 2, 16)
    u = np.full(d.mask.shape, 1.7)
    assert energy_value(d, u, u, 0.1) == 0.0
    db = set_beta(d, 0.4)
    assert energy_value(db, u, u, 0.1) == pytest.approx(0.4 * 1.7 * db.perimeter)


def test_energy_of_step_is_width():
    d = build_strip(2, 2, 64)
    X, Y = d.coords
    u = (Y > 0.1).astype(float)
    assert energy_value(d, u, u, 0.1) == pytest.approx(2.0, rel=0.02)


def test_certificate_of_exact_pair():
    d = build_strip(2, 2, 16)
    g = np.where(d.mask, 2.0, 0.0)
    rep = optimality_certificate(d, g, DualField.zeros(d), g, 0.1)
    assert rep.fixed_point_residual == 0.0
    assert rep.max_dual_norm == 0.0
    assert rep.boundary_flux_error == 0.0
    assert rep.alignment_residual == 0.0
    assert rep.gap == 0.0


def _soliton_data(nx=64):
    from capillary_mm.analytic import SolitonParams, soliton_profile
    b = -1 / math.sqrt(2)
    d = set_beta(build_strip(2.0, 4.0, nx), {"left": b, "right": b, "else": 0.0})
    X, Y = d.coords
    lv = Y - soliton_profile(SolitonParams(b), X)
    return d, signed_geodesic_distance(d, RegionSet.from_levels(lv, d.mask))


def test_certificate_of_tight_soliton_solve():
    d, g = _soliton_data()
    w, z, rep = solve_capillary_tv(d, g, 0.01, TIGHT)
    assert rep.converged
    assert rep.alignment_residual <= 1e-3
    assert rep.max_dual_norm <= 1 + 1e-10
    assert rep.boundary_flux_error == 0.0
    assert rep.fixed_point_residual <= 10 * TIGHT.tol


def test_certificate_detects_perturbation(rng):
    d, g = _soliton_data()
    w, z, rep = solve_capillary_tv(d, g, 0.01, TIGHT)
    bad = optimality_certificate(d, w + 1e-2 * rng.normal(size=w.shape), z, g, 0.01)
    assert bad.fixed_point_residual >= 5e-3


def test_primal_dual_values_bracket():
    d, g = _soliton_data()
    h = 0.01
    w, z, rep = solve_capillary_tv(d, g, h)
    primal = energy_value(d, w, g, h)
    dual = dual_value(d, z, g, h)
    assert dual <= primal + 1e-12
    assert primal - dual == pytest.approx(rep.gap, rel=1e-6, abs=1e-9)


def test_one_step_circle_matches_ode():
    d = build_disk(1.0, 128)
    X, Y = d.coords
    rho = np.hypot(X, Y)
    g = signed_geodesic_distance(d, RegionSet.from_levels(rho - 0.5, d.mask))
    h = 0.01
    w, _, rep = solve_capillary_tv(d, g, h)
    assert rep.converged
    r = math.sqrt(((w <= 0) & d.mask).sum() * d.dx**2 / math.pi)
    assert abs(r - shrinking_circle_radius(0.5, h)) <= 2 * d.dx


def test_nonconvergence_is_reported():
    d, g = _soliton_data(32)
    cfg = SolverConfig(tol=1e-12, max_iter=20)
    w, z, rep = solve_capillary_tv(d, g, 0.01, cfg)
    assert not rep.converged and rep.iterations == 20
    with pytest.raises(NonConvergence):
        solve_capillary_tv(d, g, 0.01, cfg, raise_on_fail=True)


def test_rejects_bad_input():
    d = build_strip(2, 2, 16)
    with pytest.raises(ValueError):
        solve_capillary_tv(d, np.zeros(d.mask.shape), 0.0)
    g = np.zeros(d.mask.shape)
    g[3, 3] = np.nan
    with pytest.raises(ValueError):
        solve_capillary_tv(d, g, 0.1)


# -- discrete operator identities ------------------------------------------------


def _domains():
    return st.sampled_from([build_strip(2, 1.5, 16), build_disk(1.0, 24)])


@settings(max_examples=15)
@given(_domains(), st.integers(0, 10**6), st.floats(-0.9, 0.9))
def test_divergence_is_negative_adjoint(d, seed, b):
    """``<grad u, p> = -<u, div_0 p>``; contact data only add ``-sum beta / dx`` per cell."""
    r = np.random.default_rng(seed)
    u = np.where(d.mask, r.normal(size=d.mask.shape), 0.0)
    p = DualField(r.normal(size=d.mask.shape), r.normal(size=d.mask.shape))
    gx, gy = gradient(d, u)
    lhs = float((gx * np.where(d.active_x, p.px, 0) + gy * np.where(d.active_y, p.py, 0)).sum())
    rhs = -float((u * p.divergence(d)).sum())
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
    db = set_beta(d, b)
    np.testing.assert_allclose(p.divergence(db), p.divergence(d) - db.boundary_source, atol=1e-10)
    # the boundary term is the linear functional of the pinned fluxes
    assert boundary_term(db, u) == pytest.approx(float((u * db.boundary_source).sum()) * d.dx**2)


@settings(max_examples=8)
@given(st.integers(0, 10**6), st.floats(-0.7, 0.7), st.floats(0.005, 0.05))
def test_resolvent_contracts_and_commutes_with_shifts(seed, b, h):
    d = set_beta(build_strip(2, 2, 24), b)
    r = np.random.default_rng(seed)
    f = random_smooth_field(d, r)
    g = random_smooth_field(d, r)
    wf, _, rf = solve_capillary_tv(d, f, h, TIGHT)
    wg, _, rg = solve_capillary_tv(d, g, h, TIGHT)
    ws, _, _ = solve_capillary_tv(d, f + 0.25, h, TIGHT)
    m = d.mask
    l2 = lambda a: math.sqrt(float((a[m] ** 2).sum())) * d.dx
    assert l2(wf - wg) <= l2(f - g) + rf.eps_l2 + rg.eps_l2
    assert np.abs(ws - wf - 0.25)[m].max() <= 1e-9


def test_total_variation_of_linear_ramp():
    d = build_strip(2, 2, 32)
    X, Y = d.coords
    u = 0.3 * X + 0.4 * Y
    # forward differences vanish on the last column/row, so the ramp loses one strip
    tv = total_variation(d, u)
    assert 0.5 * 4 * (1 - 2 / 32) <= tv <= 0.5 * 4

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from capillary_mm.analytic import (PastExtinction, SolitonParams, ZeroGradient, eval_B, eval_B_at, eval_F,
                                   extinction_time, shrinking_circle_radius, soliton_curvature,
                                   soliton_field, soliton_profile, soliton_slope)
from capillary_mm.grid import build_strip, set_beta


def fd_hessian(f, x, y, e=1e-4):
    fxx = (f(x + e, y) - 2 * f(x, y) + f(x - e, y)) / e**2
    fyy = (f(x, y + e) - 2 * f(x, y) + f(x, y - e)) / e**2
    fxy = (f(x + e, y + e) - f(x + e, y - e) - f(x - e, y + e) + f(x - e, y - e)) / (4 * e**2)
    return np.array([[fxx, fxy], [fxy, fyy]])


def fd_grad(f, x, y, e=1e-6):
    return np.array([(f(x + e, y) - f(x - e, y)) / (2 * e), (f(x, y + e) - f(x, y - e)) / (2 * e)])


@pytest.mark.parametrize("a,b", [(1.0, 2.0), (-3.0, 0.5)])
def test_F_kills_gradient_direction(a, b):
    assert eval_F([1.0, 0.0], np.diag([a, b])) == pytest.approx(-b)


def test_F_identity_diagonal_gradient():
    assert eval_F(np.array([1, 1]) / math.sqrt(2), np.eye(2)) == pytest.approx(-1.0)


def test_F_radial_against_finite_differences():
    r = 0.5
    f = lambda x, y: math.hypot(x, y)
    x, y = r * math.cos(0.7), r * math.sin(0.7)
    val = eval_F(fd_grad(f, x, y), fd_hessian(f, x, y))
    assert val == pytest.approx(-2.0, abs=1e-4)


def test_F_zero_gradient():
    with pytest.raises(ZeroGradient):
        eval_F([0.0, 0.0], np.eye(2))


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 10))
def test_F_is_positively_homogeneous_in_p(px, py, s):
    if math.hypot(px, py) < 1e-6:
        return
    X = np.array([[1.0, 0.3], [0.3, -2.0]])
    assert eval_F([s * px, s * py], X) == pytest.approx(eval_F([px, py], X), abs=1e-9)


def test_B_examples():
    assert eval_B([-1.0, 0.0], [1.0, 0.0], 0.5) == pytest.approx(-0.5)
    assert eval_B([0.0, 0.0], [1.0, 0.0], 0.5) == 0.0
    assert eval_B([0.0, 1.0], [1.0, 0.0], 0.3) == pytest.approx(0.3)


def test_B_at_face_uses_domain_data():
    d = set_beta(build_strip(2, 2, 16), {"right": 0.5})
    face = d.wall_faces("right")[0]
    assert eval_B_at(d, face, [-1.0, 0.0]) == pytest.approx(-0.5)


def test_soliton_values():
    p = SolitonParams.from_alpha(1.0)
    assert p.b == pytest.approx(-1 / math.sqrt(2))
    assert p.speed == pytest.approx(math.pi / 4)
    assert soliton_profile(p, 0.0, 0.0) == pytest.approx(0.0)
    assert soliton_profile(p, 1.0, 0.0) == pytest.approx(-0.44127, abs=1e-5)
    assert soliton_profile(p, 0.0, 1.0) == pytest.approx(-0.78539, abs=1e-5)


def test_soliton_flat_for_zero_contact():
    p = SolitonParams(0.0, mu=0.3)
    np.testing.assert_array_equal(soliton_profile(p, np.linspace(-1, 1, 5), 2.0), 0.3)


def test_soliton_rejects_outside_domain_of_definition():
    with pytest.raises(ValueError):
        soliton_profile(SolitonParams.from_alpha(1.0), 2.5)
    with pytest.raises(ValueError):
        SolitonParams(1.0)


@pytest.mark.parametrize("b", [-1 / math.sqrt(2), -0.3, 0.4, 0.8])
def test_soliton_solves_level_set_equation(b):
    """The field ``W = u - y`` satisfies ``W_t + F(grad W, hess W) = 0`` in the strip."""
    p = SolitonParams(b)
    for x, y, t in [(0.0, 0.1, 0.0), (0.6, -0.2, 0.3), (-0.9, 0.4, 0.1)]:
        W = lambda xx, yy: float(soliton_field(p, xx, yy, t))
        Wt = (float(soliton_field(p, x, y, t + 1e-5)) - float(soliton_field(p, x, y, t - 1e-5))) / 2e-5
        F = eval_F(fd_grad(W, x, y), fd_hessian(W, x, y))
        assert Wt + F == pytest.approx(0.0, abs=1e-4)
        assert F == pytest.approx(p.speed, abs=1e-4)


@pytest.mark.parametrize("b", [-1 / math.sqrt(2), -0.3, 0.4, 0.8])
def test_soliton_contact_condition_on_walls(b):
    """``<grad v, nu> + b |grad v| = 0`` at both walls for ``v = y - u``, negative on the subgraph."""
    p = SolitonParams(b)
    for xw, nu in ((1.0, [1.0, 0.0]), (-1.0, [-1.0, 0.0])):
        grad_v = np.array([-float(soliton_slope(p, xw)), 1.0])
        assert eval_B(grad_v, nu, b) == pytest.approx(0.0, abs=1e-12)


def test_soliton_slope_and_curvature_match_profile():
    p = SolitonParams(-0.5)
    x = np.linspace(-0.9, 0.9, 7)
    e = 1e-6
    num = (soliton_profile(p, x + e) - soliton_profile(p, x - e)) / (2 * e)
    np.testing.assert_allclose(soliton_slope(p, x), num, atol=1e-7)
    u2 = (soliton_profile(p, x + 1e-4) - 2 * soliton_profile(p, x) + soliton_profile(p, x - 1e-4)) / 1e-8
    kappa = -u2 / (1 + soliton_slope(p, x) ** 2) ** 1.5
    np.testing.assert_allclose(soliton_curvature(p, x), kappa, atol=1e-4)


@given(st.floats(-0.95, 0.95), st.floats(0.2, 3.0))
def test_soliton_scale_relation(b, s):
    """Profiles for ``alpha`` and the scaled strip agree: ``u_c(x) = u_{c s}(x / s) * s``."""
    p = SolitonParams(b)
    c = p.speed
    if c == 0.0 or abs(c * s) >= math.pi / 2 or abs(c * s) < 1e-6:
        return
    q = SolitonParams.from_alpha(math.tan(c * s))
    x = np.linspace(-0.9, 0.9, 5)
    np.testing.assert_allclose(soliton_profile(p, x), s * soliton_profile(q, x / s), atol=1e-9)


def test_circle_radius_values():
    assert shrinking_circle_radius(0.5, 0.0) == 0.5
    assert shrinking_circle_radius(0.5, 0.06) == pytest.approx(0.36055, abs=1e-5)
    assert extinction_time(0.5) == 0.125
    with pytest.raises(PastExtinction):
        shrinking_circle_radius(0.5, 0.125)


def test_circle_radius_against_ode():
    sol = solve_ivp(lambda t, r: -1.0 / r, (0, 0.12), [0.5], rtol=1e-12, atol=1e-14,
                    dense_output=True)
    for t in (0.01, 0.06, 0.1, 0.12):
        assert shrinking_circle_radius(0.5, t) == pytest.approx(float(sol.sol(t)[0]), abs=1e-10)

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critset.core import (
    Boundary,
    GridFunction,
    IntegratorConfig,
    Nonlinearity,
    integrate_linear_system,
    lift_argument,
    multistart_roots,
    quad_periodic,
    spectral_derivative,
)
from critset.core.roots import dedupe_points
from critset.errors import DegenerateVectorError, RefinementFailure, ResolutionError
from critset.planar.maps import PlanarMap, paper_map, zzbar_map


# -- GridFunction ------------------------------------------------------------

def test_gridfunction_invariants():
    with pytest.raises(ValueError):
        GridFunction(np.zeros(4), 1.0, Boundary.PERIODIC)
    with pytest.raises(ValueError):
        GridFunction(np.ones(16), 1.0, Boundary.DIRICHLET)
    u = GridFunction.dirichlet(np.sin, 33)
    assert u.values[0] == 0.0 and u.values[-1] == 0.0
    assert u.t[-1] == pytest.approx(np.pi)
    p = GridFunction.periodic(np.sin, 16, 2 * np.pi)
    assert p.t[-1] < 2 * np.pi
    with pytest.raises(ValueError):
        p.values[0] = 1.0


def test_gridfunction_json_roundtrip():
    u = GridFunction.periodic(lambda t: np.cos(2 * np.pi * t), 32)
    back = GridFunction.from_json(u.to_json())
    assert back.boundary is Boundary.PERIODIC
    np.testing.assert_array_equal(back.values, u.values)
    assert set(json.loads(u.to_json())) == {"boundary", "domain_length", "values"}


# -- quadrature ----------------------------------------------------------------

def test_quad_zero_and_constant():
    u0 = GridFunction.periodic(0.0, 64)
    assert quad_periodic(u0, lambda x: x) == 0.0
    uc = GridFunction.periodic(1.5, 64, length=np.pi)
    assert quad_periodic(uc, np.exp) == pytest.approx(np.exp(1.5) * np.pi, rel=1e-14)


def test_quad_sin_squared():
    u = GridFunction.periodic(lambda t: np.sin(2 * np.pi * t), 256)
    assert abs(quad_periodic(u, lambda x: x**2) - 0.5) < 1e-12


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=1, max_value=15),
    st.floats(min_value=-2.0, max_value=2.0),
    st.floats(min_value=0, max_value=2 * np.pi),
)
def test_quad_exact_on_trig_polynomials(k, c0, phase):
    n = 32
    u = GridFunction.periodic(lambda t: c0 + np.cos(2 * np.pi * k * t + phase), n)
    # exact integral of c0 + cos(...) over [0, 1] is c0
    assert quad_periodic(u) == pytest.approx(c0, abs=1e-12 * (1 + abs(c0)))


# -- spectral differentiation ------------------------------------------------------

def test_spectral_derivative_examples():
    L = 2 * np.pi
    u = GridFunction.periodic(np.sin, 64, L)
    np.testing.assert_allclose(spectral_derivative(u, 1).values, np.cos(u.t), atol=1e-10)
    c = GridFunction.periodic(5.0, 64, L)
    np.testing.assert_allclose(spectral_derivative(c, 1).values, 0.0, atol=1e-12)
    w = GridFunction.periodic(lambda t: np.cos(3 * t), 64, L)
    np.testing.assert_allclose(spectral_derivative(w, 3).values, 27 * np.sin(3 * w.t), atol=1e-9)


def test_spectral_rejects_dirichlet():
    with pytest.raises(ValueError):
        spectral_derivative(GridFunction.dirichlet(np.sin, 33), 1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=-1, max_value=1), min_size=6, max_size=6))
def test_double_first_derivative_equals_second(coeffs):
    def fn(t):
        return sum(a * np.cos((k + 1) * t) + a**2 * np.sin((k + 2) * t) for k, a in enumerate(coeffs))

    u = GridFunction.periodic(fn, 64, 2 * np.pi)
    twice = spectral_derivative(spectral_derivative(u, 1), 1)
    np.testing.assert_allclose(twice.values, spectral_derivative(u, 2).values, atol=1e-9)


def test_chop_keeps_resolved_content():
    t = 2 * np.pi * np.arange(512) / 512
    u = GridFunction(np.exp(np.sin(t)), 2 * np.pi, Boundary.PERIODIC)
    # d/dt exp(sin t) = cos t exp(sin t)
    d = spectral_derivative(u, 1, chop=True).values
    np.testing.assert_allclose(d, np.cos(t) * np.exp(np.sin(t)), atol=1e-12)


# -- integrator ----------------------------------------------------------------

def _const(A):
    A = np.asarray(A, dtype=float)
    return lambda t: np.broadcast_to(A, np.shape(t) + A.shape)


def test_integrator_zero_field():
    traj = integrate_linear_system(_const(np.zeros((2, 2))), [1.0, 0.0], (0, 1), IntegratorConfig(64))
    np.testing.assert_array_equal(traj.y, np.tile([1.0, 0.0], (65, 1)))


def test_integrator_exponential():
    traj = integrate_linear_system(_const([[1.0]]), [1.0], (0, 1), IntegratorConfig(512))
    assert abs(traj.final[0] - np.e) < 1e-8


def test_integrator_rotation():
    traj = integrate_linear_system(_const([[0, -1], [1, 0]]), [1.0, 0.0], (0, 2 * np.pi), IntegratorConfig(1024))
    np.testing.assert_allclose(traj.final, [1.0, 0.0], atol=1e-6)


def test_integrator_matrix_initial_data():
    traj = integrate_linear_system(_const([[0, 1], [-1, 0]]), np.eye(2), (0, np.pi / 2), IntegratorConfig(512))
    np.testing.assert_allclose(traj.final, [[0, 1], [-1, 0]], atol=1e-10)


def test_integrator_fourth_order_convergence():
    errs = []
    for n in (64, 128, 256):
        traj = integrate_linear_system(_const([[0, -1], [1, 0]]), [1.0, 0.0], (0, 2 * np.pi), IntegratorConfig(n, tolerance=1.0))
        errs.append(np.max(np.abs(traj.final - [1.0, 0.0])))
    assert errs[0] / errs[1] >= 12 and errs[1] / errs[2] >= 12


def test_integrator_refinement_failure():
    with pytest.raises(RefinementFailure):
        integrate_linear_system(_const([[0, -1], [1, 0]]), [1.0, 0.0], (0, 200.0), IntegratorConfig(64, tolerance=1e-10))


def test_dormand_prince_matches_closed_form():
    cfg = IntegratorConfig(128, method="dormand-prince", tolerance=1e-10)
    traj = integrate_linear_system(_const([[1.0]]), [1.0], (0, 1), cfg)
    assert abs(traj.final[0] - np.e) < 1e-8


# -- argument lifting ------------------------------------------------------------

def test_lift_constant():
    np.testing.assert_array_equal(lift_argument(np.tile([1.0, 0.0], (10, 1)), 0.0), 0.0)


def test_lift_two_turns():
    n = 50
    k = np.arange(2 * n + 1)
    pts = np.column_stack([np.cos(2 * np.pi * k / n), np.sin(2 * np.pi * k / n)])
    assert lift_argument(pts, 0.0)[-1] == pytest.approx(4 * np.pi, abs=1e-12)


def test_lift_crossing_negative_axis():
    ang = np.linspace(2.5, 3.8, 40)
    out = lift_argument(np.column_stack([np.cos(ang), np.sin(ang)]), 2.5)
    assert np.pi / 2 < out[-1] < 3 * np.pi / 2
    assert np.all(np.abs(np.diff(out)) < np.pi / 2)


def test_lift_errors():
    with pytest.raises(DegenerateVectorError):
        lift_argument([[1, 0], [0, 0], [1, 1]], 0.0)
    with pytest.raises(ResolutionError):
        lift_argument([[1, 0], [-1, 0.1]], 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-1.5, max_value=1.5), min_size=2, max_size=60), st.integers(-3, 3))
def test_lift_properties(steps, turn):
    ang = np.concatenate([[0.3], 0.3 + np.cumsum(steps)])
    pts = np.column_stack([np.cos(ang), np.sin(ang)]) * (1 + np.arange(len(ang)))[:, None]
    theta0 = 0.3 + 2 * np.pi * turn
    out = lift_argument(pts, theta0)
    # reduced mod 2 pi the lift is the pointwise argument
    np.testing.assert_allclose(np.cos(out), np.cos(ang), atol=1e-9)
    np.testing.assert_allclose(np.sin(out), np.sin(ang), atol=1e-9)
    # increments accumulate exactly
    np.testing.assert_allclose(out - theta0, ang - 0.3, atol=1e-9)


# -- multistart roots -------------------------------------------------------------

def test_multistart_identity():
    ident = PlanarMap.affine(np.eye(2))
    roots = multistart_roots(ident, (-10, 10, -10, 10), 16, target=(3, 4))
    np.testing.assert_allclose(roots, [[3, 4]], atol=1e-12)


def test_multistart_square_roots_of_unity():
    roots = multistart_roots(zzbar_map({(2, 0): 1}), (-2, 2, -2, 2), 32, target=(1, 0))
    np.testing.assert_allclose(roots, [[-1, 0], [1, 0]], atol=1e-12)


def test_multistart_paper_map_origin():
    roots = multistart_roots(paper_map(), (-3, 3, -3, 3), 64)
    assert len(roots) == 17


def test_multistart_grid_doubling_invariance():
    F = paper_map()
    a = multistart_roots(F, (-3, 3, -3, 3), 48, target=(0.5, -0.2))
    b = multistart_roots(F, (-3, 3, -3, 3), 96, target=(0.5, -0.2))
    assert len(a) == len(b)
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_dedupe_is_order_independent():
    rng = np.random.default_rng(3)
    base = rng.normal(size=(5, 2))
    pts = np.repeat(base, 4, axis=0) + 1e-9 * rng.normal(size=(20, 2))
    a = dedupe_points(pts, 1e-6)
    b = dedupe_points(pts[rng.permutation(20)], 1e-6)
    np.testing.assert_allclose(a, b, atol=1e-8)
    assert len(a) == 5


# -- nonlinearity ------------------------------------------------------------------

def test_polynomial_derivatives_exact():
    f = Nonlinearity.polynomial([0, -1, 0, 1])
    x = np.array([-2.0, 0.0, 0.5, 3.0])
    np.testing.assert_array_equal(f(x), x**3 - x)
    np.testing.assert_array_equal(f.df(x), 3 * x**2 - 1)
    np.testing.assert_array_equal(f.d2f(x), 6 * x)


def test_preset_derivatives_match_finite_differences():
    x = np.linspace(-2, 2, 7)
    h = 1e-5
    for name in ("sin", "tanh"):
        f = Nonlinearity.preset(name)
        np.testing.assert_allclose(f.df(x), (f(x + h) - f(x - h)) / (2 * h), atol=1e-8)
        np.testing.assert_allclose(f.d2f(x), (f.df(x + h) - f.df(x - h)) / (2 * h), atol=1e-8)
        np.testing.assert_allclose(f.d3f(x), (f.d2f(x + h) - f.d2f(x - h)) / (2 * h), atol=1e-8)


def test_derivative_ranges():
    assert Nonlinearity.polynomial([0, -1, 0, 1]).derivative_range() == (-1.0, np.inf)
    assert Nonlinearity.polynomial([0, 0, 0, -1]).derivative_range() == (-np.inf, 0.0)
    assert Nonlinearity.polynomial([0, 0, 0, 0, 1]).derivative_range() == (-np.inf, np.inf)
    assert Nonlinearity.preset("sin").derivative_range() == (-1.0, 1.0)


def test_genericity_check():
    assert Nonlinearity.polynomial([0, -1, 0, 1]).is_generic()
    assert not Nonlinearity.polynomial([0, 1]).is_generic()
    # f' = 3x^2, f'' = 6x share the root 0
    assert not Nonlinearity.polynomial([0, 0, 0, 1]).is_generic()
    assert Nonlinearity.preset("tanh").is_generic() is None


def test_parse_and_from_callable():
    assert Nonlinearity.parse("poly:0,-1,0,1") == Nonlinearity.polynomial([0, -1, 0, 1])
    assert Nonlinearity.parse("sin").name == "sin"
    approx = Nonlinearity.from_callable(np.sin, (-3, 3), 21)
    x = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(approx(x), np.sin(x), atol=1e-10)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from critset.core import GridFunction, Nonlinearity
from critset.periodic import Kind, classify_periodic, criticality_of_u, iwasawa_rotation, monodromy

N = 1024
TWO_PI = 2 * np.pi


def const(c, n=N):
    return GridFunction.periodic(c, n, TWO_PI)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_nonregular_constants(n):
    c = classify_periodic(const(-n * n))
    assert c.kind is Kind.NONREGULAR
    assert c.index_n == n
    assert np.linalg.norm(c.lift.matrix - np.eye(2), 2) <= 1e-8
    assert abs(c.lift.angle - TWO_PI * n) < 1e-6


def test_zero_potential_is_regular_critical():
    c = classify_periodic(const(0.0))
    assert c.kind is Kind.REGULAR_CRITICAL
    np.testing.assert_allclose(c.lift.matrix, [[1.0, 0.0], [TWO_PI, 1.0]], atol=1e-8)


def test_positive_potential_is_noncritical():
    c = classify_periodic(const(1.0))
    assert c.kind is Kind.NONCRITICAL
    assert abs(c.lift.trace - 2 * np.cosh(TWO_PI)) <= 1e-6 * 2 * np.cosh(TWO_PI)


def test_unit_determinant_along_trajectory():
    for c in (-1.0, -4.0, 0.0, 1.0, -2.5):
        lift = monodromy(const(c))
        assert np.max(np.abs(np.linalg.det(lift.beta) - 1.0)) <= 1e-8


def test_iwasawa_rotation_of_rotation():
    for a in (0.3, -2.0, 3.0):
        R = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        B = R @ np.array([[2.0, 0.0], [0.0, 0.5]]) @ np.array([[1.0, 0.7], [0.0, 1.0]])
        assert abs(iwasawa_rotation(B) - a) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3.3))
def test_angle_matches_closed_form(k):
    # first column of beta is (cos k t, sin(k t)/k)
    lift = monodromy(const(-k * k))
    s = np.linspace(0.0, TWO_PI, 400001)
    ref = np.unwrap(np.arctan2(np.sin(k * s) / k, np.cos(k * s)))[-1]
    assert abs(lift.angle - ref) < 1e-6
    assert abs(lift.trace - 2 * np.cos(TWO_PI * k)) < 1e-6


def test_mathieu_against_scipy():
    a, b = -0.7, 0.4
    h = GridFunction.periodic(lambda t: a + b * np.cos(t), N, TWO_PI)
    lift = monodromy(h)

    def rhs(t, y):
        hv = a + b * np.cos(t)
        return [y[1], hv * y[0], y[3], hv * y[2]]

    sol = solve_ivp(rhs, (0.0, TWO_PI), [1.0, 0.0, 0.0, 1.0], rtol=1e-12, atol=1e-12)
    M = sol.y[:, -1].reshape(2, 2)
    # samples enter linearly interpolated: O(h^2) agreement
    np.testing.assert_allclose(lift.matrix, M, atol=1e-5)


def test_criticality_of_u():
    f = Nonlinearity.polynomial([0, -1])  # f' = -1 everywhere
    u = GridFunction.periodic(np.sin, N, TWO_PI)
    c = criticality_of_u(f, u)
    assert c.kind is Kind.NONREGULAR and c.index_n == 1


def test_rejects_wrong_domain():
    with pytest.raises(ValueError):
        monodromy(GridFunction.periodic(0.0, 64, 1.0))
    with pytest.raises(ValueError):
        criticality_of_u(Nonlinearity.polynomial([0, 1]), GridFunction.dirichlet(0.0, 64, TWO_PI))


def test_to_dict_fields():
    d = classify_periodic(const(-1.0)).to_dict()
    assert d["kind"] == "Nonregular" and d["index"] == 1
    assert set(d) >= {"trace", "angle", "matrix", "thresholds"}

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from critset.errors import NonMembershipError, NotLocallyConvexError
from critset.third_order import (
    PotentialPair,
    SphereCurve,
    circle_curve,
    curve_from_potentials,
    frame_determinant,
    fundamental_frame_3,
    is_in_Cstar3,
    perturbed_circle,
    potentials_from_curve,
    project_to_cstar3,
    roundtrip_residual,
)


@pytest.mark.parametrize("h1", [-1.0, -4.0, -9.0])
def test_integer_frequency_members(h1):
    ok, r = is_in_Cstar3(PotentialPair.constant(0.0, h1))
    assert ok and r <= 1e-6


@pytest.mark.parametrize("h1", [0.0, 1.0, -2.0])
def test_non_members(h1):
    ok, r = is_in_Cstar3(PotentialPair.constant(0.0, h1))
    assert not ok and r > 1e-3


def test_frame_has_unit_determinant():
    # the companion matrix of v''' = h0 v + h1 v' is trace free
    fr = fundamental_frame_3(PotentialPair.constant(0.3, -2.0))
    assert np.max(np.abs(np.linalg.det(fr.M) - 1.0)) < 1e-10


def test_forward_curve_of_unit_frequency():
    c = curve_from_potentials(PotentialPair.constant(0.0, -1.0))
    assert c.based and c.check_based()
    assert c.is_locally_convex()
    assert np.max(np.abs(frame_determinant(c) - 1.0)) < 1e-10
    # the solutions with M(0) = I are 1, sin t and 1 - cos t
    t = c.t
    V = np.column_stack([np.ones_like(t), np.sin(t), 1.0 - np.cos(t)])
    np.testing.assert_allclose(c.samples, V / np.linalg.norm(V, axis=1)[:, None], atol=1e-9)


def test_forward_rejects_non_member():
    with pytest.raises(NonMembershipError):
        curve_from_potentials(PotentialPair.constant(0.0, 1.0))


@pytest.mark.parametrize("alpha", [np.pi / 8, np.pi / 6, np.pi / 4, 1.2])
def test_circle_inverse(alpha):
    p, res = potentials_from_curve(circle_curve(alpha))
    assert np.max(np.abs(p.h0.values)) < 1e-6
    assert np.max(np.abs(p.h1.values + 1.0)) < 1e-6
    assert res < 1e-8


def test_great_circle_not_locally_convex():
    with pytest.raises(NotLocallyConvexError):
        potentials_from_curve(circle_curve(np.pi / 2))


@pytest.mark.parametrize("h1", [-1.0, -4.0])
def test_roundtrip_constants(h1):
    assert roundtrip_residual(PotentialPair.constant(0.0, h1)) <= 1e-6


def test_roundtrip_perturbed_member():
    p, _ = potentials_from_curve(perturbed_circle(np.pi / 5, 0.02, 1024))
    assert is_in_Cstar3(p)[0]
    assert np.ptp(p.h0.values) > 1e-3  # genuinely non-constant
    assert roundtrip_residual(p) <= 1e-5


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-np.pi, np.pi), min_size=3, max_size=3))
def test_inverse_invariant_under_rotation(angles):
    g = perturbed_circle(np.pi / 5, 0.02, 512)
    R = Rotation.from_euler("xyz", angles).as_matrix()
    p, _ = potentials_from_curve(g)
    q, _ = potentials_from_curve(SphereCurve(g.samples @ R.T))
    assert p.distance(q) < 1e-8


def test_projection_onto_members():
    q = project_to_cstar3(PotentialPair.constant(0.0, -1.05))
    assert q is not None
    assert abs(q.h1.values[0] + 1.0) < 1e-8 and abs(q.h0.values[0]) < 1e-8


def test_sphere_curve_validation_and_serialization():
    with pytest.raises(ValueError):
        SphereCurve(np.ones((16, 3)))
    c = circle_curve(0.4, 64)
    back = SphereCurve.from_dict(c.to_dict())
    np.testing.assert_array_equal(back.samples, c.samples)


def test_potential_pair_validation():
    from critset.core import GridFunction
    with pytest.raises(ValueError):
        PotentialPair(GridFunction.periodic(0.0, 64, 1.0), GridFunction.periodic(0.0, 64, 1.0))
    with pytest.raises(ValueError):
        PotentialPair.from_arrays(np.zeros(64), np.zeros(32))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critset.errors import (
    NearCriticalValueError,
    NotProperError,
    RadiusAdjustmentError,
    RankDeficiencyError,
    WindowTooSmallError,
)
from critset.planar import Tag, classify_critical_point, count_cusps, get_preset, trace_critical_set
from critset.planar.census import (
    _segment_crossings,
    fold_arcs,
    folding_direction,
    image_of_critical_set,
    preimage_census,
    self_intersections,
    topological_degree,
)
from critset.planar.maps import PlanarMap, cusp_normal_form, fold_normal_form, map_from_dict


# -- critical set of the preset map ---------------------------------------------

def test_two_nested_closed_curves(z7_curves):
    inner, outer = z7_curves
    assert inner.closed and outer.closed
    assert abs(inner.area) < abs(outer.area)
    assert all(outer.contains(p) for p in inner.vertices[::50])
    assert not inner.contains(outer.vertices[0])


def test_vertices_are_critical(z7, z7_curves):
    for c in z7_curves:
        scale = np.max(np.abs(z7.jacobian(c.vertices)), axis=(1, 2))
        assert np.max(np.abs(z7.det(c.vertices)) / np.maximum(scale, 1.0) ** 2) < 1e-8


def test_cusp_counts_match_tags(z7, z7_curves):
    counts = [count_cusps(z7, c) for c in z7_curves]
    assert counts == [5, 11]
    for c in z7_curves:
        assert set(c.tags) <= {Tag.FOLD, Tag.CUSP}


@pytest.mark.parametrize("res", [256, 1024])
def test_cusp_counts_stable_under_resolution(z7, res):
    curves = trace_critical_set(z7, (-2, 2, -2, 2), res)
    assert [count_cusps(z7, c) for c in curves] == [5, 11]


def test_cusp_vertices_classify_as_cusps(z7, z7_curves):
    for c in z7_curves:
        for i in c.cusp_indices:
            assert classify_critical_point(z7, c.vertices[i]) is Tag.CUSP


def test_image_self_intersections_stable(z7, z7_curves):
    fine = trace_critical_set(z7, (-2, 2, -2, 2), 1024)
    a = [self_intersections(im) for im in image_of_critical_set(z7, z7_curves)]
    b = [self_intersections(im) for im in image_of_critical_set(z7, fine)]
    assert a == b


def test_window_too_small():
    with pytest.raises(WindowTooSmallError):
        trace_critical_set(get_preset("fold-circle"), (-2, 2, -2, 2), 128)
    with pytest.raises(WindowTooSmallError):
        trace_critical_set(get_preset("z7"), (-1.2, 1.2, -1.2, 1.2), 256)


def test_map_from_dict_rejects_unknown_fields():
    with pytest.raises(ValueError):
        map_from_dict({"terms": [[1, 0, 1.0]], "colour": "red"})
    m = map_from_dict({"terms": [[7, 0, 1.0], [0, 4, 5.0], [1, 0, 1.0]]})
    p = np.array([[0.3, -0.7], [1.1, 0.2]])
    np.testing.assert_allclose(m.eval(p), get_preset("z7").eval(p), rtol=1e-14)


# -- normal forms --------------------------------------------------------------------

def test_normal_form_classification():
    assert classify_critical_point(fold_normal_form(), (0.3, 0.0)) is Tag.FOLD
    assert classify_critical_point(fold_normal_form(), (-2.0, 0.0)) is Tag.FOLD
    assert classify_critical_point(cusp_normal_form(), (0.0, 0.0)) is Tag.CUSP
    # on the cusp normal form the fold curve is x = -3 y^2
    y = 0.4
    assert classify_critical_point(cusp_normal_form(), (-3 * y * y, y)) is Tag.FOLD


def test_classification_errors():
    with pytest.raises(ValueError):
        classify_critical_point(fold_normal_form(), (0.0, 1.0))
    with pytest.raises(RankDeficiencyError):
        classify_critical_point(get_preset("square"), (0.0, 0.0))


def test_fold_normal_form_folding_direction():
    # (x, y) -> (x, y^2): two preimages above the fold image y = 0
    d = folding_direction(fold_normal_form(), (0.5, 0.0))
    np.testing.assert_allclose(d, [0.0, 1.0], atol=1e-12)


def test_fd_jacobian_matches_analytic(z7):
    fd = PlanarMap(z7.eval, None, scale=1.0)
    p = np.array([[0.4, 0.9], [-1.2, 0.3]])
    np.testing.assert_allclose(fd.jacobian(p), z7.jacobian(p), rtol=1e-6, atol=1e-6)


# -- preimages and degree -----------------------------------------------------------------

def test_census_paper_counts(z7, z7_curves):
    res = preimage_census(z7, [[0.0, 0.0], [1e4, 0.0]], (-5, 5, -5, 5), curves=z7_curves)
    assert res.counts == [17, 7]
    np.testing.assert_allclose(z7.eval(res.preimages[0]), 0.0, atol=1e-9)


def test_census_errors(z7, z7_curves):
    with pytest.raises(NotProperError):
        preimage_census(z7, [[1e4, 0.0]], (-0.5, 0.5, -0.5, 0.5), curves=z7_curves)
    on_image = image_of_critical_set(z7, z7_curves)[1].points[10]
    with pytest.raises(NearCriticalValueError):
        preimage_census(z7, [on_image], (-5, 5, -5, 5), curves=z7_curves)


def test_fold_crossing_changes_count_by_two(z7, z7_curves):
    arcs = fold_arcs(z7, z7_curves)
    assert arcs
    a = max(arcs, key=lambda x: len(x.vertex_indices))
    w = a.anchor
    pair = [w - 1e-2 * a.direction, w + 1e-2 * a.direction]
    res = preimage_census(z7, pair, (-5, 5, -5, 5), curves=z7_curves)
    assert res.counts[1] - res.counts[0] == 2
    assert res.adjacency == [(0, 1, 1)]


@pytest.mark.parametrize("name,deg", [("z7", 7), ("identity", 1), ("conj", -1), ("square", 2)])
def test_degree(name, deg):
    assert topological_degree(get_preset(name), 10.0) == deg


def test_degree_radius_adjustment():
    with pytest.raises(RadiusAdjustmentError):
        topological_degree(get_preset("identity"), 1.0, (1.0, 0.0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.5, 20))
def test_degree_of_linear_maps(entries, radius):
    A = np.array(entries).reshape(2, 2)
    d = np.linalg.det(A)
    if abs(d) < 1e-2 * max(1.0, np.abs(A).max() ** 2):
        return
    assert topological_degree(PlanarMap.affine(A), radius) == int(np.sign(d))


# -- segment crossing ----------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=8, max_size=8))
def test_segment_crossing_symmetric_in_general_position(pts):
    a, b, p, q = np.array(pts).reshape(4, 2)

    def orient(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])

    if min(abs(orient(a, b, p)), abs(orient(a, b, q)), abs(orient(p, q, a)), abs(orient(p, q, b))) < 1e-9:
        return
    ab = _segment_crossings(a, b, np.array([[p, q]]))[0]
    assert ab == _segment_crossings(p, q, np.array([[a, b]]))[0]
    assert ab == _segment_crossings(b, a, np.array([[p, q]]))[0]
    # oracle: intersection parameters of the two lines both in (0, 1)
    M = np.column_stack([b - a, p - q])
    s, t = np.linalg.solve(M, p - a)
    assert ab == (0 < s < 1 and 0 < t < 1)


def test_path_through_vertex_crosses_once():
    line = np.array([[[0.0, -1.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]])
    hits = _segment_crossings(np.array([-1.0, 0.0]), np.array([1.0, 0.0]), line)
    assert int(np.count_nonzero(hits)) == 1

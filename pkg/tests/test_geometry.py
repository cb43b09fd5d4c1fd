import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tangentcalc.geometry import (DimensionError, FullSpace, FunctionGraph, Polyhedron, Product,
                                  Sequence1D, SequenceSet, Singleton, SmoothLevelSet, Union,
                                  cone_generators_distance, halfspace, nnls,
                                  polyhedral_tangent_oracle, project_polyhedron,
                                  project_polyhedron_enumerate, sphere_grid, sum_norm_distance)

vec2 = arrays(float, 2, elements=st.floats(-5, 5))


def test_fullspace_and_singleton():
    assert FullSpace(2).distance([3, 4]).value == 0.0
    assert Singleton([0, 0]).distance([3, 4]).value == pytest.approx(5.0)
    with pytest.raises(DimensionError):
        FullSpace(2).distance([1, 2, 3])


def test_nnls_matches_known_solution():
    E = np.eye(2)
    u, res = nnls(E, np.array([1.0, -2.0]))
    np.testing.assert_allclose(u, [1, 0])
    assert res == pytest.approx(2.0)


@pytest.mark.parametrize("x, d", [([1, 1], 1.0), ([-1, 3], 0.0), ([-2, -2], 2.0), ([1, -1], np.sqrt(2))])
def test_polyhedron_distance_frozen(x, d):
    # {x <= 0, y >= 0}
    P = Polyhedron([[1, 0], [0, -1]], [0, 0])
    assert P.distance(x).value == pytest.approx(d, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 3), elements=st.floats(-2, 2)), arrays(float, 3, elements=st.floats(-3, 3)))
def test_projection_agrees_with_enumeration(A, x):
    b = np.ones(4)
    p = project_polyhedron(A, b, x)
    q = project_polyhedron_enumerate(A, b, x)
    assert np.linalg.norm(x - p) == pytest.approx(np.linalg.norm(x - q), abs=1e-8)
    assert np.all(A @ p <= b + 1e-8)


def test_local_distance_is_scale_invariant():
    P = Polyhedron([[1.0, -1.0], [-1.0, -1.0]], [0.0, 0.0])
    for t in (1.0, 1e-6, 1e-12):
        d = P.local_distance([0, 0], [t, 0]).value / t
        assert d == pytest.approx(np.sqrt(0.5), rel=1e-9)


def test_polyhedral_tangent_oracle():
    P = Polyhedron([[1, 0], [0, 1]], [0, 1])
    T = polyhedral_tangent_oracle(P, [0, 0])
    assert T.contains([-1, 5]) and not T.contains([1, 0])
    assert isinstance(polyhedral_tangent_oracle(P, [-1, 0]), FullSpace)
    with pytest.raises(ValueError):
        polyhedral_tangent_oracle(P, [1, 0])


def test_halfspace_and_cone_generators():
    H = halfspace([0, 1], 2.0)
    assert H.contains([7, 2]) and not H.contains([0, 2.1])
    G = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert cone_generators_distance(G, [1, 1]) == pytest.approx(0.0, abs=1e-12)
    assert cone_generators_distance(G, [-3, 1]) == pytest.approx(3.0)


def test_union_distance_is_min():
    U = Union([Singleton([0, 0]), Singleton([3, 0])])
    assert U.distance([2, 0]).value == pytest.approx(1.0)


def test_product_sum_norm():
    S = Product(Singleton([0.0]), Singleton([0.0]))
    assert S.distance([3, 4]).value == pytest.approx(7.0)
    assert sum_norm_distance(S, [3, 4], S.blocks).value == pytest.approx(7.0)


@pytest.mark.parametrize("x, nearest", [(0.3, 1 / 3), (0.26, 0.25), (-1.0, 0.0), (5.0, 1.0)])
def test_harmonic_sequence_nearest(x, nearest):
    assert Sequence1D("1/k").nearest(x) == pytest.approx(nearest)


def test_sequence_set():
    D = SequenceSet(Sequence1D("4^(-k)"))
    assert D.contains([1 / 16]) and D.contains([0.0]) and not D.contains([0.1])
    assert Sequence1D("1/k").terms_in(0.21, 0.6) == pytest.approx([0.5, 1 / 3, 0.25])


def test_parabola_graph_distance():
    P = FunctionGraph("s^2")
    assert P.distance([0, 1]).value == pytest.approx(np.sqrt(3) / 2, rel=1e-8)
    assert P.contains([2, 4])


def test_punctured_graph_distance_uses_closure():
    G = FunctionGraph("s", excluded=Sequence1D("1/k"))
    assert G.distance([0.5, 0.5]).value == pytest.approx(0.0, abs=1e-12)
    assert not G.contains([0.5, 0.5])


@settings(max_examples=40, deadline=None)
@given(vec2)
def test_disk_and_circle_distance(x):
    r = np.linalg.norm(x)
    disk = SmoothLevelSet("x^2 + y^2 - 1", ["x", "y"])
    circle = SmoothLevelSet("x^2 + y^2 - 1", ["x", "y"], "=")
    assert disk.distance(x).value == pytest.approx(max(r - 1, 0), abs=1e-6)
    if r > 1e-3:
        assert circle.distance(x).value == pytest.approx(abs(r - 1), abs=1e-6)


def test_sphere_grid_is_unit():
    G = sphere_grid(3, 50)
    assert G.shape[1] == 3
    np.testing.assert_allclose(np.linalg.norm(G, axis=1), 1.0)

import io

import numpy as np
import pytest

from tangentcalc.expr import SmoothMap
from tangentcalc.geometry import FullSpace, FunctionGraph, Polyhedron, Product, Sequence1D
from tangentcalc.setvalued import (NO, YES, ConstraintMap, GraphPoint, GraphPointError, GraphSet,
                                   Indicator, Perturbation, RestrictedFunction, SumMap,
                                   aubin_estimate, classify_differentiability,
                                   default_direction_grid, derivative2_membership,
                                   derivative_candidates, derivative_decisions,
                                   derivative_membership, dini_membership, identity_map_spec,
                                   write_fiber_csv)
from tangentcalc.tangent import IN, OUT

PUNCTURED = GraphSet(FunctionGraph("s", excluded=Sequence1D("1/k")), 1)
SQUARE = RestrictedFunction(SmoothMap("x^2", ["x"]))


def test_graph_point():
    p = GraphPoint.of(([1.0], [2.0, 3.0]), 1, 2)
    np.testing.assert_allclose(p.joint, [1, 2, 3])


def test_fibers():
    assert SQUARE.fiber([2.0]).distance([4.0]).value == 0.0
    assert PUNCTURED.fiber([0.5]) is None
    assert PUNCTURED.fiber([0.5], closure=True) is not None
    assert Indicator(Polyhedron([[1.0]], [0.0])).fiber([1.0]) is None


def test_graph_is_cached():
    assert SQUARE.graph() is SQUARE.graph()


def test_derivative_of_smooth_function():
    d = derivative_decisions(SQUARE, ([1.0], [1.0]), [1.0], [2.0])
    assert d["B"].verdict is IN and d["U"].verdict is IN
    assert derivative_membership(SQUARE, ([1.0], [1.0]), [1.0], [3.0]).verdict is OUT


def test_second_derivative_of_square():
    # x1 = (1, 0): the second-order contingent derivative at u = 0 is {1}
    assert derivative2_membership(SQUARE, ([0.0], [0.0]), ([1.0], [0.0]), [0.0], [1.0]).verdict is IN
    assert derivative2_membership(SQUARE, ([0.0], [0.0]), ([1.0], [0.0]), [0.0], [0.0]).verdict is OUT


def test_not_in_graph_raises():
    with pytest.raises(GraphPointError):
        derivative_membership(SQUARE, ([1.0], [2.0]), [1.0], [0.0])


def test_punctured_identity_dini_is_empty():
    at = ([0.0], [0.0])
    for v in (-1.0, 0.0, 1.0):
        assert dini_membership(PUNCTURED, at, [0.0], [v]).verdict is OUT
    assert dini_membership(SQUARE, ([1.0], [1.0]), [1.0], [2.0]).verdict is IN


def test_classification():
    c = classify_differentiability(PUNCTURED, ([0.0], [0.0]), default_direction_grid(1, 1))
    assert (c.proto, c.semi) == (YES, NO)
    c = classify_differentiability(SQUARE, ([1.0], [1.0]), default_direction_grid(1, 1))
    assert (c.proto, c.semi) == (YES, YES)


def test_candidates_lie_on_derivative():
    cands = derivative_candidates(SQUARE, ([1.0], [1.0]), [1.0], [[0.0], [5.0]])
    assert all(abs(v[0] - 2.0) < 1e-6 for v in cands)


def test_sum_map():
    F = SumMap(identity_map_spec(1), SQUARE)
    assert F.contains([2.0], [6.0]) and not F.contains([2.0], [5.0])
    assert derivative_membership(F, ([1.0], [2.0]), [1.0], [3.0]).verdict is IN


def test_constraint_map():
    F = ConstraintMap(SmoothMap("y - x", ["x", "y"]), FullSpace(1), Polyhedron([[1.0]], [0.0]), 1)
    assert F.contains([1.0], [0.5]) and not F.contains([1.0], [1.5])


def test_perturbation_map():
    F = RestrictedFunction(SmoothMap("y - x", ["x", "y"]))
    K = Indicator(FullSpace(2), 1)
    G = Perturbation(F, K, 1)
    assert G.contains([1.0, 0.0], [1.0]) and not G.contains([1.0, 0.0], [2.0])


def test_aubin_of_smooth_function_is_finite():
    est = aubin_estimate(SQUARE, ([1.0], [1.0]))
    assert est.finite and est.modulus_est == pytest.approx(2.0, rel=0.3)


def test_fiber_csv():
    buf = io.StringIO()
    write_fiber_csv(SQUARE, [[0.0], [1.0]], buf)
    assert len(buf.getvalue().strip().splitlines()) >= 3


def test_constant_sequence_maps():
    from tangentcalc.verify.instance import named_map
    at = ([0.0], [0.0])
    grid = default_direction_grid(1, 1)
    # gaps of {1/k} are o(t): both cones are [0, inf), so the map is proto-differentiable
    assert classify_differentiability(named_map("harmonic_const"), at, grid).proto == YES
    c = classify_differentiability(named_map("geometric4_const"), at, grid)
    assert c.proto == NO and c.witness[1][0] > 0

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tangentcalc.expr import SmoothMap
from tangentcalc.geometry import FullSpace, FunctionGraph, Polyhedron, Singleton, SmoothLevelSet
from tangentcalc.regularity import (DIVERGENT, blows_up, coderivative_condition_estimate,
                                    exact_normal_cone_distance, frechet_normal_membership,
                                    metric_regularity_modulus, radius_grid,
                                    restriction_coderivative_check, subregularity_modulus,
                                    summarize)
from tangentcalc.setvalued import RestrictedFunction
from tangentcalc.tangent import IN, OUT


@pytest.mark.parametrize("vals, expected", [
    ([1, 2, 4], True), ([1, 2, 3.9], False), ([1, 1, 1, 1], False),
    ([1, math.inf], True), ([4, 2, 1], False),
])
def test_blows_up(vals, expected):
    assert blows_up(vals) is expected


def test_summarize_tail_max():
    est = summarize([(0.5, 3.0), (0.25, 1.0), (0.125, 1.5)], 10)
    assert est.modulus_est == 1.5 and est.finite


def test_radius_grid():
    np.testing.assert_allclose(radius_grid(), [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625])


def test_linear_map_has_modulus_one_over_slope():
    g = SmoothMap("2*x", ["x"])
    est = subregularity_modulus(g, [0.0], FullSpace(1), solution_set=Singleton([0.0]))
    assert est.modulus_est == pytest.approx(0.5, rel=1e-9)


def test_square_diverges():
    g = SmoothMap("x^2", ["x"])
    est = subregularity_modulus(g, [0.0], FullSpace(1), solution_set=Singleton([0.0]))
    assert est.modulus_est == DIVERGENT and est.divergent
    buf = io.StringIO()
    est.write_csv(buf)
    assert buf.getvalue().startswith("label,radius,modulus")


def test_affine_solution_set_is_built():
    g = SmoothMap("x + y", ["x", "y"])
    est = subregularity_modulus(g, [0.0, 0.0], Polyhedron([[-1.0, 0.0]], [0.0]))
    # the solution set is the ray {(s, -s) : s >= 0}; (0, y) sits at distance |y| from it
    assert est.modulus_est == pytest.approx(1.0, rel=1e-9)


def test_metric_regularity():
    assert metric_regularity_modulus(RestrictedFunction(SmoothMap("3*x", ["x"])),
                                     ([0.0], [0.0])).modulus_est == pytest.approx(1 / 3, rel=1e-6)
    sq = RestrictedFunction(SmoothMap("x^2", ["x"]))
    assert metric_regularity_modulus(sq, ([0.0], [0.0])).divergent


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_orthant_normal_cone_distance(a, b):
    Q = Polyhedron(-np.eye(2), np.zeros(2))
    # normal cone of the nonnegative orthant at 0 is the nonpositive orthant
    expected = np.hypot(max(a, 0), max(b, 0))
    assert exact_normal_cone_distance(Q, [0, 0], [a, b]) == pytest.approx(expected, abs=1e-9)


def test_frechet_normal_sampled_route():
    H = Polyhedron([[1.0, 0.0]], [0.0])
    assert frechet_normal_membership(H, [0, 0], [1, 0]).verdict is IN
    assert frechet_normal_membership(H, [0, 0], [0, 1]).verdict is OUT
    assert frechet_normal_membership(H, [0, 0], [1, 0], exact=False).verdict is IN
    disk = SmoothLevelSet("x^2 + y^2 - 1", ["x", "y"])
    assert frechet_normal_membership(disk, [1, 0], [1, 0]).verdict is IN
    assert frechet_normal_membership(disk, [1, 0], [1, 1]).verdict is OUT


def test_coderivative_condition():
    assert coderivative_condition_estimate(SmoothMap("x", ["x"]), FullSpace(1), [0.0],
                                           radius=0.01).modulus_est == pytest.approx(1.0)
    assert coderivative_condition_estimate(SmoothMap("x^2", ["x"]), FullSpace(1), [0.0],
                                           radius=0.01).modulus_est <= 0.05


def test_restriction_formula_smooth_nonlinear():
    f = SmoothMap("x^2", ["x"])
    M = Polyhedron([[-1.0]], [0.0])
    rep = restriction_coderivative_check(f, M, [1.0], np.array([[-1.0], [1.0]]),
                                         np.array([[-2.0], [0.0], [2.0]]))
    assert rep.passed and rep.agreements == 5 and rep.inconclusive == 1

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tangentcalc.expr import ExpressionError, SmoothMap, identity_map, parse, scalar_polynomial


def test_caret_is_power():
    f = SmoothMap("x^2 + 3*y", ["x", "y"])
    assert f([2.0, 1.0])[0] == pytest.approx(7.0)


def test_scientific_literals_parse():
    f = SmoothMap("4.8e-5*x + 1e3", ["x"])
    assert f([1.0])[0] == pytest.approx(1000.000048)


@pytest.mark.parametrize("text", ["x + z", "__import__('os')", "x..2", ""])
def test_rejects_bad_expressions(text):
    with pytest.raises(ExpressionError):
        parse(text, ["x"])


def test_jacobian_and_hessian():
    f = SmoothMap(["x*y", "x^2"], ["x", "y"])
    np.testing.assert_allclose(f.jacobian([2, 3]), [[3, 2], [4, 0]])
    H = f.hessian([2, 3])
    np.testing.assert_allclose(H[0], [[0, 1], [1, 0]])
    np.testing.assert_allclose(H[1], [[2, 0], [0, 0]])
    np.testing.assert_allclose(f.second_order_term([0, 0], [1, 1]), [2, 2])


def test_affine_detection():
    assert SmoothMap(["2*x - y + 1"], ["x", "y"]).is_affine
    assert not SmoothMap(["x*y"], ["x", "y"]).is_affine
    J, c = SmoothMap(["2*x - y + 1"], ["x", "y"]).affine_parts()
    np.testing.assert_allclose(J, [[2, -1]])
    np.testing.assert_allclose(c, [1])
    with pytest.raises(ValueError):
        SmoothMap("sin(x)", ["x"]).affine_parts()


def test_identity_map():
    f = identity_map(3)
    np.testing.assert_allclose(f([1, 2, 3]), [1, 2, 3])
    assert f.is_affine


def test_scalar_polynomial():
    p = scalar_polynomial("s^2 - 2*s")
    np.testing.assert_allclose(p.coef, [0, -2, 1])
    assert scalar_polynomial("exp(s)") is None


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_jacobian_matches_finite_difference(x, y):
    f = SmoothMap(["sin(x)*y + x^3"], ["x", "y"])
    h = 1e-6
    fd = [(f([x + h, y]) - f([x - h, y]))[0] / (2 * h), (f([x, y + h]) - f([x, y - h]))[0] / (2 * h)]
    np.testing.assert_allclose(f.jacobian([x, y])[0], fd, atol=1e-5)

import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tangentcalc.geometry import FunctionGraph, Polyhedron, Sequence1D, SequenceSet, SmoothLevelSet
from tangentcalc.tangent import (IN, INCONCLUSIVE, OUT, LimitSchedule, bouligand2_membership,
                                 bouligand_membership, decide, dedupe, literal_sequence_search,
                                 sample_cone, tangent_candidates, tangent_decisions,
                                 ursescu2_membership, ursescu_membership, verdict_and,
                                 verdict_not, write_trace_csv)

# {y >= |x|}
HALFCONE = Polyhedron([[1.0, -1.0], [-1.0, -1.0]], [0.0, 0.0])


def test_three_valued_logic():
    assert verdict_and(IN, IN) is IN
    assert verdict_and(IN, OUT, INCONCLUSIVE) is OUT
    assert verdict_and(IN, INCONCLUSIVE) is INCONCLUSIVE
    assert verdict_not(IN) is OUT and verdict_not(INCONCLUSIVE) is INCONCLUSIVE


def test_schedule_defaults_and_validation():
    s = LimitSchedule()
    assert s.grid().size == 40 and s.tail == 14
    s2 = LimitSchedule.second_order()
    assert (s2.steps, s2.phases, s2.tail) == (24, 3, 24)
    assert s2.grid().size == 70
    for bad in ({"ratio": 1.0}, {"eps_in": 1.0}, {"steps": 2000}):
        with pytest.raises(ValueError):
            LimitSchedule(**bad)


@pytest.mark.parametrize("tail, B, U", [
    ([0.0] * 14, IN, IN),
    ([0.5] * 14, OUT, OUT),
    ([1e-3] * 14, INCONCLUSIVE, INCONCLUSIVE),
    ([0.0, 0.5] * 7, IN, OUT),
])
def test_decide_rules(tail, B, U):
    s = LimitSchedule()
    trace = np.column_stack([s.grid(), np.r_[np.ones(26), tail]])
    assert decide(trace, s, "B").verdict is B
    assert decide(trace, s, "U").verdict is U


def test_halfcone_quotient_frozen():
    d = tangent_decisions(HALFCONE, [0, 0], [1, 0])
    assert d["B"].verdict is OUT and d["U"].verdict is OUT
    assert d["B"].liminf_est == pytest.approx(0.7071067811865476, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * np.pi))
def test_halfcone_matches_exact_cone(angle):
    u = np.array([np.cos(angle), np.sin(angle)])
    slack = -max(u[0] - u[1], -u[0] - u[1])
    d = tangent_decisions(HALFCONE, [0, 0], u)
    if slack > 1e-3:
        assert d["B"].verdict is IN and d["U"].verdict is IN
    elif slack < -0.02:
        assert d["B"].verdict is OUT and d["U"].verdict is OUT


def test_zero_direction_and_outside_point():
    assert bouligand_membership(HALFCONE, [0, 0], [0, 0]).verdict is IN
    assert ursescu_membership(HALFCONE, [0, -1], [1, 0]).verdict is OUT


def test_geometric_set_separates_cones():
    D = SequenceSet(Sequence1D("4^(-k)"))
    d = tangent_decisions(D, [0.0], [1.0])
    assert d["B"].verdict is IN and d["U"].verdict is OUT and d["U"].oscillating
    assert d["U"].limsup_est == pytest.approx(0.5, abs=1e-9)


def test_parabola_second_order():
    P = FunctionGraph("s^2")
    assert bouligand2_membership(P, [0, 0], [1, 0], [0, 1]).verdict is IN
    assert ursescu2_membership(P, [0, 0], [1, 0], [0, 1]).verdict is IN
    # residual 6t stays above eps_in on the finite tail
    assert ursescu2_membership(P, [0, 0], [1, 0], [3, 1]).verdict is INCONCLUSIVE
    assert bouligand2_membership(P, [0, 0], [1, 0], [0, 2]).verdict is OUT


def test_circle_tangent_line():
    C = SmoothLevelSet("x^2 + y^2 - 1", ["x", "y"], "=")
    assert bouligand_membership(C, [1, 0], [0, 1]).verdict is IN
    assert bouligand_membership(C, [1, 0], [1, 0]).verdict is OUT


def test_literal_sequence_agrees_with_quotient():
    assert literal_sequence_search(HALFCONE, [0, 0], [0, 1]) == pytest.approx(0.0, abs=1e-12)
    assert literal_sequence_search(HALFCONE, [0, 0], [1, 0]) > 0.5


def test_candidates_and_batch():
    cands = tangent_candidates(HALFCONE, [0, 0], [[1, 0], [0, 1], [0, -1]])
    for c in cands:
        assert c[1] >= abs(c[0]) - 1e-6
    res = sample_cone(HALFCONE, [0, 0], [[0, 1], [0, -1]])
    assert [v.verdict for _, v in res] == [IN, OUT]
    assert len(dedupe([np.ones(2), np.ones(2), np.zeros(2)])) == 2


def test_trace_csv():
    buf = io.StringIO()
    write_trace_csv(bouligand_membership(HALFCONE, [0, 0], [0, 1]), buf, "h")
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "label,t,quotient" and len(lines) == 41

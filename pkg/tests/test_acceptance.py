"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one PASS/FAIL line (printed, and repeated in the pytest
terminal summary). Criterion 6 is expected to stay red: for {0} u {1/k} the
quotient d(t, D)/t tends to 0, so the Ursescu verdict is IN, not OUT.
"""
import time

import numpy as np
import pytest

from conftest import record
from tangentcalc import FullSpace, Polyhedron, Product, Sequence1D, SequenceSet, Singleton
from tangentcalc.expr import SmoothMap
from tangentcalc.geometry import FunctionGraph, polyhedral_tangent_oracle, sphere_grid
from tangentcalc.regularity import (DIVERGENT, coderivative_condition_estimate,
                                    restriction_coderivative_check, subregularity_modulus)
from tangentcalc.setvalued import (YES, NO, classify_differentiability, constraints_of,
                                   default_direction_grid, derivative_decisions, dini_membership,
                                   level_set)
from tangentcalc.tangent import IN, OUT, bouligand2_membership, tangent_decisions
from tangentcalc.verify import corpus_ids, load_instance, run_suite
from tangentcalc.verify.instance import named_map
from tangentcalc.verify.report import INCONCLUSIVE, PASS, VIOLATION

RULE_SUITES = ("product", "preimage", "sum_rule", "optimality", "perturbation", "constraint_map")


@pytest.fixture(scope="module")
def corpus_run():
    """Every suite of every shipped instance, run once."""
    t0 = time.perf_counter()
    reports = []
    for iid in corpus_ids():
        inst = load_instance(iid)
        for suite in inst.suites:
            reports.append((inst, run_suite(inst, suite)))
    return reports, time.perf_counter() - t0


# ---------------------------------------------------------------- 1

def test_criterion_1_punctured_identity_map():
    t0 = time.perf_counter()
    F = named_map("example31")
    at = ([0.0], [0.0])
    a_in = derivative_decisions(F, at, [1.0], [1.0])
    a_out = derivative_decisions(F, at, [1.0], [1.5])
    part_a = all(a_in[f].verdict is IN and a_out[f].verdict is OUT for f in ("B", "U"))
    part_b = all(dini_membership(F, at, [0.0], [v]).verdict is OUT
                 for v in np.linspace(-2, 2, 21))
    cls = classify_differentiability(F, at, default_direction_grid(1, 1))
    part_c = cls.proto == YES and cls.semi == NO
    # g(a, b, c, d) = a - c relative to Gr F x Gr F
    g = SmoothMap("a - c", ["a", "b", "c", "d"])
    C = Product(F.graph(), F.graph())
    sol = level_set(constraints_of(C, g.symbols) + [(g.exprs[0], "=")], g.symbols)
    est = subregularity_modulus(g, np.zeros(4), C, solution_set=sol, blocks=(1, 1, 1, 1))
    part_d = est.finite and 1.0 <= est.modulus_est <= 2.05
    elapsed = time.perf_counter() - t0
    ok = part_a and part_b and part_c and part_d and elapsed < 10
    record(1, ok, f"(a)={part_a} (b)={part_b} (c)=proto {cls.proto}/semi {cls.semi} "
                  f"(d) mu_hat={est.modulus_est} time={elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------- 2

def test_criterion_2_zero_first_order_direction(corpus_run):
    reports, _ = corpus_run
    pairs = conclusive = mismatches = 0
    for _, rep in reports:
        if rep.suite != "zero_direction":
            continue
        for r in rep.records:
            if not r.relation.endswith("[⊂]"):
                continue
            pairs += 1
            if r.lhs.conclusive and r.rhs.conclusive:
                conclusive += 1
                mismatches += r.lhs is not r.rhs
    rate = conclusive / pairs
    ok = pairs >= 100 and rate >= 0.9 and mismatches == 0
    record(2, ok, f"pairs={pairs} conclusive={rate:.3f} mismatches={mismatches}")
    assert ok


# ---------------------------------------------------------------- 3

def _random_polyhedron(rng, active):
    x = rng.normal(size=3)
    m = int(rng.integers(max(active, 4), 9))
    A = rng.normal(size=(m, 3))
    b = A @ x + np.r_[np.zeros(active), rng.uniform(0.2, 1.0, m - active)]
    return Polyhedron(A, b), x


def test_criterion_3_exact_polyhedral_oracle():
    rng = np.random.default_rng(3)
    total = inconclusive = disagreements = 0
    kinds = (3, 2, 1, 4, 3, 2, 1, 3, 2, 1)  # vertex, edge, facet, degenerate vertex
    for active in kinds:
        P, x = _random_polyhedron(rng, active)
        T = polyhedral_tangent_oracle(P, x)
        # 50 spread directions plus 50 exact projections onto the tangent cone
        dirs = list(sphere_grid(3, 50)[:50])
        dirs += [T.distance(v).witness for v in rng.normal(size=(50, 3))]
        for u in dirs:
            exact = T.distance(u).value <= 1e-9
            td = tangent_decisions(P, x, u)
            for flavor in ("B", "U"):
                total += 1
                v = td[flavor].verdict
                if not v.conclusive:
                    inconclusive += 1
                elif (v is IN) != exact:
                    disagreements += 1
    rate = inconclusive / total
    ok = disagreements == 0 and rate <= 0.05
    record(3, ok, f"tests={total} disagreements={disagreements} inconclusive={rate:.3f}")
    assert ok


# ---------------------------------------------------------------- 4

def test_criterion_4_parabola_second_order():
    P = FunctionGraph("s^2")
    errors = 0
    for u1 in np.linspace(-2, 2, 10):
        for u2 in (0.0, 0.5, 1.0, 1.5, 2.0):
            got = bouligand2_membership(P, [0, 0], [1, 0], [u1, u2]).verdict
            errors += got is not (IN if u2 == 1.0 else OUT)
    record(4, errors == 0, f"grid=50 errors={errors}")
    assert errors == 0


# ---------------------------------------------------------------- 5

def test_criterion_5_rule_suites_on_corpus(corpus_run):
    reports, elapsed = corpus_run
    instances = {inst.id for inst, _ in reports}
    violations, worst, off = 0, 0.0, []
    for inst, rep in reports:
        if rep.suite not in RULE_SUITES:
            continue
        violations += rep.counts[VIOLATION]
        worst = max(worst, rep.inconclusive_rate)
        if rep.status != inst.expect.get(rep.suite, PASS):
            off.append(f"{inst.id}/{rep.suite}={rep.status}")
    ran = {rep.suite for _, rep in reports}
    ok = (len(instances) >= 12 and violations == 0 and worst <= 0.2 and not off
          and elapsed < 300 and set(RULE_SUITES) <= ran)
    record(5, ok, f"instances={len(instances)} violations={violations} "
                  f"max_inconclusive={worst:.3f} unexpected={off} runtime={elapsed:.0f}s")
    assert ok


# ---------------------------------------------------------------- 6

def test_criterion_6_discriminating_instance():
    D = SequenceSet(Sequence1D("1/k"))
    td = tangent_decisions(D, [0.0], [1.0])
    b, u = td["B"], td["U"]
    ok = b.verdict is IN and u.verdict is OUT and u.oscillating
    record(6, ok, f"B={b.verdict} U={u.verdict} tail max={u.limsup_est:.3g} "
                  f"oscillation={u.oscillating} (the gaps 1/k - 1/(k+1) are o(t), so U is IN)")
    assert ok


# ---------------------------------------------------------------- 7

def test_criterion_7_regularity_negatives():
    g = SmoothMap("x^2", ["x"])
    est = subregularity_modulus(g, [0.0], FullSpace(1), solution_set=Singleton([0.0]))
    vals = [v for _, v in est.modulus_trace]
    growth = any(vals[i] < vals[i + 1] < vals[i + 2] and vals[i + 2] >= 4 * vals[i]
                 for i in range(len(vals) - 2))
    c = coderivative_condition_estimate(g, FullSpace(1), [0.0], radius=0.01)
    ok = est.modulus_est == DIVERGENT and growth and c.modulus_est <= 0.05
    record(7, ok, f"modulus={est.modulus_est} growth4x={growth} c_hat={c.modulus_est:.3g}")
    assert ok


# ---------------------------------------------------------------- 8

def test_criterion_8_restriction_coderivative():
    ang = 2 * np.pi * np.arange(16) / 16
    unit = np.column_stack([np.cos(ang), np.sin(ang)])
    ident = SmoothMap(["x", "y"], ["x", "y"])
    half = Polyhedron([[1.0, 0.0]], [0.0])
    r1 = restriction_coderivative_check(ident, half, [0.0, 0.0], unit, 2 * unit)
    zero = SmoothMap("0", ["x", "y"])
    M = Polyhedron([[1.0, 1.0], [-1.0, 2.0], [0.0, -1.0]], [0.0, 0.0, 0.0])
    r2 = restriction_coderivative_check(zero, M, [0.0, 0.0], np.linspace(-2, 2, 16)[:, None],
                                        2 * unit)
    bad = r1.disagreements + r2.disagreements
    record(8, bad == 0, f"identity/half-space {r1.agreements} agree, "
                        f"zero/polyhedron {r2.agreements} agree, disagreements={bad}")
    assert bad == 0


# ---------------------------------------------------------------- 9

def test_criterion_9_monotonicity(corpus_run):
    reports, _ = corpus_run
    checked = broken = 0
    for _, rep in reports:
        if rep.suite != "monotonicity":
            continue
        checked += len(rep.records)
        broken += rep.counts[VIOLATION]
    ok = checked > 0 and broken == 0
    record(9, ok, f"comparisons={checked} violations={broken}")
    assert ok

"""Calculus rules as sampled inclusion tests.

Each suite reads its ingredients from ``instance.params[suite]``, runs the
hypothesis pre-checks, and records one ``(LHS verdict, RHS verdict)`` pair
per sampled element. Directions come from a sphere grid enlarged with
candidate tangent directions (difference quotients of projections), so
both sides of every inclusion see elements that are IN as well as OUT.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from scipy.optimize import linprog

from ..expr import SmoothMap
from ..geometry import FullSpace, Polyhedron, Product, SetSpec, as_vector, ball_samples, sphere_grid
from ..regularity import radius_grid, subregularity_modulus
from ..setvalued import (YES, ConstraintMap, GraphPoint, MapSpec, Perturbation, SumMap, _renamed,
                         _syms, classify_differentiability, constraints_of,
                         default_direction_grid, derivative_candidates, dini_membership,
                         level_set)
from ..tangent import (IN, INCONCLUSIVE, OUT, LimitSchedule, TangentDecision, Verdict, dedupe,
                       tangent_candidates, tangent_decisions, verdict_and)
from .instance import SUITE_NAMES, Instance, InstanceError
from .report import NOT_APPLICABLE, PREMISE_FAILED, InclusionReport

log = logging.getLogger(__name__)

SUITES = SUITE_NAMES

RULES = {
    "product": "tangent sets of products and invertible linear images",
    "preimage": "tangent sets of D ∩ f^-1(E) under metric subregularity",
    "sum_rule": "Bouligand derivative of F1 + F2∘f",
    "optimality": "necessary conditions for weak Pareto minima of F1 + F2",
    "perturbation": "Bouligand derivative of the implicit map G(x, z)",
    "constraint_map": "Bouligand derivative of x -> {y in D : f(x, y) in E}",
    "zero_direction": "second-order sets with zero first-order direction",
    "monotonicity": "Dini ⊂ Ursescu ⊂ Bouligand",
}

PERTURBATION_NOTE = ("second-order perturbation relation follows the reading "
                     "(α, γ1+γ2, β) ∈ T_B²(Gr G) with γ2 from K in direction (u, v, t2)")


@dataclass
class Options:
    """Grid density, sampling seed and schedules shared by all suites."""
    count: int = 16
    seed: int = 0
    samples: int = 32
    sched: LimitSchedule = field(default_factory=LimitSchedule)
    sched2: LimitSchedule = field(default_factory=LimitSchedule.second_order)


class _Decider:
    """Memoised tangent decisions (one quotient trace per input)."""

    def __init__(self, opts: Options):
        self.opts = opts
        self.cache: dict = {}

    def __call__(self, S: SetSpec, x, u, x1=None) -> dict[str, TangentDecision]:
        x, u = as_vector(x, S.dim), as_vector(u, S.dim)
        x1 = None if x1 is None else as_vector(x1, S.dim)
        key = (id(S), x.tobytes(), u.tobytes(), None if x1 is None else x1.tobytes())
        if key not in self.cache:
            sched = self.opts.sched if x1 is None else self.opts.sched2
            self.cache[key] = (S, tangent_decisions(S, x, u, sched, x1))
        return self.cache[key][1]


# ---------------------------------------------------------------- helpers

def _vec(p: dict, key: str, dim: int, default=None):
    if key not in p:
        if default is None:
            raise InstanceError(f"missing parameter {key!r}")
        return as_vector(default, dim)
    try:
        return as_vector(p[key], dim)
    except ValueError as exc:
        raise InstanceError(f"parameter {key!r}: {exc}") from exc


def _need_in(S: SetSpec, x, what: str):
    if S.distance(x).value > max(S.atol, 1e-9):
        raise InstanceError(f"{what}: {np.asarray(x).tolist()} is not in the set")


def _need_graph(F: MapSpec, x, y, what: str):
    if not F.contains(x, y, atol=1e-9):
        raise InstanceError(f"{what}: ({x.tolist()}, {y.tolist()}) is not in the graph")


def _directions(dim: int, opts: Options, extra=()) -> list[np.ndarray]:
    base = [np.zeros(dim)] + list(sphere_grid(dim, opts.count))
    return dedupe(base + [np.asarray(e, float) for e in extra])


def _probes(dim: int, opts: Options) -> list[np.ndarray]:
    """Second-order probes: the zero vector, axes, and scaled ball samples."""
    return dedupe([np.zeros(dim)] + list(sphere_grid(dim, 4))
                  + list(2.0 * ball_samples(dim, opts.count, opts.seed)))


def _map_fn(inst: Instance, p: dict, key: str, n: int) -> SmoothMap:
    if key not in p:
        return SmoothMap([f"x{i}" for i in range(n)], [f"x{i}" for i in range(n)])
    return inst.function(p[key])


def _subregularity(report: InclusionReport, name: str, g_exprs, syms, constraint: SetSpec,
                   extra_cons, ref, blocks, opts: Options) -> bool | None:
    """Run a subregularity pre-check; ``None`` when it cannot be assembled."""
    cons = constraints_of(constraint, syms)
    if cons is None:
        report.prechecks[name] = {"status": "UNCHECKABLE",
                                  "reason": "no closed-form description of the constraint"}
        return None
    g = SmoothMap([str(e) for e in g_exprs], [str(s) for s in syms])
    target = g(ref)
    sol = level_set(cons + list(extra_cons)
                    + [(e - float(c), "=") for e, c in zip(g_exprs, target)], syms)
    est = subregularity_modulus(g, ref, constraint, radius_grid(), opts.samples, solution_set=sol,
                                blocks=blocks, seed=opts.seed)
    d = est.to_dict()
    d["status"] = "DIVERGENT" if est.divergent else "FINITE"
    report.prechecks[name] = d
    return not est.divergent


def _proto(report: InclusionReport, name: str, F: MapSpec, at, opts: Options) -> bool:
    x, y = at
    extra = [np.concatenate([u, v]) for u in sphere_grid(F.n, 4)
             for v in derivative_candidates(F, (x, y), u, sphere_grid(F.m, 4))]
    grid = dedupe(list(default_direction_grid(F.n, F.m, opts.count)) + extra)
    cls = classify_differentiability(F, (x, y), grid, opts.sched, semi=False)
    report.prechecks[name] = {"proto": cls.proto,
                              "witness": None if cls.witness is None
                              else [np.asarray(a).tolist() for a in cls.witness]}
    return cls.proto == YES


def _proto2(report: InclusionReport, name: str, F: MapSpec, at, direction, dec: _Decider,
            opts: Options) -> bool:
    """Second-order proto-differentiability in ``direction`` over sampled pairs."""
    x, y = at
    joint = np.concatenate([x, y])
    d = np.concatenate(direction)
    status, witness = YES, None
    for u in _probes(F.n, opts)[:8]:
        vs = derivative_candidates(F, (x, y), u, _probes(F.m, opts)[:6], direction=direction)
        for v in dedupe(vs + _probes(F.m, opts)[:4]):
            td = dec(F.graph(), joint, np.concatenate([u, v]), d)
            b, uu = td["B"].verdict, td["U"].verdict
            if b.conclusive and uu.conclusive:
                if b is not uu:
                    status, witness = "NO", [u.tolist(), v.tolist()]
                    break
            elif status == YES:
                status = INCONCLUSIVE.value
        if status == "NO":
            break
    report.prechecks[name] = {"proto2": status, "witness": witness}
    return status == YES


def _derivable(report: InclusionReport, name: str, S: SetSpec, x, dec: _Decider, opts: Options,
               x1=None) -> bool:
    """``T_B = T_U`` at ``x`` (second order in direction ``x1`` when given)."""
    if x1 is None:
        dirs = _directions(S.dim, opts, tangent_candidates(S, x, sphere_grid(S.dim, opts.count)))
    else:
        probes = _probes(S.dim, opts)
        dirs = dedupe(probes + tangent_candidates(S, x, probes, x1=x1))
    status = YES
    for u in dirs:
        td = dec(S, x, u, x1)
        b, uu = td["B"].verdict, td["U"].verdict
        if b.conclusive and uu.conclusive:
            if b is not uu:
                status = "NO"
                break
        elif status == YES:
            status = INCONCLUSIVE.value
    report.prechecks[name] = {"derivable": status}
    return status == YES


def _na(report: InclusionReport, why: str) -> InclusionReport:
    report.status = NOT_APPLICABLE
    report.notes.append(why)
    return report


def _inputs(**kw) -> dict:
    return {k: np.asarray(v).tolist() for k, v in kw.items()}


# ---------------------------------------------------------------- product rules

def verify_product_rules(inst: Instance, opts: Options) -> InclusionReport:
    """Product sandwiches ``T_U(D)×T_B(E) ⊂ T_B(D×E) ⊂ T_B(D)×T_B(E)``, the Ursescu
    product equality, their second-order versions, and linear images."""
    p = inst.suite_params("product")
    rep = InclusionReport("product", RULES["product"], inst.id)
    dec = _Decider(opts)
    D, E = inst.set(p["D"]), inst.set(p["E"])
    x, y = _vec(p, "x", D.dim), _vec(p, "y", E.dim)
    _need_in(D, x, "product: x")
    _need_in(E, y, "product: y")
    P, base = Product(D, E), np.concatenate([x, y])
    nd = D.dim
    dirs = _directions(P.dim, opts, tangent_candidates(P, base, sphere_grid(P.dim, opts.count)))
    for w in dirs:
        u, v = w[:nd], w[nd:]
        dD, dE, dP = dec(D, x, u), dec(E, y, v), dec(P, base, w)
        ins = _inputs(u=u, v=v)
        rep.add("T_U(D)×T_B(E) ⊂ T_B(D×E)", ins, verdict_and(dD["U"].verdict, dE["B"].verdict),
                dP["B"].verdict, dP["B"])
        rep.add("T_B(D×E) ⊂ T_B(D)×T_B(E)", ins, dP["B"].verdict,
                verdict_and(dD["B"].verdict, dE["B"].verdict), dP["B"])
        rep.add_equality("T_U(D)×T_U(E) = T_U(D×E)", ins,
                         verdict_and(dD["U"].verdict, dE["U"].verdict), dP["U"].verdict, dP["U"])
    if "x1" in p or "y1" in p:
        x1, y1 = _vec(p, "x1", D.dim, np.zeros(D.dim)), _vec(p, "y1", E.dim, np.zeros(E.dim))
        d1 = np.concatenate([x1, y1])
        probes = _probes(P.dim, opts)
        for w in dedupe(probes + tangent_candidates(P, base, probes, x1=d1)):
            u, v = w[:nd], w[nd:]
            dD, dE, dP = dec(D, x, u, x1), dec(E, y, v, y1), dec(P, base, w, d1)
            ins = _inputs(u=u, v=v, x1=x1, y1=y1)
            rep.add("T²_U(D)×T²_B(E) ⊂ T²_B(D×E)", ins,
                    verdict_and(dD["U"].verdict, dE["B"].verdict), dP["B"].verdict, dP["B"])
            rep.add("T²_B(D×E) ⊂ T²_B(D)×T²_B(E)", ins, dP["B"].verdict,
                    verdict_and(dD["B"].verdict, dE["B"].verdict), dP["B"])
            rep.add_equality("T²_U(D)×T²_U(E) = T²_U(D×E)", ins,
                             verdict_and(dD["U"].verdict, dE["U"].verdict), dP["U"].verdict,
                             dP["U"])
    if "linear_image" in p:
        _linear_image(inst, p["linear_image"], rep, dec, opts)
    return rep.finalize()


def _linear_image(inst, q, rep, dec, opts):
    M = inst.set(q["M"])
    if not isinstance(M, Polyhedron):
        raise InstanceError("linear_image needs a polyhedral set")
    A = np.asarray(q["A"], float)
    if A.shape != (M.dim, M.dim) or abs(np.linalg.det(A)) < 1e-12:
        raise InstanceError("linear_image needs an invertible square matrix")
    Ainv = np.linalg.inv(A)
    AM = Polyhedron(M.A @ Ainv, M.b)
    x = _vec(q, "at", M.dim)
    _need_in(M, x, "linear_image: at")
    for u in _directions(M.dim, opts, tangent_candidates(M, x, sphere_grid(M.dim, opts.count))):
        a, b = dec(M, x, u), dec(AM, A @ x, A @ u)
        for fl in ("B", "U"):
            rep.add_equality(f"A T_{fl}(M) = T_{fl}(AM)", _inputs(u=u), a[fl].verdict,
                             b[fl].verdict, b[fl])
    if "x1" in q:
        x1 = _vec(q, "x1", M.dim)
        probes = _probes(M.dim, opts)
        for u in dedupe(probes + tangent_candidates(M, x, probes, x1=x1)):
            a, b = dec(M, x, u, x1), dec(AM, A @ x, A @ u, A @ x1)
            for fl in ("B", "U"):
                rep.add_equality(f"A T²_{fl}(M) = T²_{fl}(AM)", _inputs(u=u, x1=x1),
                                 a[fl].verdict, b[fl].verdict, b[fl])


# ---------------------------------------------------------------- preimage rules

def verify_preimage_rules(inst: Instance, opts: Options) -> InclusionReport:
    """Tangent sets of ``D ∩ f^-1(E)`` from those of ``D`` and ``E``."""
    p = inst.suite_params("preimage")
    rep = InclusionReport("preimage", RULES["preimage"], inst.id)
    dec = _Decider(opts)
    D, E, f = inst.set(p["D"]), inst.set(p["E"]), inst.function(p["f"])
    if (f.n, f.m) != (D.dim, E.dim):
        raise InstanceError("preimage: f must map the space of D into the space of E")
    xbar = _vec(p, "xbar", D.dim)
    fx = f(xbar)
    _need_in(D, xbar, "preimage: xbar")
    _need_in(E, fx, "preimage: f(xbar)")
    n, m = f.n, f.m
    xs, ys = _syms("x", n), _syms("y", m)
    fexprs = _renamed(f, xs)
    cd, ce = constraints_of(D, xs), constraints_of(E, fexprs)
    if cd is None or ce is None:
        raise InstanceError("preimage: D and E need closed-form descriptions")
    C = level_set(cd + ce, xs)
    ok = _subregularity(rep, "subregularity", [a - b for a, b in zip(fexprs, ys)], xs + ys,
                        Product(D, E), [], np.concatenate([xbar, fx]), (n, m), opts)
    if not ok:
        return _na(rep, "f(x) - y is not (checkably) subregular relative to D×E")
    J = f.jacobian(xbar)
    extra = tangent_candidates(C, xbar, sphere_grid(n, opts.count))
    for u in _directions(n, opts, extra):
        dD, dE, dC = dec(D, xbar, u), dec(E, fx, J @ u), dec(C, xbar, u)
        ins = _inputs(u=u)
        rep.add("T_B(D) ∩ ∇f⁻¹T_U(E) ⊂ T_B(D∩f⁻¹E)", ins,
                verdict_and(dD["B"].verdict, dE["U"].verdict), dC["B"].verdict, dC["B"])
        rep.add("T_U(D) ∩ ∇f⁻¹T_B(E) ⊂ T_B(D∩f⁻¹E)", ins,
                verdict_and(dD["U"].verdict, dE["B"].verdict), dC["B"].verdict, dC["B"])
        rep.add_equality("T_U(D) ∩ ∇f⁻¹T_U(E) = T_U(D∩f⁻¹E)", ins,
                         verdict_and(dD["U"].verdict, dE["U"].verdict), dC["U"].verdict, dC["U"])
        rep.add("T_B(D∩f⁻¹E) ⊂ T_B(D) ∩ ∇f⁻¹T_B(E)", ins, dC["B"].verdict,
                verdict_and(dD["B"].verdict, dE["B"].verdict), dC["B"])
    if "x1" in p:
        x1 = _vec(p, "x1", n)
        H = f.hessian(xbar)
        corr = 0.5 * np.einsum("kij,i,j->k", H, x1, x1)
        probes = _probes(n, opts)
        for u in dedupe(probes + tangent_candidates(C, xbar, probes, x1=x1)):
            w = J @ u + corr
            dD, dE, dC = dec(D, xbar, u, x1), dec(E, fx, w, J @ x1), dec(C, xbar, u, x1)
            ins = _inputs(u=u, x1=x1)
            rep.add("T²_B(D) ∩ ∇f⁻¹(T²_U(E) - ½∇²f) ⊂ T²_B(D∩f⁻¹E)", ins,
                    verdict_and(dD["B"].verdict, dE["U"].verdict), dC["B"].verdict, dC["B"])
            rep.add("T²_U(D) ∩ ∇f⁻¹(T²_B(E) - ½∇²f) ⊂ T²_B(D∩f⁻¹E)", ins,
                    verdict_and(dD["U"].verdict, dE["B"].verdict), dC["B"].verdict, dC["B"])
            rep.add("T²_U(D) ∩ ∇f⁻¹(T²_U(E) - ½∇²f) ⊂ T²_U(D∩f⁻¹E)", ins,
                    verdict_and(dD["U"].verdict, dE["U"].verdict), dC["U"].verdict, dC["U"])
    return rep.finalize()


# ---------------------------------------------------------------- sum rule

def _pairs(F1, at1, F2, at2, u1, u2, m, opts, dir1=None, dir2=None, limit=4):
    probes = list(sphere_grid(m, 4)) if dir1 is None else _probes(m, opts)[:8]
    c1 = derivative_candidates(F1, at1, u1, probes, direction=dir1)[:limit]
    c2 = derivative_candidates(F2, at2, u2, probes, direction=dir2)[:limit]
    plain = [np.zeros(m)] + list(sphere_grid(m, 2))
    return list(itertools.product(dedupe(c1 + plain), dedupe(c2 + plain)))


def _sum_prechecks(rep, F1, F2, f, x1b, y1b, x2b, y2b, opts, g_of):
    """Proto pre-check on F1 or F2 and subregularity of ``g_of(α, γ)`` on Gr F1 × Gr F2."""
    n, m = F1.n, F1.m
    proto = _proto(rep, "proto_F1", F1, (x1b, y1b), opts) or \
        _proto(rep, "proto_F2", F2, (x2b, y2b), opts)
    a, b, c, d = _syms("a", n), _syms("b", m), _syms("c", F2.n), _syms("d", m)
    ok = _subregularity(rep, "subregularity", g_of(a, c), a + b + c + d,
                        Product(F1.graph(), F2.graph()), [],
                        np.concatenate([x1b, y1b, x2b, y2b]), (n, m, F2.n, m), opts)
    if not proto:
        return "neither F1 nor F2 is (checkably) proto-differentiable"
    if not ok:
        return "the subregularity pre-check failed or could not be assembled"
    return None


def verify_sum_rule(inst: Instance, opts: Options) -> InclusionReport:
    """``D_B F1(u) + D_B F2(∇f u) ⊂ D_B(F1 + F2∘f)(u)`` and its second-order variant."""
    p = inst.suite_params("sum_rule")
    rep = InclusionReport("sum_rule", RULES["sum_rule"], inst.id)
    dec = _Decider(opts)
    F1, F2 = inst.map(p["F1"]), inst.map(p["F2"])
    n, m = F1.n, F1.m
    f = _map_fn(inst, p, "f", n)
    if (f.n, f.m) != (n, F2.n) or F2.m != m:
        raise InstanceError("sum_rule: dimensions of F1, F2 and f do not match")
    xbar = _vec(p, "xbar", n)
    y1, y2 = _vec(p, "y1", m), _vec(p, "y2", m)
    fx = f(xbar)
    _need_graph(F1, xbar, y1, "sum_rule: (xbar, y1)")
    _need_graph(F2, fx, y2, "sum_rule: (f(xbar), y2)")
    why = _sum_prechecks(rep, F1, F2, f, xbar, y1, fx, y2, opts,
                         lambda a, c: [e - ci for e, ci in zip(_renamed(f, a), c)])
    if why:
        return _na(rep, why)
    S = SumMap(F1, F2, f)
    G, base = S.graph(), np.concatenate([xbar, y1 + y2])
    J = f.jacobian(xbar)
    for u in _directions(n, opts):
        for v1, v2 in _pairs(F1, (xbar, y1), F2, (fx, y2), u, J @ u, m, opts):
            b1 = dec(F1.graph(), np.concatenate([xbar, y1]), np.concatenate([u, v1]))["B"]
            b2 = dec(F2.graph(), np.concatenate([fx, y2]), np.concatenate([J @ u, v2]))["B"]
            bs = dec(G, base, np.concatenate([u, v1 + v2]))["B"]
            rep.add("D_B F1(u) + D_B F2(∇f u) ⊂ D_B(F1+F2∘f)(u)", _inputs(u=u, v1=v1, v2=v2),
                    verdict_and(b1.verdict, b2.verdict), bs.verdict, bs)
    if "second_order" in p:
        q = p["second_order"]
        if not f.is_affine:
            raise InstanceError("sum_rule: the second-order variant needs a linear f")
        x, d1, d2 = _vec(q, "x", n), _vec(q, "y1", m), _vec(q, "y2", m)
        dir1, dir2 = (x, d1), (J @ x, d2)
        ok = _proto2(rep, "proto2_F1", F1, (xbar, y1), dir1, dec, opts) or \
            _proto2(rep, "proto2_F2", F2, (fx, y2), dir2, dec, opts)
        if not ok:
            rep.notes.append("second-order part skipped: neither map is (checkably) "
                             "second-order proto-differentiable in the given direction")
        else:
            dS = np.concatenate([x, d1 + d2])
            for u in _probes(n, opts)[:10]:
                for v1, v2 in _pairs(F1, (xbar, y1), F2, (fx, y2), u, J @ u, m, opts,
                                     dir1, dir2):
                    b1 = dec(F1.graph(), np.concatenate([xbar, y1]), np.concatenate([u, v1]),
                             np.concatenate(dir1))["B"]
                    b2 = dec(F2.graph(), np.concatenate([fx, y2]), np.concatenate([J @ u, v2]),
                             np.concatenate(dir2))["B"]
                    bs = dec(G, base, np.concatenate([u, v1 + v2]), dS)["B"]
                    rep.add("D²_B F1(u) + D²_B F2(∇f u) ⊂ D²_B(F1+F2∘f)(u)",
                            _inputs(u=u, v1=v1, v2=v2, x=x), verdict_and(b1.verdict, b2.verdict),
                            bs.verdict, bs)
    return rep.finalize()


# ---------------------------------------------------------------- optimality

def _cone_rows(C: SetSpec) -> np.ndarray:
    if not isinstance(C, Polyhedron) or np.any(np.abs(C.b) > 1e-12):
        raise InstanceError("optimality: C must be a polyhedral cone {y : A y <= 0}")
    A = C.A / np.linalg.norm(C.A, axis=1, keepdims=True)
    # nonempty interior: some e with A e < 0
    res = linprog(np.r_[np.zeros(C.dim), -1.0], A_ub=np.c_[A, np.ones(len(A))],
                  b_ub=np.zeros(len(A)), bounds=[(-1, 1)] * C.dim + [(None, 1)])
    if not res.success or res.x[-1] <= 1e-9:
        raise InstanceError("optimality: C has empty interior")
    return A


def _interior_direction(A):
    res = linprog(np.r_[np.zeros(A.shape[1]), -1.0], A_ub=np.c_[A, np.ones(len(A))],
                  b_ub=np.zeros(len(A)), bounds=[(-1, 1)] * A.shape[1] + [(None, 1)])
    return res.x[:-1]


def _outside_neg_int(A, w, sched: LimitSchedule) -> Verdict:
    """Verdict for ``w ∉ -int C``: ``w ∈ -int C`` iff ``A w > 0`` componentwise."""
    s = float(np.min(A @ w))
    if s <= sched.eps_in:
        return IN
    if s >= sched.eps_out:
        return OUT
    return INCONCLUSIVE


def weak_pareto_check(S: MapSpec, A, ybar, box, points: int = 41) -> list | None:
    """Bounded-grid surrogate of ``((F1+F2)(X) - ȳ) ∩ (-int C) = ∅``.

    Returns a witness ``[x, y]`` with ``A (y - ȳ) > 0`` or ``None``.
    """
    e = _interior_direction(A)
    lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
    axes = [np.linspace(a, b, points if S.n == 1 else max(5, int(points ** (1 / S.n))))
            for a, b in zip(lo, hi)]
    for x in itertools.product(*axes):
        x = np.asarray(x)
        fib = S.fiber(x, closure=False)
        if fib is None:
            continue
        for r in (0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0):
            res = fib.distance(ybar + r * e)
            if res.is_empty:
                break
            if np.min(A @ (res.witness - ybar)) > 1e-9:
                return [x.tolist(), res.witness.tolist()]
    return None


def verify_optimality(inst: Instance, opts: Options) -> InclusionReport:
    """``[D_B F1(u) + D_B F2(u)] ∩ (-int C) = ∅`` at a weak Pareto candidate."""
    p = inst.suite_params("optimality")
    rep = InclusionReport("optimality", RULES["optimality"], inst.id)
    dec = _Decider(opts)
    F1, F2 = inst.map(p["F1"]), inst.map(p["F2"])
    n, m = F1.n, F1.m
    if (F2.n, F2.m) != (n, m):
        raise InstanceError("optimality: F1 and F2 must have the same dimensions")
    A = _cone_rows(inst.set(p["C"]))
    xbar, y1, y2 = _vec(p, "xbar", n), _vec(p, "y1", m), _vec(p, "y2", m)
    _need_graph(F1, xbar, y1, "optimality: (xbar, y1)")
    _need_graph(F2, xbar, y2, "optimality: (xbar, y2)")
    S = SumMap(F1, F2)
    box = p.get("box", [(xbar - 1.0).tolist(), (xbar + 1.0).tolist()])
    wit = weak_pareto_check(S, A, y1 + y2, box, int(p.get("box_points", 41)))
    rep.prechecks["weak_pareto"] = {"box": box, "witness": wit}
    if wit is not None:
        rep.status = PREMISE_FAILED
        rep.notes.append(f"candidate is not weak Pareto on the sampled grid: {wit}")
        return rep
    why = _sum_prechecks(rep, F1, F2, None, xbar, y1, xbar, y2, opts,
                         lambda a, c: [ai - ci for ai, ci in zip(a, c)])
    if why:
        return _na(rep, why)
    j1, j2 = np.concatenate([xbar, y1]), np.concatenate([xbar, y2])
    for u in _directions(n, opts):
        for v1, v2 in _pairs(F1, (xbar, y1), F2, (xbar, y2), u, u, m, opts):
            b1 = dec(F1.graph(), j1, np.concatenate([u, v1]))["B"]
            b2 = dec(F2.graph(), j2, np.concatenate([u, v2]))["B"]
            rep.add("D_B F1(u) + D_B F2(u) ⊂ Y \\ -int C", _inputs(u=u, v1=v1, v2=v2),
                    verdict_and(b1.verdict, b2.verdict), _outside_neg_int(A, v1 + v2, opts.sched))
    if "second_order" in p:
        q = p["second_order"]
        x, d1, d2 = _vec(q, "x", n), _vec(q, "y1", m), _vec(q, "y2", m)
        if np.any(A @ (-(d1 + d2)) > 1e-12):
            raise InstanceError("optimality: y1 + y2 must lie in -C")
        ok = _proto2(rep, "proto2_F1", F1, (xbar, y1), (x, d1), dec, opts) or \
            _proto2(rep, "proto2_F2", F2, (xbar, y2), (x, d2), dec, opts)
        if not ok:
            rep.notes.append("second-order part skipped: neither map is (checkably) "
                             "second-order proto-differentiable in the given direction")
        else:
            for u in _probes(n, opts)[:10]:
                for v1, v2 in _pairs(F1, (xbar, y1), F2, (xbar, y2), u, u, m, opts,
                                     (x, d1), (x, d2)):
                    b1 = dec(F1.graph(), j1, np.concatenate([u, v1]), np.r_[x, d1])["B"]
                    b2 = dec(F2.graph(), j2, np.concatenate([u, v2]), np.r_[x, d2])["B"]
                    rep.add("D²_B F1(u) + D²_B F2(u) ⊂ Y \\ -int C",
                            _inputs(u=u, v1=v1, v2=v2, x=x), verdict_and(b1.verdict, b2.verdict),
                            _outside_neg_int(A, v1 + v2, opts.sched))
    return rep.finalize()


# ---------------------------------------------------------------- perturbation maps

def verify_perturbation(inst: Instance, opts: Options) -> InclusionReport:
    """``{v : w ∈ D_B F(u, v) + D_B K(u, v)} ⊂ D_B G(x̄, z̄, ȳ)(u, w)`` for
    ``G(x, z) = {y : z ∈ F(x, y) + K(x, y)}``."""
    p = inst.suite_params("perturbation")
    rep = InclusionReport("perturbation", RULES["perturbation"], inst.id)
    dec = _Decider(opts)
    F, K, nx = inst.map(p["F"]), inst.map(p["K"]), int(p["nx"])
    G = Perturbation(F, K, nx)
    ny, nz = F.n - nx, F.m
    xbar, ybar = _vec(p, "xbar", nx), _vec(p, "ybar", ny)
    q, t = _vec(p, "q", nz), _vec(p, "t", nz)
    xy = np.concatenate([xbar, ybar])
    _need_graph(F, xy, q, "perturbation: (xbar, ybar, q)")
    _need_graph(K, xy, t, "perturbation: (xbar, ybar, t)")
    zbar = q + t
    ok_proto = _proto(rep, "proto_F", F, (xy, q), opts) or _proto(rep, "proto_K", K, (xy, t), opts)
    xs, ys, zs = _syms("x", nx), _syms("y", ny), _syms("z", nz)
    us, vs, ts = _syms("u", nx), _syms("v", ny), _syms("t", nz)
    ok_sub = _subregularity(rep, "subregularity",
                            [a - b for a, b in zip(xs + ys, us + vs)], xs + ys + zs + us + vs + ts,
                            Product(F.graph(), K.graph()), [],
                            np.concatenate([xy, q, xy, t]), (nx, ny, nz, nx, ny, nz), opts)
    if not ok_proto:
        return _na(rep, "neither F nor K is (checkably) proto-differentiable")
    if not ok_sub:
        return _na(rep, "the subregularity pre-check failed or could not be assembled")
    GG, gbase = G.graph(), np.concatenate([xbar, zbar, ybar])
    jF, jK = np.concatenate([xy, q]), np.concatenate([xy, t])
    for uv in _directions(nx + ny, opts):
        u, v = uv[:nx], uv[nx:]
        for a, b in _pairs(F, (xy, q), K, (xy, t), uv, uv, nz, opts):
            bF = dec(F.graph(), jF, np.concatenate([uv, a]))["B"]
            bK = dec(K.graph(), jK, np.concatenate([uv, b]))["B"]
            bG = dec(GG, gbase, np.concatenate([u, a + b, v]))["B"]
            rep.add("D_B F(u,v) + D_B K(u,v) ∋ w ⇒ v ∈ D_B G(u, w)", _inputs(u=u, v=v, p=a, j=b),
                    verdict_and(bF.verdict, bK.verdict), bG.verdict, bG)
    if "second_order" in p:
        rep.notes.append(PERTURBATION_NOTE)
        s = p["second_order"]
        u1, v1 = _vec(s, "u", nx), _vec(s, "v", ny)
        t1, t2 = _vec(s, "t1", nz), _vec(s, "t2", nz)
        uv1 = np.concatenate([u1, v1])
        ok = _proto2(rep, "proto2_F", F, (xy, q), (uv1, t1), dec, opts) or \
            _proto2(rep, "proto2_K", K, (xy, t), (uv1, t2), dec, opts)
        if not ok:
            rep.notes.append("second-order part skipped: neither map is (checkably) "
                             "second-order proto-differentiable in the given direction")
        else:
            dG = np.concatenate([u1, t1 + t2, v1])
            for ab in _probes(nx + ny, opts)[:10]:
                al, be = ab[:nx], ab[nx:]
                for c, e in _pairs(F, (xy, q), K, (xy, t), ab, ab, nz, opts, (uv1, t1),
                                   (uv1, t2)):
                    bF = dec(F.graph(), jF, np.concatenate([ab, c]), np.r_[uv1, t1])["B"]
                    bK = dec(K.graph(), jK, np.concatenate([ab, e]), np.r_[uv1, t2])["B"]
                    bG = dec(GG, gbase, np.concatenate([al, c + e, be]), dG)["B"]
                    rep.add("(α,γ1+γ2,β) ∈ T²_B(Gr G)", _inputs(alpha=al, beta=be, g1=c, g2=e),
                            verdict_and(bF.verdict, bK.verdict), bG.verdict, bG)
    return rep.finalize()


# ---------------------------------------------------------------- constraint maps

def verify_constraint_map(inst: Instance, opts: Options) -> InclusionReport:
    """``D_B F(x̄, ȳ)(u) = {v ∈ T_B(D, ȳ) : ∇f(x̄, ȳ)(u, v) ∈ T_B(E, f(x̄, ȳ))}`` and
    its second-order version with the Hessian correction."""
    p = inst.suite_params("constraint_map")
    rep = InclusionReport("constraint_map", RULES["constraint_map"], inst.id)
    dec = _Decider(opts)
    f, D, E, n = inst.function(p["f"]), inst.set(p["D"]), inst.set(p["E"]), int(p["n"])
    F = ConstraintMap(f, D, E, n)
    m, k = F.m, f.m
    xbar, ybar = _vec(p, "xbar", n), _vec(p, "ybar", m)
    xy = np.concatenate([xbar, ybar])
    fx = f(xy)
    _need_in(D, ybar, "constraint_map: ybar")
    _need_in(E, fx, "constraint_map: f(xbar, ybar)")
    ok_der = _derivable(rep, "derivable_D", D, ybar, dec, opts) or \
        _derivable(rep, "derivable_E", E, fx, dec, opts)
    xs, ys, zs = _syms("x", n), _syms("y", m), _syms("z", k)
    fexprs = _renamed(f, xs + ys)
    ok_sub = _subregularity(rep, "subregularity", [a - b for a, b in zip(fexprs, zs)], xs + ys + zs,
                            Product(Product(FullSpace(n), D), E), [],
                            np.concatenate([xy, fx]), (n, m, k), opts)
    if not ok_der:
        return _na(rep, "neither D nor E is (checkably) derivable at the reference point")
    if not ok_sub:
        return _na(rep, "the subregularity pre-check failed or could not be assembled")
    Gr = F.graph()
    J = f.jacobian(xy)
    extra = tangent_candidates(Gr, xy, sphere_grid(n + m, opts.count))
    for w in _directions(n + m, opts, extra):
        v = w[n:]
        dG, dD, dE = dec(Gr, xy, w), dec(D, ybar, v), dec(E, fx, J @ w)
        rep.add_equality("D_B F(u) = {v ∈ T_B(D) : ∇f(u,v) ∈ T_B(E)}", _inputs(u=w[:n], v=v),
                         dG["B"].verdict, verdict_and(dD["B"].verdict, dE["B"].verdict), dG["B"])
    if "second_order" in p:
        s = p["second_order"]
        x1, y1 = _vec(s, "x1", n), _vec(s, "y1", m)
        d1 = np.concatenate([x1, y1])
        H = f.hessian(xy)
        corr = 0.5 * np.einsum("kij,i,j->k", H, d1, d1)
        ok = _derivable(rep, "derivable2_D", D, ybar, dec, opts, x1=y1) or \
            _derivable(rep, "derivable2_E", E, fx, dec, opts, x1=J @ d1)
        if not ok:
            rep.notes.append("second-order part skipped: neither D nor E is (checkably) "
                             "second-order derivable in the given direction")
        else:
            probes = _probes(n + m, opts)
            for w in dedupe(probes + tangent_candidates(Gr, xy, probes, x1=d1)):
                v = w[n:]
                dG, dD = dec(Gr, xy, w, d1), dec(D, ybar, v, y1)
                dE = dec(E, fx, J @ w + corr, J @ d1)
                rep.add_equality("D²_B F(u) = {v ∈ T²_B(D) : ∇f(u,v) + ½∇²f ∈ T²_B(E)}",
                                 _inputs(u=w[:n], v=v, x1=x1, y1=y1), dG["B"].verdict,
                                 verdict_and(dD["B"].verdict, dE["B"].verdict), dG["B"])
    return rep.finalize()


# ---------------------------------------------------------------- structural suites

def _objects(inst: Instance):
    """``(label, set, point)`` for every set and map graph with a reference point."""
    for name, x in inst.set_points.items():
        yield f"set:{name}", inst.sets[name], x
    for name, (x, y) in inst.map_points.items():
        yield f"map:{name}", inst.maps[name].graph(), np.concatenate([x, y])


def verify_zero_direction(inst: Instance, opts: Options) -> InclusionReport:
    """``T²_*(D, x̄, 0) = T_*(D, x̄)`` for both flavors."""
    rep = InclusionReport("zero_direction", RULES["zero_direction"], inst.id)
    dec = _Decider(opts)
    for label, S, x in _objects(inst):
        zero = np.zeros(S.dim)
        extra = tangent_candidates(S, x, sphere_grid(S.dim, opts.count))
        for u in _directions(S.dim, opts, extra):
            a, b = dec(S, x, u), dec(S, x, u, zero)
            for fl in ("B", "U"):
                rep.add_equality(f"T²_{fl}(·,0) = T_{fl}", {"object": label, "u": u.tolist()},
                                 b[fl].verdict, a[fl].verdict, b[fl])
    if not rep.records:
        return _na(rep, "no set or map carries a reference point")
    return rep.finalize()


def verify_monotonicity(inst: Instance, opts: Options) -> InclusionReport:
    """``T_U ⊂ T_B`` on every set, and ``D_D ⊂ D_U ⊂ D_B`` on every map."""
    rep = InclusionReport("monotonicity", RULES["monotonicity"], inst.id)
    dec = _Decider(opts)
    for label, S, x in _objects(inst):
        extra = tangent_candidates(S, x, sphere_grid(S.dim, opts.count))
        for u in _directions(S.dim, opts, extra):
            d = dec(S, x, u)
            rep.add("T_U ⊂ T_B", {"object": label, "u": u.tolist()}, d["U"].verdict,
                    d["B"].verdict, d["B"])
    for name, (x, y) in inst.map_points.items():
        F = inst.maps[name]
        joint = np.concatenate([x, y])
        for u in _directions(F.n, opts)[: opts.count // 2 + 1]:
            for v in dedupe(derivative_candidates(F, (x, y), u, sphere_grid(F.m, 4))
                            + list(sphere_grid(F.m, 2))):
                d = dec(F.graph(), joint, np.concatenate([u, v]))
                dd = dini_membership(F, (x, y), u, v, opts.sched)
                ins = {"object": f"map:{name}", "u": u.tolist(), "v": v.tolist()}
                rep.add("D_D ⊂ D_U", ins, dd.verdict, d["U"].verdict, d["U"])
                rep.add("D_U ⊂ D_B", ins, d["U"].verdict, d["B"].verdict, d["B"])
    if not rep.records:
        return _na(rep, "no set or map carries a reference point")
    return rep.finalize()


RUNNERS = {
    "product": verify_product_rules,
    "preimage": verify_preimage_rules,
    "sum_rule": verify_sum_rule,
    "optimality": verify_optimality,
    "perturbation": verify_perturbation,
    "constraint_map": verify_constraint_map,
    "zero_direction": verify_zero_direction,
    "monotonicity": verify_monotonicity,
}


def run_suite(inst: Instance, suite: str, opts: Options | None = None) -> InclusionReport:
    if suite not in RUNNERS:
        raise InstanceError(f"unknown suite {suite!r}; known: {sorted(RUNNERS)}")
    return RUNNERS[suite](inst, opts or Options(count=inst.grid_count, sched=inst.sched(),
                                                sched2=inst.sched2()))

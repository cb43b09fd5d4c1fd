"""Sampled estimates of regularity moduli and Fréchet normals.

All estimators sweep a decreasing radius grid ``r_k``, take the worst sampled
ratio inside each ball and report the resulting trace. A trace whose value
grows by the blow-up factor (default 4) across three consecutive radii, or
that hits an infinite ratio (empty value set), is flagged ``DIVERGENT``.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (FullSpace, Polyhedron, SetSpec, Union, as_vector, ball_samples,
                       cone_generators_distance, sphere_grid, sum_norm_distance)
from .tangent import IN, INCONCLUSIVE, OUT, TangentDecision, Verdict

log = logging.getLogger(__name__)

DIVERGENT = "DIVERGENT"
BLOWUP = 4.0


def radius_grid(r0: float = 0.5, count: int = 6, ratio: float = 0.5) -> np.ndarray:
    return r0 * ratio ** np.arange(count)


@dataclass
class RegularityEstimate:
    """Modulus trace over shrinking radii and its summary value."""
    modulus_trace: list[tuple[float, float]]
    modulus_est: float | str
    samples_used: int = 0
    flags: list[str] = field(default_factory=list)

    @property
    def divergent(self) -> bool:
        return self.modulus_est == DIVERGENT

    @property
    def finite(self) -> bool:
        return not self.divergent and math.isfinite(self.modulus_est)

    def to_dict(self):
        return {"modulus_est": self.modulus_est if self.divergent else float(self.modulus_est),
                "trace": [[r, v if math.isfinite(v) else "inf"] for r, v in self.modulus_trace],
                "samples_used": self.samples_used, "flags": list(self.flags)}

    def write_csv(self, fh, label: str = ""):
        w = csv.writer(fh)
        w.writerow(["label", "radius", "modulus"])
        for r, v in self.modulus_trace:
            w.writerow([label, repr(r), repr(v)])


def blows_up(values: Sequence[float], factor: float = BLOWUP) -> bool:
    """True if the sequence contains ``inf`` or grows by ``factor`` over three
    consecutive (increasing) entries."""
    v = [float(x) for x in values]
    if any(math.isinf(x) for x in v):
        return True
    slack = 1.0 - 1e-9
    for a, b, c in zip(v, v[1:], v[2:]):
        if a > 0 and a < b < c and c >= factor * a * slack:
            return True
    return False


def summarize(trace: list[tuple[float, float]], samples: int, factor: float = BLOWUP,
              flags=None) -> RegularityEstimate:
    flags = list(flags or [])
    vals = [v for _, v in trace]
    if not vals:
        return RegularityEstimate(trace, math.nan, samples, flags + ["no samples"])
    if blows_up(vals, factor):
        return RegularityEstimate(trace, DIVERGENT, samples, flags)
    tail = vals[-math.ceil(len(vals) / 3):]
    return RegularityEstimate(trace, float(max(tail)), samples, flags)


# ---------------------------------------------------------------- subregularity

def subregularity_modulus(g, ref, constraint: SetSpec, radii=None, samples: int = 64,
                          solution_set: SetSpec | None = None, blocks=None, seed: int = 0,
                          extra_points=None) -> RegularityEstimate:
    """Estimate the subregularity modulus of ``g`` at ``ref`` relative to ``constraint``.

    For each radius, ``mu(r)`` is the largest ratio
    ``d(u, g^{-1}(g(ref)) ∩ constraint) / |g(ref) - g(u)|`` over sampled
    ``u`` of the constraint inside the ball. ``solution_set`` must describe
    ``g^{-1}(g(ref)) ∩ constraint`` (exact distance is required); when omitted
    it is built for affine ``g`` with a polyhedral constraint. Distances use
    the sum norm over ``blocks`` (the constraint's factor structure by default).
    """
    ref = as_vector(ref, constraint.dim)
    radii = radius_grid() if radii is None else np.asarray(radii, float)
    if solution_set is None:
        solution_set = _affine_level_set(g, ref, constraint)
    blocks = tuple(blocks) if blocks is not None else constraint.blocks
    g_ref = g(ref)
    pattern = ball_samples(constraint.dim, samples, seed)
    flags = []

    def dist(u):
        if len(blocks) > 1 and not flags:
            try:
                return sum_norm_distance(solution_set, u, blocks).value
            except NotImplementedError:
                flags.append("euclidean distance (no sum-norm oracle for this set)")
        return solution_set.distance(u).value

    trace, used = [], 0
    for r in radii:
        pts = [constraint.local_distance(ref, r * s).witness for s in pattern]
        if extra_points is not None:
            pts.extend(extra_points(r))
        best = -math.inf
        for u in pts:
            if u is None or np.linalg.norm(u - ref) > r * (1 + 1e-9) * max(1, len(blocks)):
                continue
            denom = float(np.linalg.norm(g_ref - g(u)))
            if denom <= 1e-300:
                continue
            used += 1
            best = max(best, dist(u) / denom)
        if best == -math.inf:
            log.warning("no valid samples at radius %g; skipped", r)
            continue
        trace.append((float(r), float(best)))
    return summarize(trace, used, flags=flags)


def _affine_level_set(g, ref, constraint):
    if not getattr(g, "is_affine", False):
        raise ValueError("pass solution_set explicitly for non-affine g")
    J, c = g.affine_parts()
    target = g(ref)
    if isinstance(constraint, FullSpace):
        return Polyhedron.from_equalities(J, target - c)
    if isinstance(constraint, Polyhedron):
        return Polyhedron.from_equalities(J, target - c, constraint.A, constraint.b)
    raise ValueError("pass solution_set explicitly for this constraint")


# ---------------------------------------------------------------- metric regularity

def metric_regularity_modulus(F, at, radii=None, samples: int = 64, seed: int = 0
                              ) -> RegularityEstimate:
    """Estimate ``inf a`` with ``d(u, F^{-1}(v)) <= a d(v, F(u))`` near ``at``.

    ``(u, v)`` are sampled jointly from a ball around ``(xbar, ybar)``; pairs
    with ``v`` in ``F(u)`` carry no information and are skipped. An empty
    ``F^{-1}(v)`` gives an infinite ratio.
    """
    xbar, ybar = _point(F, at)
    radii = radius_grid() if radii is None else np.asarray(radii, float)
    n, m = F.n, F.m
    graph = F.graph()
    pattern = ball_samples(n + m, samples, seed)
    trace, used = [], 0
    for r in radii:
        best = -math.inf
        for s in pattern:
            u = xbar + r * s[:n]
            v = ybar + r * s[n:]
            dv = F.fiber_distance(u, v, closure=True)
            if dv <= 1e-300:
                continue
            inv = graph.section(list(range(n, n + m)), v, closure=True)
            du = math.inf if inv is None else inv.distance(u).value
            used += 1
            best = max(best, du / dv if math.isfinite(dv) else 0.0)
        if best == -math.inf:
            log.warning("no valid samples at radius %g; skipped", r)
            continue
        trace.append((float(r), float(best)))
    return summarize(trace, used)


def _point(F, at):
    if hasattr(at, "x"):
        return as_vector(at.x, F.n), as_vector(at.y, F.m)
    x, y = at
    return as_vector(x, F.n), as_vector(y, F.m)


# ---------------------------------------------------------------- Fréchet normals

def exact_normal_cone_distance(S: SetSpec, x, xstar) -> float | None:
    """Distance from ``xstar`` to the Fréchet normal cone, exact for polyhedra and
    unions of polyhedra; ``None`` for other kinds."""
    xstar = np.asarray(xstar, float)
    if isinstance(S, FullSpace):
        return float(np.linalg.norm(xstar))
    if isinstance(S, Polyhedron):
        act = S.active_rows(x)
        return cone_generators_distance(S.A[act], xstar)
    if isinstance(S, Union) and all(isinstance(p, (Polyhedron, FullSpace)) for p in S.pieces):
        live = [p for p in S.pieces if p.contains(x)]
        return max(exact_normal_cone_distance(p, x, xstar) for p in live)
    return None


def frechet_normal_membership(S: SetSpec, x, xstar, radii=None, samples: int = 64,
                              sched_eps=(1e-4, 1e-2), exact: bool = True, seed: int = 0
                              ) -> TangentDecision:
    """Decide ``xstar ∈ N̂(S, x)``.

    Polyhedral sets are decided exactly through the polar of the active cone
    (``exact=False`` forces the sampled route). Otherwise the limsup of
    ``<xstar, u - x> / |u - x|`` over ``u`` in ``S`` near ``x`` is estimated
    from low-discrepancy ball samples projected onto ``S``.
    """
    x = as_vector(x, S.dim)
    xstar = as_vector(xstar, S.dim)
    eps_in, eps_out = sched_eps
    if exact:
        d = exact_normal_cone_distance(S, x, xstar)
        if d is not None:
            v = IN if d <= 1e-9 * (1 + np.linalg.norm(xstar)) else OUT
            return TangentDecision(v, [], d, d, False, "exact polar")
    radii = radius_grid(1.0, 6) if radii is None else np.asarray(radii, float)
    pattern = np.vstack([ball_samples(S.dim, samples, seed), sphere_grid(S.dim, 16)])
    trace = []
    for r in radii:
        best = -math.inf
        for s in pattern:
            w = S.local_distance(x, r * s).witness
            if w is None:
                continue
            dw = w - x
            nd = np.linalg.norm(dw)
            if nd <= 1e-12 * r:
                continue
            best = max(best, float(xstar @ dw) / nd)
        trace.append((float(r), best))
    finite = [q for _, q in trace if q > -math.inf]
    if not finite:
        return TangentDecision(IN, trace, -math.inf, -math.inf, False, "isolated point")
    tail = [q for _, q in trace[-math.ceil(len(trace) / 3):]]
    hi = max(tail)
    # limsup <= 0 is the condition; scale thresholds by |x*|
    scale = max(1.0, float(np.linalg.norm(xstar)))
    if hi <= eps_in * scale:
        v = IN
    elif hi >= eps_out * scale:
        v = OUT
    else:
        v = INCONCLUSIVE
    return TangentDecision(v, trace, min(tail), hi, False, "sampled")


# ---------------------------------------------------------------- coderivative condition

def coderivative_condition_estimate(f, M: SetSpec, ref, radius: float, samples: int = 64,
                                    threshold: float = 1e-3, seed: int = 0
                                    ) -> RegularityEstimate:
    """Estimate ``c = inf |n + ∇f(x)^T y*|`` over ``x ∈ M`` near ``ref``, unit ``y*``
    and ``n ∈ N̂(M, x)``.

    A value above ``threshold`` is reported as the flag
    ``"sufficient condition holds (estimate)"``. Exact for polyhedral ``M``
    (normal cones from active rows) and scalar-valued or full-space cases;
    otherwise unit ``y*`` are sampled.
    """
    ref = as_vector(ref, M.dim)
    m = f.m
    pts = [ref] + [M.local_distance(ref, radius * s).witness
                   for s in ball_samples(M.dim, samples, seed)]
    flags = []
    if m == 1:
        ystars = np.array([[1.0], [-1.0]])
    else:
        ystars = sphere_grid(m, 128)
    best = math.inf
    for x in pts:
        if x is None:
            continue
        J = f.jacobian(x)
        gens = _normal_generators(M, x)
        if gens is None:
            flags.append("low-confidence: normal cone not exact")
            gens = np.zeros((0, M.dim))
        if gens.shape[0] == 0 and m > 1:
            best = min(best, float(np.linalg.svd(J, compute_uv=False)[-1]) if m <= M.dim else 0.0)
            continue
        for ys in ystars:
            # inf over the cone of |n + J^T y*| = distance of -J^T y* to the cone
            best = min(best, cone_generators_distance(gens, -(J.T @ ys)))
    trace = [(float(radius), best)]
    est = RegularityEstimate(trace, best, len(pts), sorted(set(flags)))
    if best > threshold:
        est.flags.append("sufficient condition holds (estimate)")
    return est


def _normal_generators(M, x):
    if isinstance(M, FullSpace):
        return np.zeros((0, M.dim))
    if isinstance(M, Polyhedron):
        return M.A[M.active_rows(x)]
    return None


# ---------------------------------------------------------------- restriction coderivative

@dataclass
class CoderivativeReport:
    agreements: int = 0
    disagreements: int = 0
    inconclusive: int = 0
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.disagreements == 0


def restriction_coderivative_check(f, M: SetSpec, xbar, ystar_grid, xstar_grid,
                                   **normal_kw) -> CoderivativeReport:
    """Compare both sides of the Fréchet coderivative formula for ``f`` restricted to ``M``.

    Left: ``(x*, -y*) ∈ N̂(Gr F_{f,M}, (xbar, f(xbar)))``.
    Right: ``x* - ∇f(xbar)^T y* ∈ N̂(M, xbar)``.
    """
    from .setvalued import RestrictedFunction

    xbar = as_vector(xbar, M.dim)
    F = RestrictedFunction(f, M)
    graph = F.graph()
    ybar = f(xbar)
    J = f.jacobian(xbar)
    gpt = np.concatenate([xbar, ybar])
    rep = CoderivativeReport()
    for ys in ystar_grid:
        ys = np.atleast_1d(np.asarray(ys, float))
        for xs in xstar_grid:
            xs = np.atleast_1d(np.asarray(xs, float))
            lhs = frechet_normal_membership(graph, gpt, np.concatenate([xs, -ys]), **normal_kw)
            rhs = frechet_normal_membership(M, xbar, xs - J.T @ ys, **normal_kw)
            if lhs.conclusive and rhs.conclusive:
                if lhs.verdict == rhs.verdict:
                    rep.agreements += 1
                else:
                    rep.disagreements += 1
            else:
                rep.inconclusive += 1
            rep.records.append((ys.tolist(), xs.tolist(), str(lhs.verdict), str(rhs.verdict)))
    return rep

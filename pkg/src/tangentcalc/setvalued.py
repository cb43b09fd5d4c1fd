"""Set-valued maps ``F: R^n => R^m`` and their graphical derivatives.

A :class:`MapSpec` exposes two oracles:

* ``fiber(x, closure)`` -- the value set ``F(x)`` as a :class:`SetSpec`
  (``None`` when empty); ``closure=False`` honours punctures;
* ``graph()`` -- a :class:`SetSpec` for the closure of ``Gr F``.

Bouligand/Ursescu derivatives are tangent sets of the graph. The Dini lower
derivative needs true fibers: its quotient is maximised over perturbed
arguments ``u'`` near ``u``, including arguments where ``F`` is empty.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import sympy as sp
from scipy import optimize

from .expr import SmoothMap
from .geometry import (EMPTY, DistanceResult, FullSpace, FunctionGraph, Polyhedron, Product,
                       PermutedSet, SetSpec, Singleton, SmoothLevelSet, Union, as_vector,
                       ball_samples, sphere_grid)
from .regularity import RegularityEstimate, radius_grid, summarize
from .tangent import (DEFAULT_SCHEDULE, DEFAULT_SCHEDULE_2, IN, INCONCLUSIVE, OUT,
                      LimitSchedule, TangentDecision, Verdict, dedupe, tangent_decisions)


class GraphPointError(ValueError):
    """Raised when a reference pair is not in the graph."""


@dataclass(frozen=True)
class GraphPoint:
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def of(cls, at, n: int, m: int) -> "GraphPoint":
        if isinstance(at, GraphPoint):
            return cls(as_vector(at.x, n), as_vector(at.y, m))
        x, y = at
        return cls(as_vector(x, n), as_vector(y, m))

    @property
    def joint(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


@dataclass(frozen=True)
class BallSchedule:
    """Radii ``rho0 * ratio**k`` (``k`` the t-grid index) and samples per ball."""
    rho0: float = 1.0
    ratio: float = 0.5
    samples: int = 8
    seed: int = 0


DEFAULT_BALLS = BallSchedule()


# ---------------------------------------------------------------- symbolic helpers

def _syms(prefix: str, k: int):
    return [sp.Symbol(f"{prefix}{i}", real=True) for i in range(k)]


def _renamed(f: SmoothMap, new_syms) -> list:
    sub = dict(zip(f.symbols, new_syms))
    return [e.subs(sub, simultaneous=True) for e in f.exprs]


def constraints_of(S: SetSpec, exprs: Sequence) -> list | None:
    """Constraints ``(expr, rel)`` equivalent to ``exprs ∈ cl S``; ``None`` if ``S``
    has no closed-form description."""
    exprs = list(exprs)
    if isinstance(S, FullSpace):
        return []
    if isinstance(S, Singleton):
        return [(e - float(p), "=") for e, p in zip(exprs, S.point)]
    if isinstance(S, Polyhedron):
        return [(sum(float(a) * e for a, e in zip(row, exprs)) - float(b), "<=")
                for row, b in zip(S.A, S.b)]
    if isinstance(S, Product):
        left = constraints_of(S.left, exprs[: S.left.dim])
        right = constraints_of(S.right, exprs[S.left.dim:])
        return None if left is None or right is None else left + right
    if isinstance(S, SmoothLevelSet):
        sub = dict(zip(S.g.symbols, exprs))
        return [(e.subs(sub, simultaneous=True), r) for e, r in zip(S.g.exprs, S.relations)]
    if isinstance(S, FunctionGraph):
        s, y = exprs
        phi = S.phi.exprs[0].subs(S.phi.symbols[0], s)
        if S.relation == "=":
            return [(y - phi, "=")]
        return [(phi - y, "<=")] if S.relation == ">=" else [(y - phi, "<=")]
    return None


def level_set(cons, syms) -> SetSpec:
    """Build the tightest available SetSpec for a constraint list."""
    names = [str(s) for s in syms]
    if not cons:
        return FullSpace(len(syms))
    exprs = [sp.expand(e) for e, _ in cons]
    if all(e.is_polynomial(*syms) and sp.Poly(e, *syms).total_degree() <= 1 for e in exprs):
        A, rhs = sp.linear_eq_to_matrix(exprs, syms)
        A = np.array(A.tolist(), dtype=float)
        b = np.array(rhs.tolist(), dtype=float).reshape(-1)
        rows, bs = [], []
        for (_, rel), a, bi in zip(cons, A, b):
            if rel in ("<=", "="):
                rows.append(a); bs.append(bi)
            if rel in (">=", "="):
                rows.append(-a); bs.append(-bi)
        return Polyhedron(np.array(rows), np.array(bs))
    if len(syms) == 2 and len(cons) == 1:
        curve = _explicit_curve(exprs[0], cons[0][1], syms)
        if curve is not None:
            return curve
    return SmoothLevelSet([str(e) for e in exprs], names, [r for _, r in cons])


def _explicit_curve(e, rel, syms):
    """``c v + r(w) rel 0`` with constant ``c`` solved as a graph over ``w``."""
    for j in (1, 0):
        v, w = syms[j], syms[1 - j]
        c = sp.diff(e, v)
        if not c.is_number or c == 0:
            continue
        rest = sp.expand(e - c * v)
        if rest.has(v):
            continue
        phi = sp.expand(-rest / c)
        relation = "=" if rel == "=" else (
            "<=" if (rel == "<=") == (float(c) > 0) else ">=")
        g = FunctionGraph(str(phi.subs(w, sp.Symbol("s", real=True))), relation)
        return g if j == 1 else PermutedSet(g, [1, 0])
    return None


# ---------------------------------------------------------------- Minkowski fibers

def _intervals(S: SetSpec):
    if S.dim != 1:
        return None
    if isinstance(S, Singleton):
        p = float(S.point[0])
        return [(p, p)]
    if isinstance(S, FullSpace):
        return [(-math.inf, math.inf)]
    if isinstance(S, Polyhedron):
        lo, hi = -math.inf, math.inf
        for a, b in zip(S.A[:, 0], S.b):
            if a > 0:
                hi = min(hi, b / a)
            elif a < 0:
                lo = max(lo, b / a)
            elif b < 0:
                return []
        return [(lo, hi)] if lo <= hi else []
    if isinstance(S, Union):
        out = []
        for p in S.pieces:
            iv = _intervals(p)
            if iv is None:
                return None
            out.extend(iv)
        return out
    return None


class MinkowskiSet(SetSpec):
    """``A + B`` for two fibers; exact for a singleton summand or 1-D interval unions,
    alternating projections otherwise (gap reported)."""
    kind = "minkowski"

    def __init__(self, A: SetSpec, B: SetSpec):
        if A.dim != B.dim:
            raise ValueError("summands differ in dimension")
        self.A, self.B, self.dim = A, B, A.dim
        self.exact = A.exact and B.exact

    def __repr__(self):
        return f"MinkowskiSet({self.A!r}, {self.B!r})"

    def contains(self, x, atol=None):
        return self.distance(x).value <= (self.atol if atol is None else atol)

    def distance(self, x):
        z = self._check(x)
        A, B = self.A, self.B
        if isinstance(A, Singleton):
            r = B.distance(z - A.point)
            return r if r.is_empty else DistanceResult(r.value, r.witness + A.point, r.gap)
        if isinstance(B, Singleton):
            r = A.distance(z - B.point)
            return r if r.is_empty else DistanceResult(r.value, r.witness + B.point, r.gap)
        ia, ib = _intervals(A), _intervals(B)
        if ia is not None and ib is not None:
            sums = [(a0 + b0, a1 + b1) for a0, a1 in ia for b0, b1 in ib]
            if not sums:
                return EMPTY
            p = min((min(max(z[0], lo), hi) for lo, hi in sums), key=lambda w: abs(w - z[0]))
            return DistanceResult(abs(p - z[0]), np.array([p]))
        ra = A.distance(z)
        if ra.is_empty:
            return EMPTY
        a, prev = ra.witness, math.inf
        for _ in range(50):
            rb = B.distance(z - a)
            if rb.is_empty:
                return EMPTY
            a = A.distance(z - rb.witness).witness
            val = float(np.linalg.norm(z - a - rb.witness))
            if prev - val <= 1e-13:
                break
            prev = val
        return DistanceResult(val, a + rb.witness, max(prev - val, 0.0) + 1e-9)

    def to_dict(self):
        return {"kind": "minkowski", "A": self.A.to_dict(), "B": self.B.to_dict()}


# ---------------------------------------------------------------- maps

class MapSpec:
    """Base class of set-valued maps ``R^n => R^m``."""

    n: int
    m: int
    kind = "map"

    def fiber(self, x, closure: bool = False) -> SetSpec | None:
        raise NotImplementedError

    def graph(self) -> SetSpec:
        """Closure of the graph (built once and cached)."""
        g = self.__dict__.get("_graph_cache")
        if g is None:
            g = self._build_graph()
            self.__dict__["_graph_cache"] = g
        return g

    def _build_graph(self) -> SetSpec:
        raise NotImplementedError

    def fiber_distance(self, x, y, closure: bool = False) -> float:
        fib = self.fiber(as_vector(x, self.n), closure)
        if fib is None:
            return math.inf
        return fib.distance(as_vector(y, self.m)).value

    def contains(self, x, y, atol: float = 1e-9) -> bool:
        return self.fiber_distance(x, y) <= atol

    def empty_arguments_near(self, center, radius: float, limit: int = 4) -> list[np.ndarray]:
        """Arguments within ``radius`` of ``center`` where the map is empty (punctures)."""
        return []

    def single_valued(self):
        """``(SmoothMap, domain SetSpec)`` if the map is ``f`` restricted to a set, else ``None``."""
        return None

    @property
    def dims(self) -> tuple[int, int]:
        return self.n, self.m

    def to_dict(self) -> dict:
        raise NotImplementedError


class GraphSet(MapSpec):
    """Map given by its graph ``S ⊂ R^{n+m}`` (first ``n`` coordinates are the argument)."""
    kind = "graph"

    def __init__(self, set_: SetSpec, n: int):
        if not 0 < n < set_.dim:
            raise ValueError("argument dimension must split the graph dimension")
        self.set, self.n, self.m = set_, int(n), set_.dim - int(n)

    def __repr__(self):
        return f"GraphSet({self.set!r}, n={self.n})"

    def fiber(self, x, closure=False):
        return self.set.section(list(range(self.n)), as_vector(x, self.n), closure)

    def _build_graph(self):
        return self.set

    def empty_arguments_near(self, center, radius, limit=4):
        if self.n != 1:
            return []
        return [np.array([p]) for p in
                self.set.punctures_near(0, float(as_vector(center, 1)[0]), radius, limit)]

    def single_valued(self):
        S = self.set
        if isinstance(S, FunctionGraph) and S.relation == "=":
            return SmoothMap(S.text, [S.var]), FullSpace(1)
        return None

    def to_dict(self):
        return {"kind": "graph", "n": self.n, "set": self.set.to_dict()}


class RestrictedFunction(MapSpec):
    """``F_{f,M}(x) = {f(x)}`` for ``x ∈ M``, empty otherwise."""
    kind = "restricted"

    def __init__(self, f: SmoothMap, M: SetSpec | None = None):
        self.f = f
        self.M = M if M is not None else FullSpace(f.n)
        if self.M.dim != f.n:
            raise ValueError("domain set and map disagree in dimension")
        self.n, self.m = f.n, f.m

    def __repr__(self):
        return f"RestrictedFunction({self.f!r}, {self.M!r})"

    def fiber(self, x, closure=False):
        x = as_vector(x, self.n)
        ok = (self.M.distance(x).value <= self.M.atol) if closure else self.M.contains(x)
        return Singleton(self.f(x)) if ok else None

    def _build_graph(self):
        xs, ys = _syms("x", self.n), _syms("y", self.m)
        if self.n == 1 and self.m == 1 and isinstance(self.M, FullSpace):
            return FunctionGraph(str(_renamed(self.f, xs)[0]), "=", var="x0")
        cons = constraints_of(self.M, xs)
        if cons is None:
            return FiberGraph(self)
        cons += [(y - e, "=") for y, e in zip(ys, _renamed(self.f, xs))]
        return level_set(cons, xs + ys)

    def single_valued(self):
        return self.f, self.M

    def to_dict(self):
        return {"kind": "restricted", "f": self.f.to_dict(), "M": self.M.to_dict()}


def Indicator(M: SetSpec, m: int = 1) -> RestrictedFunction:
    """``Δ_M``: ``{0}`` on ``M``, empty elsewhere."""
    names = [f"x{i}" for i in range(M.dim)]
    return RestrictedFunction(SmoothMap(["0"] * m, names), M)


def identity_map_spec(n: int = 1) -> RestrictedFunction:
    names = [f"x{i}" for i in range(n)]
    return RestrictedFunction(SmoothMap(names, names))


class SumMap(MapSpec):
    """``x => F1(x) + F2(f(x))``; ``f`` defaults to the identity."""
    kind = "sum"

    def __init__(self, F1: MapSpec, F2: MapSpec, f: SmoothMap | None = None):
        if f is None:
            names = [f"x{i}" for i in range(F1.n)]
            f = SmoothMap(names, names)
        if f.n != F1.n or f.m != F2.n or F1.m != F2.m:
            raise ValueError("dimension mismatch in sum map")
        self.F1, self.F2, self.f = F1, F2, f
        self.n, self.m = F1.n, F1.m

    def __repr__(self):
        return f"SumMap({self.F1!r}, {self.F2!r}, {self.f!r})"

    def fiber(self, x, closure=False):
        x = as_vector(x, self.n)
        A = self.F1.fiber(x, closure)
        if A is None:
            return None
        B = self.F2.fiber(self.f(x), closure)
        if B is None:
            return None
        return MinkowskiSet(A, B)

    def single_valued(self):
        s1, s2 = self.F1.single_valued(), self.F2.single_valued()
        if s1 is None or s2 is None or not isinstance(s2[1], FullSpace):
            return None
        xs = _syms("x", self.n)
        inner = _renamed(self.f, xs)
        outer = [e.subs(dict(zip(s2[0].symbols, inner)), simultaneous=True) for e in s2[0].exprs]
        total = [a + b for a, b in zip(_renamed(s1[0], xs), outer)]
        return SmoothMap([str(e) for e in total], [str(s) for s in xs]), s1[1]

    def _build_graph(self):
        sv = self.single_valued()
        if sv is not None:
            return RestrictedFunction(*sv).graph()
        xs, ys = _syms("x", self.n), _syms("y", self.m)
        inner = _renamed(self.f, xs)
        s1 = self.F1.single_valued()
        if s1 is not None:
            # y - f1(x) ∈ F2(f(x)), x ∈ M1
            dom = constraints_of(s1[1], xs)
            rest = constraints_of(self.F2.graph(),
                                  inner + [y - e for y, e in zip(ys, _renamed(s1[0], xs))])
            if dom is not None and rest is not None:
                return level_set(dom + rest, xs + ys)
        s2 = self.F2.single_valued()
        if s2 is not None and isinstance(s2[1], FullSpace):
            outer = [e.subs(dict(zip(s2[0].symbols, inner)), simultaneous=True)
                     for e in s2[0].exprs]
            cons = constraints_of(self.F1.graph(), xs + [y - e for y, e in zip(ys, outer)])
            if cons is not None:
                return level_set(cons, xs + ys)
        return FiberGraph(self)

    def empty_arguments_near(self, center, radius, limit=4):
        out = list(self.F1.empty_arguments_near(center, radius, limit))
        if self.n == 1 and self.f.is_affine:
            J, c = self.f.affine_parts()
            a = float(J[0, 0])
            if a != 0.0:
                fc = self.f(as_vector(center, 1))
                for p in self.F2.empty_arguments_near(fc, abs(a) * radius, limit):
                    out.append((p - c) / a)
        return out[: 2 * limit]

    def to_dict(self):
        return {"kind": "sum", "F1": self.F1.to_dict(), "F2": self.F2.to_dict(),
                "f": self.f.to_dict()}


class Perturbation(MapSpec):
    """``G(x, z) = {y : z ∈ F(x, y) + K(x, y)}`` for maps ``F, K: R^{nx+ny} => R^{nz}``."""
    kind = "perturbation"

    def __init__(self, F: MapSpec, K: MapSpec, nx: int):
        if F.n != K.n or F.m != K.m or not 0 < nx < F.n:
            raise ValueError("F and K must share dimensions and nx must split the argument")
        self.F, self.K = F, K
        self.nx, self.ny, self.nz = nx, F.n - nx, F.m
        self.H = SumMap(F, K)
        self.n, self.m = self.nx + self.nz, self.ny
        nx, ny, nz = self.nx, self.ny, self.nz
        # G's graph lives in (x, z, y); H's graph in (x, y, z)
        self.perm = (list(range(nx)) + list(range(nx + nz, nx + nz + ny))
                     + list(range(nx, nx + nz)))

    def __repr__(self):
        return f"Perturbation({self.F!r}, {self.K!r}, nx={self.nx})"

    def _build_graph(self):
        return PermutedSet(self.H.graph(), self.perm)

    def fiber(self, x, closure=False):
        xz = as_vector(x, self.n)
        xs, zs = xz[: self.nx], xz[self.nx:]
        Hg = self.H.graph()
        fixed = list(range(self.nx)) + list(range(self.nx + self.ny, self.nx + self.ny + self.nz))
        return Hg.section(fixed, np.concatenate([xs, zs]), closure=True)

    def to_dict(self):
        return {"kind": "perturbation", "F": self.F.to_dict(), "K": self.K.to_dict(),
                "nx": self.nx}


class ConstraintMap(MapSpec):
    """``F(x) = {y ∈ D : f(x, y) ∈ E}``; ``f`` takes the ``n + m`` variables ``(x, y)``."""
    kind = "constraint"

    def __init__(self, f: SmoothMap, D: SetSpec, E: SetSpec, n: int):
        self.f, self.D, self.E = f, D, E
        self.n, self.m = int(n), D.dim
        if f.n != self.n + self.m or f.m != E.dim:
            raise ValueError("dimension mismatch in constraint map")

    def __repr__(self):
        return f"ConstraintMap({self.f!r}, {self.D!r}, {self.E!r}, n={self.n})"

    def _build_graph(self):
        xs, ys = _syms("x", self.n), _syms("y", self.m)
        cons = constraints_of(self.D, ys)
        more = constraints_of(self.E, _renamed(self.f, xs + ys))
        if cons is None or more is None:
            raise NotImplementedError("constraint map needs closed-form D and E")
        return level_set(cons + more, xs + ys)

    def fiber(self, x, closure=False):
        return self.graph().section(list(range(self.n)), as_vector(x, self.n), closure)

    def to_dict(self):
        return {"kind": "constraint", "f": self.f.to_dict(), "D": self.D.to_dict(),
                "E": self.E.to_dict(), "n": self.n}


class FiberGraph(SetSpec):
    """Closure of a graph known only through its fibers.

    ``d((x, y), Gr F)`` is approximated (up to norm equivalence) by
    ``inf_{x'} |x - x'| + d(y, F(x'))``: the search starts at ``x' = x`` and
    scans the ball of radius ``d(y, F(x))`` around ``x``.
    """
    kind = "fibergraph"
    exact = False

    def __init__(self, F: MapSpec):
        self.F, self.dim = F, F.n + F.m
        self._pattern = ball_samples(F.n, 48, seed=1)

    def __repr__(self):
        return f"FiberGraph({self.F!r})"

    def _split(self, p):
        p = self._check(p)
        return p[: self.F.n], p[self.F.n:]

    def contains(self, p, atol=None):
        x, y = self._split(p)
        return self.F.fiber_distance(x, y, closure=True) <= (self.atol if atol is None else atol)

    def _obj(self, x, y):
        def f(xp):
            xp = np.atleast_1d(xp)
            return float(np.linalg.norm(x - xp)) + self.F.fiber_distance(xp, y, closure=True)
        return f

    def distance(self, p):
        x, y = self._split(p)
        r0 = self.F.fiber_distance(x, y, closure=True)
        if r0 == 0.0:
            return DistanceResult(0.0, self._check(p).copy())
        f = self._obj(x, y)
        best_x, best = x, r0
        if math.isfinite(r0):
            cands = x + r0 * self._pattern
        else:
            cands = x + self._pattern
        if self.F.n == 1:
            span = r0 if math.isfinite(r0) else 1.0
            cands = x + span * np.linspace(-1, 1, 65)[:, None]
        vals = [f(c) for c in cands]
        i = int(np.argmin(vals))
        if vals[i] < best:
            best_x, best = cands[i], vals[i]
        if math.isfinite(best):
            if self.F.n == 1:
                h = (r0 if math.isfinite(r0) else 1.0) / 32
                res = optimize.minimize_scalar(lambda s: f([s]), method="bounded",
                                               bounds=(best_x[0] - h, best_x[0] + h),
                                               options={"xatol": 1e-14})
                if res.fun < best:
                    best_x, best = np.atleast_1d(res.x), float(res.fun)
            else:
                res = optimize.minimize(f, best_x, method="Nelder-Mead",
                                        options={"xatol": 1e-12, "fatol": 1e-15})
                if res.fun < best:
                    best_x, best = np.atleast_1d(res.x), float(res.fun)
        if not math.isfinite(best):
            return EMPTY
        fib = self.F.fiber(best_x, closure=True)
        wy = fib.distance(y).witness
        return DistanceResult(best, np.concatenate([best_x, wy]), 1e-9 * (1 + best))

    def section(self, fixed_idx, values, closure=True):
        if list(fixed_idx) == list(range(self.F.n)):
            return self.F.fiber(values, closure)
        raise NotImplementedError("FiberGraph only has argument sections")

    def to_dict(self):
        return {"kind": "fibergraph", "map": self.F.to_dict()}


# ---------------------------------------------------------------- derivatives

def _check_point(F: MapSpec, at) -> GraphPoint:
    p = GraphPoint.of(at, F.n, F.m)
    if not F.contains(p.x, p.y, atol=1e-9):
        raise GraphPointError(f"({p.x.tolist()}, {p.y.tolist()}) is not in the graph")
    return p


def derivative_membership(F: MapSpec, at, u, v, flavor: str = "B",
                          sched: LimitSchedule | None = None) -> TangentDecision:
    """Decide ``v ∈ D_B F(x̄, ȳ)(u)`` (``flavor="B"``) or ``D_U`` (``"U"``) through the
    tangent cone of the graph."""
    p = _check_point(F, at)
    w = np.concatenate([as_vector(u, F.n), as_vector(v, F.m)])
    return tangent_decisions(F.graph(), p.joint, w, sched)[flavor]


def derivative_decisions(F: MapSpec, at, u, v, sched=None) -> dict[str, TangentDecision]:
    p = _check_point(F, at)
    w = np.concatenate([as_vector(u, F.n), as_vector(v, F.m)])
    return tangent_decisions(F.graph(), p.joint, w, sched)


def derivative2_membership(F: MapSpec, at, direction, u, v, flavor: str = "B",
                           sched: LimitSchedule | None = None) -> TangentDecision:
    """Second-order derivative test: ``(u, v) ∈ T²(Gr F, (x̄, ȳ), (x1, y1))``."""
    p = _check_point(F, at)
    x1, y1 = direction
    d = np.concatenate([as_vector(x1, F.n), as_vector(y1, F.m)])
    w = np.concatenate([as_vector(u, F.n), as_vector(v, F.m)])
    return tangent_decisions(F.graph(), p.joint, w, sched, x1=d)[flavor]


def _dini(F, p, u, v, sched, balls, x1=None, y1=None) -> TangentDecision:
    u = as_vector(u, F.n)
    v = as_vector(v, F.m)
    pattern = ball_samples(F.n, balls.samples, balls.seed)
    ts = sched.grid()
    trace = []
    for i, t in enumerate(ts):
        rho = balls.rho0 * balls.ratio ** (i / sched.phases)
        scale = t if x1 is None else t * t
        if x1 is None:
            xc, y = p.x + t * u, p.y + t * v
        else:
            xc = p.x + t * x1 + scale * u
            y = p.y + t * y1 + scale * v
        args = [xc] + [xc + scale * rho * s for s in pattern]
        args += F.empty_arguments_near(xc, scale * rho)
        q = max(F.fiber_distance(a, y) for a in args) / scale
        trace.append((float(t), float(q)))
    tail = [q for _, q in trace[-sched.tail:]]
    hi, lo = max(tail), min(tail)
    if hi <= sched.eps_in:
        verdict = IN
    elif hi >= sched.eps_out:
        verdict = OUT
    else:
        verdict = INCONCLUSIVE
    note = "empty values near the argument" if math.isinf(hi) else ""
    return TangentDecision(verdict, trace, lo, hi, False, note)


def dini_membership(F: MapSpec, at, u, v, sched: LimitSchedule | None = None,
                    ball_schedule: BallSchedule | None = None) -> TangentDecision:
    """Decide ``v ∈ D_D F(x̄, ȳ)(u)`` (Dini lower derivative).

    The quotient ``d(ȳ + t v, F(x̄ + t u')) / t`` is maximised over ``u'``
    in a shrinking ball around ``u`` (plus any nearby arguments with empty
    value) at every grid point; IN iff the tail maximum is at most
    ``eps_in``, OUT iff it reaches ``eps_out``.
    """
    p = _check_point(F, at)
    return _dini(F, p, u, v, sched or DEFAULT_SCHEDULE, ball_schedule or DEFAULT_BALLS)


def dini2_membership(F: MapSpec, at, direction, u, v, sched: LimitSchedule | None = None,
                     ball_schedule: BallSchedule | None = None) -> TangentDecision:
    """Second-order Dini test on ``ȳ + t y1 + t² v`` against ``F(x̄ + t x1 + t² u')``."""
    p = _check_point(F, at)
    x1, y1 = direction
    return _dini(F, p, u, v, sched or DEFAULT_SCHEDULE_2, ball_schedule or DEFAULT_BALLS,
                 as_vector(x1, F.n), as_vector(y1, F.m))


def derivative_candidates(F: MapSpec, at, u, probes: Iterable, direction=None,
                          t: float | None = None) -> list[np.ndarray]:
    """Likely elements of ``D F(x̄, ȳ)(u)`` (or of the second-order derivative in
    ``direction = (x1, y1)``) from difference quotients of projected fibers."""
    p = GraphPoint.of(at, F.n, F.m)
    u = as_vector(u, F.n)
    out = []
    if direction is None:
        t = 1e-8 if t is None else t
        fib = F.fiber(p.x + t * u, closure=True)
        if fib is None:
            return []
        for v in probes:
            r = fib.distance(p.y + t * as_vector(v, F.m))
            if not r.is_empty:
                out.append((r.witness - p.y) / t)
    else:
        t = 1e-6 if t is None else t
        x1, y1 = (as_vector(direction[0], F.n), as_vector(direction[1], F.m))
        fib = F.fiber(p.x + t * x1 + t * t * u, closure=True)
        if fib is None:
            return []
        for v in probes:
            r = fib.distance(p.y + t * y1 + t * t * as_vector(v, F.m))
            if not r.is_empty:
                out.append((r.witness - p.y - t * y1) / (t * t))
    return dedupe(out)


# ---------------------------------------------------------------- classification

YES, NO = "YES", "NO"


@dataclass
class DiffClass:
    proto: str
    semi: str
    witness: tuple | None = None
    records: list = field(default_factory=list)

    def to_dict(self):
        w = None if self.witness is None else [np.asarray(a).tolist() for a in self.witness]
        return {"proto": self.proto, "semi": self.semi, "witness": w}


def default_direction_grid(n: int, m: int, count: int = 16) -> np.ndarray:
    return np.vstack([np.zeros((1, n + m)), sphere_grid(n + m, count)])


def classify_differentiability(F: MapSpec, at, direction_grid=None,
                               sched: LimitSchedule | None = None,
                               ball_schedule: BallSchedule | None = None,
                               semi: bool = True) -> DiffClass:
    """Proto-differentiability (``D_B = D_U``) and semi-differentiability
    (``D_D = D_B``) over a grid of ``(u, v)`` pairs.

    NO is reported with the first separating pair as witness; YES needs every
    sampled pair to be conclusive and in agreement. ``semi=False`` skips the
    Dini tests (``semi`` is then reported INCONCLUSIVE unless proto is NO).
    """
    p = _check_point(F, at)
    grid = default_direction_grid(F.n, F.m) if direction_grid is None else direction_grid
    sched = sched or DEFAULT_SCHEDULE
    do_semi = semi
    proto, semi = YES, (YES if do_semi else INCONCLUSIVE.value)
    proto_w = semi_w = None
    records = []
    graph = F.graph()
    for w in grid:
        w = as_vector(w, F.n + F.m)
        u, v = w[: F.n], w[F.n:]
        td = tangent_decisions(graph, p.joint, w, sched)
        b, uu = td["B"].verdict, td["U"].verdict
        d = (_dini(F, p, u, v, sched, ball_schedule or DEFAULT_BALLS).verdict
             if do_semi else INCONCLUSIVE)
        records.append((u.tolist(), v.tolist(), str(b), str(uu), str(d)))
        if b.conclusive and uu.conclusive:
            if b is not uu and proto != NO:
                proto, proto_w = NO, (u, v)
        elif proto == YES:
            proto = INCONCLUSIVE.value
        if not do_semi:
            pass
        elif b.conclusive and d.conclusive:
            if b is not d and semi != NO:
                semi, semi_w = NO, (u, v)
        elif semi == YES:
            semi = INCONCLUSIVE.value
    if proto == NO:
        semi = NO
        semi_w = semi_w or proto_w
    witness = proto_w if proto == NO else semi_w
    return DiffClass(proto, semi, witness, records)


# ---------------------------------------------------------------- Aubin property

def _fiber_points(fib: SetSpec, center, r, pattern) -> list[np.ndarray]:
    pts = []
    for s in pattern:
        res = fib.distance(center + r * s)
        if not res.is_empty and np.linalg.norm(res.witness - center) <= r:
            pts.append(res.witness)
    return pts


def aubin_estimate(F: MapSpec, at, radii=None, samples: int = 16, seed: int = 0
                   ) -> RegularityEstimate:
    """Estimate the Aubin (Lipschitz-like) constant of ``F`` around ``(x̄, ȳ)``.

    ``L(r)`` is the largest ratio ``d(y, F(x'')) / |x' - x''|`` over sampled
    ``x', x''`` in the ball of radius ``r`` and ``y ∈ F(x')`` within ``r`` of
    ``ȳ``. Empty values at sampled ``x''`` give an infinite ratio.
    """
    p = _check_point(F, at)
    radii = radius_grid() if radii is None else np.asarray(radii, float)
    xpat = np.vstack([np.zeros((1, F.n)), ball_samples(F.n, samples, seed)])
    ypat = np.vstack([np.zeros((1, F.m)), ball_samples(F.m, 8, seed + 1)])
    trace, used = [], 0
    for r in radii:
        xs = [p.x + r * s for s in xpat]
        targets = xs + list(F.empty_arguments_near(p.x, r))
        best = 0.0
        for xp in xs:
            fib = F.fiber(xp)
            if fib is None:
                continue
            ys = _fiber_points(fib, p.y, r, ypat)
            for xpp in targets:
                dx = float(np.linalg.norm(xp - xpp))
                if dx <= 1e-14 * (1 + r):
                    continue
                for y in ys:
                    used += 1
                    best = max(best, F.fiber_distance(xpp, y) / dx)
                if best == math.inf:
                    break
        trace.append((float(r), best))
    return summarize(trace, used)


def write_fiber_csv(F: MapSpec, xs: Iterable, fh, ys: Iterable | None = None) -> None:
    """Dump fiber distances ``d(y, F(x))`` for debugging."""
    w = csv.writer(fh)
    w.writerow(["x", "y", "distance", "empty"])
    ys = list(ys) if ys is not None else [np.zeros(F.m)]
    for x in xs:
        x = as_vector(x, F.n)
        for y in ys:
            d = F.fiber_distance(x, y)
            w.writerow([";".join(map(repr, x.tolist())), ";".join(map(repr, as_vector(y, F.m).tolist())),
                        repr(d), math.isinf(d)])

"""Closed sets in R^n with membership and distance oracles.

Every set kind implements ``contains`` and ``distance``; the tangent
estimators use ``local_distance(base, h)``, which evaluates
``d(base + h, D)`` in coordinates centred at ``base`` so that quotients
``d / t`` stay accurate when ``|h|`` is many orders of magnitude below
``|base|``.

Products carry the sum norm (Euclidean inside each factor). Punctured
curves answer ``distance`` for their closure and ``contains`` for the
punctured set itself.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
import sympy as sp
from scipy import optimize
from scipy.stats import qmc

from .expr import SmoothMap, parse, scalar_polynomial

ATOL_EXACT = 1e-9
ATOL_SMOOTH = 1e-6
_SNAP = 1e-9


class DimensionError(ValueError):
    pass


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate a point/direction: 1-D float array, finite, optional size check."""
    v = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite coordinates in {v}")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {v.size}")
    return v


@dataclass(frozen=True)
class DistanceResult:
    """Distance to a set, with a (near-)nearest point and a suboptimality bound."""
    value: float
    witness: np.ndarray | None
    gap: float = 0.0

    @property
    def is_empty(self) -> bool:
        return math.isinf(self.value)


EMPTY = DistanceResult(math.inf, None, 0.0)


# ---------------------------------------------------------------- sampling

def ball_samples(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points in the closed unit Euclidean ball."""
    if dim == 0:
        return np.zeros((count, 0))
    sampler = qmc.Halton(d=dim + 1, scramble=seed != 0, seed=seed or None)
    raw = sampler.random(count + 1)[1:]
    normal = np.sqrt(2.0) * _erfinv(2.0 * raw[:, :dim] - 1.0)
    norms = np.linalg.norm(normal, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radius = raw[:, dim:] ** (1.0 / dim)
    return normal / norms * radius


def sphere_grid(dim: int, count: int) -> np.ndarray:
    """Unit directions: the signed axes, then a Fibonacci/Halton spread."""
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    if dim == 1:
        return axes
    if dim == 2:
        ang = 2 * np.pi * np.arange(max(count, 4)) / max(count, 4)
        pts = np.column_stack([np.cos(ang), np.sin(ang)])
        pts[np.abs(pts) < 1e-15] = 0.0
        return _unique_rows(np.vstack([axes, pts]))
    if dim == 3:
        k = np.arange(count) + 0.5
        phi = np.arccos(1 - 2 * k / count)
        theta = np.pi * (1 + 5 ** 0.5) * k
        pts = np.column_stack([np.cos(theta) * np.sin(phi),
                               np.sin(theta) * np.sin(phi), np.cos(phi)])
    else:
        pts = ball_samples(dim, count)
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return _unique_rows(np.vstack([axes, pts]))


def _unique_rows(a: np.ndarray) -> np.ndarray:
    out = []
    for row in a:
        if not any(np.allclose(row, r, atol=1e-12) for r in out):
            out.append(row)
    return np.array(out)


def _erfinv(y):
    from scipy.special import erfinv
    return erfinv(np.clip(y, -1 + 1e-12, 1 - 1e-12))


# ---------------------------------------------------------------- base class

class SetSpec:
    """Base class for closed sets (or punctured sets with a closed closure)."""

    dim: int
    exact = True
    kind = "set"

    @property
    def atol(self) -> float:
        return ATOL_EXACT if self.exact else ATOL_SMOOTH

    def _check(self, x) -> np.ndarray:
        return as_vector(x, self.dim)

    def contains(self, x, atol: float | None = None) -> bool:
        raise NotImplementedError

    def distance(self, x) -> DistanceResult:
        raise NotImplementedError

    def local_distance(self, base, h) -> DistanceResult:
        base = self._check(base)
        return self.distance(base + self._check(h))

    def closure(self) -> "SetSpec":
        return self

    def is_empty(self) -> bool:
        return False

    def section(self, fixed_idx: Sequence[int], values, closure: bool = True):
        """Set of the free coordinates when ``x[fixed_idx] = values``.

        Returns ``None`` when the section is empty. Free coordinates keep their
        original order.
        """
        raise NotImplementedError(f"{type(self).__name__} has no section oracle")

    def punctures_near(self, idx: int, center: float, radius: float,
                       limit: int = 4) -> list[float]:
        """Coordinate values within ``radius`` of ``center`` (along axis ``idx``)
        where the set has a puncture; only punctured curves report any."""
        return []

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def blocks(self) -> tuple[int, ...]:
        """Factor dimensions for the sum norm (a single block unless a product)."""
        return (self.dim,)


def membership(set_: SetSpec, x, atol: float | None = None) -> bool:
    return set_.contains(x, atol)


def distance(set_: SetSpec, x) -> DistanceResult:
    return set_.distance(x)


class FullSpace(SetSpec):
    kind = "full"

    def __init__(self, dim: int):
        if dim < 1:
            raise DimensionError("dimension must be positive")
        self.dim = int(dim)

    def __repr__(self):
        return f"FullSpace({self.dim})"

    def contains(self, x, atol=None):
        self._check(x)
        return True

    def distance(self, x):
        x = self._check(x)
        return DistanceResult(0.0, x.copy())

    def local_distance(self, base, h):
        return DistanceResult(0.0, self._check(base) + self._check(h))

    def section(self, fixed_idx, values, closure=True):
        return FullSpace(self.dim - len(fixed_idx))

    def to_dict(self):
        return {"kind": "full", "dim": self.dim}


class Singleton(SetSpec):
    kind = "singleton"

    def __init__(self, point):
        self.point = as_vector(point)
        self.dim = self.point.size

    def __repr__(self):
        return f"Singleton({self.point.tolist()})"

    def contains(self, x, atol=None):
        x = self._check(x)
        return bool(np.linalg.norm(x - self.point) <= (atol if atol is not None else self.atol))

    def distance(self, x):
        x = self._check(x)
        return DistanceResult(float(np.linalg.norm(x - self.point)), self.point.copy())

    def local_distance(self, base, h):
        base, h = self._check(base), self._check(h)
        return DistanceResult(float(np.linalg.norm((base - self.point) + h)), self.point.copy())

    def section(self, fixed_idx, values, closure=True):
        fixed_idx = list(fixed_idx)
        if np.linalg.norm(self.point[fixed_idx] - np.asarray(values, float)) > self.atol:
            return None
        free = [i for i in range(self.dim) if i not in fixed_idx]
        return Singleton(self.point[free])

    def to_dict(self):
        return {"kind": "singleton", "point": self.point.tolist()}


# ---------------------------------------------------------------- polyhedra

def nnls(E: np.ndarray, f: np.ndarray, tol: float = 1e-12):
    """Lawson-Hanson active-set solve of ``min |E u - f|`` over ``u >= 0``.

    Returns ``(u, residual_norm)``.
    """
    E = np.asarray(E, float)
    f = np.asarray(f, float)
    m, n = E.shape
    u = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    scale = tol * max(1.0, np.abs(E).max(initial=0.0)) * max(1.0, np.abs(f).max(initial=0.0))
    for _ in range(3 * n + 10):
        w = E.T @ (f - E @ u)
        cand = np.where(~passive, w, -np.inf)
        j = int(np.argmax(cand))
        if cand[j] <= scale:
            break
        passive[j] = True
        for _ in range(3 * n + 10):
            idx = np.flatnonzero(passive)
            z = np.zeros(n)
            z[idx] = np.linalg.lstsq(E[:, idx], f, rcond=None)[0]
            if np.all(z[idx] > 0):
                u = z
                break
            neg = idx[z[idx] <= 0]
            alpha = np.min(u[neg] / (u[neg] - z[neg]))
            u = u + alpha * (z - u)
            passive &= u > scale
            u[~passive] = 0.0
    return u, float(np.linalg.norm(E @ u - f))


def _ldp(A: np.ndarray, s: np.ndarray):
    """Least-norm y with A y <= s (Lawson-Hanson LDP via NNLS); None if infeasible."""
    m, n = A.shape
    if m == 0 or np.all(s >= 0):
        return np.zeros(n)
    E = np.vstack([-A.T, -s[None, :]])
    f = np.zeros(n + 1)
    f[n] = 1.0
    u, _ = nnls(E, f)
    r = E @ u - f
    if abs(r[n]) < 1e-14:
        return None
    y = -r[:n] / r[n]
    return y


def _polish(A, s, h, y):
    """Re-solve on the detected active face for an exact projection of h."""
    scale = 1.0 + np.abs(s) + np.linalg.norm(A, axis=1) * (np.linalg.norm(h) + np.linalg.norm(y))
    act = np.abs(A @ y - s) <= 1e-9 * scale
    if not act.any():
        return y
    Aa, sa = A[act], s[act]
    corr, *_ = np.linalg.lstsq(Aa @ Aa.T, Aa @ h - sa, rcond=None)
    z = h - Aa.T @ corr
    tol = 1e-12 * scale
    if np.all(A @ z - s <= tol) and np.linalg.norm(z - h) <= np.linalg.norm(y - h) + 1e-12 * np.linalg.norm(h):
        return z
    return y


def project_polyhedron(A, b, x):
    """Euclidean projection of ``x`` onto ``{z : A z <= b}``; ``None`` if empty."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    x = np.asarray(x, float)
    s = b - A @ x
    y = _ldp(A, s)
    if y is None:
        return None
    if A.shape[0] and np.any(A @ y - s > 1e-7 * (1 + np.abs(s))):
        return None
    return x + _polish(A, s, np.zeros_like(x), y)


def project_polyhedron_enumerate(A, b, x):
    """Brute-force projection: try every face (subset of rows held with equality).

    Exponential in the number of constraints; kept as an independent oracle.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    x = np.asarray(x, float)
    m, n = A.shape
    best, best_d = None, math.inf
    for k in range(0, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            rows = list(rows)
            if rows:
                Aa, ba = A[rows], b[rows]
                corr, *_ = np.linalg.lstsq(Aa @ Aa.T, Aa @ x - ba, rcond=None)
                z = x - Aa.T @ corr
                if np.linalg.norm(Aa @ z - ba) > 1e-9 * (1 + np.abs(ba).max()):
                    continue
            else:
                z = x.copy()
            if np.all(A @ z <= b + 1e-9 * (1 + np.abs(b))):
                d = np.linalg.norm(z - x)
                if d < best_d:
                    best, best_d = z, d
    return best


class Polyhedron(SetSpec):
    """``{x : A x <= b}``."""
    kind = "polyhedron"

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float)).reshape(-1)
        if A.shape[0] != b.size:
            raise DimensionError("A and b have inconsistent row counts")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite polyhedron data")
        self.A, self.b = A, b
        self.dim = A.shape[1]

    def __repr__(self):
        return f"Polyhedron(A={self.A.tolist()}, b={self.b.tolist()})"

    @classmethod
    def from_equalities(cls, A_eq, b_eq, A=None, b=None):
        A_eq = np.atleast_2d(np.asarray(A_eq, float))
        b_eq = np.atleast_1d(np.asarray(b_eq, float))
        rows = [A_eq, -A_eq]
        rhs = [b_eq, -b_eq]
        if A is not None:
            rows.append(np.atleast_2d(np.asarray(A, float)))
            rhs.append(np.atleast_1d(np.asarray(b, float)))
        return cls(np.vstack(rows), np.concatenate(rhs))

    def contains(self, x, atol=None):
        x = self._check(x)
        atol = self.atol if atol is None else atol
        return bool(np.all(self.A @ x - self.b <= atol))

    def is_empty(self):
        return project_polyhedron(self.A, self.b, np.zeros(self.dim)) is None

    def _project_local(self, s, h, local: bool = False):
        # the projection is positively homogeneous in (s, h): solve at unit scale
        if local:
            scale = float(np.linalg.norm(h))
        else:
            scale = max(float(np.linalg.norm(h)), float(np.abs(s).max(initial=0.0)))
        if scale == 0.0:
            return h.copy()
        A = self.A
        if local:
            # base point in the set: |z| <= 2|h|, so rows with a large slack never bind
            keep = s <= 2.0 * np.linalg.norm(A, axis=1) * scale * (1 + 1e-9)
            A, s = A[keep], s[keep]
        s, h = s / scale, h / scale
        y = _ldp(A, s - A @ h)
        if y is None:
            return None
        z = h + y
        if np.any(A @ z - s > 1e-7 * (1 + np.abs(s) + np.linalg.norm(h))):
            return None
        return _polish(A, s, h, z) * scale

    def distance(self, x):
        x = self._check(x)
        z = self._project_local(self.b - self.A @ x, np.zeros(self.dim))
        if z is None:
            return EMPTY
        return DistanceResult(float(np.linalg.norm(z)), x + z)

    def local_distance(self, base, h):
        base, h = self._check(base), self._check(h)
        s = self.b - self.A @ base
        s = np.where(np.abs(s) <= _SNAP * (1 + np.abs(self.b)), 0.0, s)
        z = self._project_local(s, h, local=bool(np.all(s >= 0)))
        if z is None:
            return EMPTY
        return DistanceResult(float(np.linalg.norm(z - h)), base + z)

    def active_rows(self, x, atol: float | None = None) -> np.ndarray:
        x = self._check(x)
        atol = self.atol if atol is None else atol
        return np.abs(self.A @ x - self.b) <= atol * (1 + np.abs(self.b))

    def section(self, fixed_idx, values, closure=True):
        fixed_idx = list(fixed_idx)
        free = [i for i in range(self.dim) if i not in fixed_idx]
        b = self.b - self.A[:, fixed_idx] @ np.asarray(values, float)
        A = self.A[:, free]
        keep = np.linalg.norm(A, axis=1) > 1e-14
        if np.any(b[~keep] < -self.atol):
            return None
        out = Polyhedron(A[keep], b[keep]) if keep.any() else FullSpace(len(free))
        if isinstance(out, Polyhedron) and out.is_empty():
            return None
        return out

    def to_dict(self):
        return {"kind": "polyhedron", "A": self.A.tolist(), "b": self.b.tolist()}


def halfspace(normal, offset=0.0) -> Polyhedron:
    """``{x : <normal, x> <= offset}``."""
    return Polyhedron(np.atleast_2d(normal), [offset])


def polyhedral_tangent_oracle(set_: Polyhedron, xbar, atol: float | None = None) -> SetSpec:
    """Exact tangent cone of a polyhedron: the active rows with zero right side.

    Bouligand and Ursescu cones coincide for polyhedra. Returns ``FullSpace``
    at interior points.
    """
    if not isinstance(set_, Polyhedron):
        raise TypeError("polyhedral_tangent_oracle needs a Polyhedron")
    xbar = set_._check(xbar)
    if not set_.contains(xbar, atol):
        raise ValueError("reference point is not in the polyhedron")
    act = set_.active_rows(xbar, atol)
    if not act.any():
        return FullSpace(set_.dim)
    return Polyhedron(set_.A[act], np.zeros(int(act.sum())))


def cone_generators_distance(G: np.ndarray, v) -> float:
    """Distance from ``v`` to the cone generated by the rows of ``G``."""
    v = np.asarray(v, float)
    if G.size == 0:
        return float(np.linalg.norm(v))
    _, res = nnls(np.asarray(G, float).T, v)
    return res


# ---------------------------------------------------------------- unions / products

class Union(SetSpec):
    """Finite union of closed sets (usually polyhedra)."""
    kind = "union"

    def __init__(self, pieces: Sequence[SetSpec]):
        pieces = list(pieces)
        if not pieces:
            raise ValueError("union needs at least one piece")
        dims = {p.dim for p in pieces}
        if len(dims) != 1:
            raise DimensionError("union pieces differ in dimension")
        self.pieces = pieces
        self.dim = dims.pop()
        self.exact = all(p.exact for p in pieces)

    def __repr__(self):
        return f"Union({self.pieces!r})"

    def contains(self, x, atol=None):
        return any(p.contains(x, atol) for p in self.pieces)

    def _best(self, results):
        best = min(results, key=lambda r: r.value)
        gap = max(r.gap for r in results if not r.is_empty) if not best.is_empty else 0.0
        return DistanceResult(best.value, best.witness, gap)

    def distance(self, x):
        return self._best([p.distance(x) for p in self.pieces])

    def local_distance(self, base, h):
        return self._best([p.local_distance(base, h) for p in self.pieces])

    def closure(self):
        return Union([p.closure() for p in self.pieces])

    def section(self, fixed_idx, values, closure=True):
        parts = [p.section(fixed_idx, values, closure) for p in self.pieces]
        parts = [p for p in parts if p is not None]
        if not parts:
            return None
        return parts[0] if len(parts) == 1 else Union(parts)

    def punctures_near(self, idx, center, radius, limit=4):
        out = []
        for p in self.pieces:
            out.extend(p.punctures_near(idx, center, radius, limit))
        return sorted(set(out))[:limit]

    def to_dict(self):
        return {"kind": "union", "pieces": [p.to_dict() for p in self.pieces]}


UnionOfPolyhedra = Union


class Product(SetSpec):
    """``left x right`` with the sum norm."""
    kind = "product"

    def __init__(self, left: SetSpec, right: SetSpec):
        self.left, self.right = left, right
        self.dim = left.dim + right.dim
        self.exact = left.exact and right.exact

    def __repr__(self):
        return f"Product({self.left!r}, {self.right!r})"

    @property
    def blocks(self):
        return self.left.blocks + self.right.blocks

    def _split(self, x):
        return x[: self.left.dim], x[self.left.dim:]

    def contains(self, x, atol=None):
        a, b = self._split(self._check(x))
        return self.left.contains(a, atol) and self.right.contains(b, atol)

    def _join(self, ra, rb):
        if ra.is_empty or rb.is_empty:
            return EMPTY
        return DistanceResult(ra.value + rb.value,
                              np.concatenate([ra.witness, rb.witness]), ra.gap + rb.gap)

    def distance(self, x):
        a, b = self._split(self._check(x))
        return self._join(self.left.distance(a), self.right.distance(b))

    def local_distance(self, base, h):
        ba, bb = self._split(self._check(base))
        ha, hb = self._split(self._check(h))
        return self._join(self.left.local_distance(ba, ha), self.right.local_distance(bb, hb))

    def closure(self):
        return Product(self.left.closure(), self.right.closure())

    def is_empty(self):
        return self.left.is_empty() or self.right.is_empty()

    def section(self, fixed_idx, values, closure=True):
        values = np.asarray(values, float)
        nl = self.left.dim
        li = [(i, v) for i, v in zip(fixed_idx, values) if i < nl]
        ri = [(i - nl, v) for i, v in zip(fixed_idx, values) if i >= nl]
        parts = []
        for set_, fixed in ((self.left, li), (self.right, ri)):
            if not fixed:
                parts.append(set_)
                continue
            idx = [i for i, _ in fixed]
            vals = [v for _, v in fixed]
            if len(idx) == set_.dim:
                if not _contains_maybe_closure(set_, vals, closure):
                    return None
                continue
            sec = set_.section(idx, vals, closure)
            if sec is None:
                return None
            parts.append(sec)
        if not parts:
            raise DimensionError("section fixes every coordinate")
        out = parts[0]
        for p in parts[1:]:
            out = Product(out, p)
        return out

    def punctures_near(self, idx, center, radius, limit=4):
        if idx < self.left.dim:
            return self.left.punctures_near(idx, center, radius, limit)
        return self.right.punctures_near(idx - self.left.dim, center, radius, limit)

    def to_dict(self):
        return {"kind": "product", "left": self.left.to_dict(), "right": self.right.to_dict()}


def product(*sets: SetSpec) -> SetSpec:
    out = sets[0]
    for s in sets[1:]:
        out = Product(out, s)
    return out


def _contains_maybe_closure(set_, x, closure):
    if closure:
        return set_.distance(x).value <= set_.atol
    return set_.contains(x)


class PermutedSet(SetSpec):
    """``{x : x[perm] in base}`` -- relabels coordinates of ``base``."""
    kind = "permuted"

    def __init__(self, base: SetSpec, perm: Sequence[int]):
        perm = list(perm)
        if sorted(perm) != list(range(base.dim)):
            raise ValueError("perm must be a permutation")
        self.base, self.perm = base, np.array(perm)
        self.inv = np.argsort(self.perm)
        self.dim = base.dim
        self.exact = base.exact

    def __repr__(self):
        return f"PermutedSet({self.base!r}, {self.perm.tolist()})"

    def contains(self, x, atol=None):
        return self.base.contains(self._check(x)[self.perm], atol)

    def _back(self, r):
        if r.is_empty:
            return r
        return DistanceResult(r.value, r.witness[self.inv], r.gap)

    def distance(self, x):
        return self._back(self.base.distance(self._check(x)[self.perm]))

    def local_distance(self, base, h):
        return self._back(self.base.local_distance(self._check(base)[self.perm],
                                                   self._check(h)[self.perm]))

    def closure(self):
        return PermutedSet(self.base.closure(), self.perm)

    def section(self, fixed_idx, values, closure=True):
        fixed_idx = list(fixed_idx)
        base_idx = [int(self.inv[i]) for i in fixed_idx]
        order = np.argsort(base_idx)
        sec = self.base.section([base_idx[k] for k in order],
                                np.asarray(values, float).reshape(-1)[order], closure)
        if sec is None:
            return None
        # free coordinates come back in base order; restore our order
        free_x = [i for i in range(self.dim) if i not in fixed_idx]
        free_base = sorted(int(self.inv[i]) for i in free_x)
        want = [free_base.index(int(self.inv[i])) for i in free_x]
        if want == sorted(want):
            return sec
        return PermutedSet(sec, want)

    def punctures_near(self, idx, center, radius, limit=4):
        return self.base.punctures_near(int(self.inv[idx]), center, radius, limit)

    def to_dict(self):
        return {"kind": "permuted", "base": self.base.to_dict(), "perm": self.perm.tolist()}


# ---------------------------------------------------------------- sequences

class Sequence1D:
    """Strictly decreasing positive sequence ``a_k -> limit`` given by an expression in ``k``."""

    def __init__(self, expr: str, start: int = 1, limit: float = 0.0):
        self.text = str(expr)
        self.start = int(start)
        self.limit = float(limit)
        self._f = SmoothMap(self.text, ["k"])

    def __repr__(self):
        return f"Sequence1D({self.text!r}, start={self.start})"

    def term(self, k) -> float:
        return float(self._f([float(k)])[0])

    def _first_at_or_below(self, x: float) -> int:
        """Smallest k >= start with a_k <= x (assumes x > limit)."""
        lo = self.start
        if self.term(lo) <= x:
            return lo
        hi = lo + 1
        while self.term(hi) > x:
            lo, hi = hi, 2 * hi
            if hi > 2 ** 62:
                return hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.term(mid) > x:
                lo = mid
            else:
                hi = mid
        return hi

    def nearest(self, x: float) -> float:
        """Nearest point of the closed set ``{limit} U {a_k}``."""
        if x <= self.limit:
            return self.limit
        k = self._first_at_or_below(x)
        cands = [self.limit, self.term(k)]
        if k > self.start:
            cands.append(self.term(k - 1))
        return min(cands, key=lambda c: abs(c - x))

    def is_term(self, x: float, rtol: float = 1e-12) -> bool:
        if x <= self.limit:
            return False
        return abs(self.nearest(x) - x) <= rtol * abs(x - self.limit)

    def terms_in(self, lo: float, hi: float, limit: int = 4) -> list[float]:
        """Up to ``limit`` terms inside ``[lo, hi]``, largest first."""
        if hi <= self.limit:
            return []
        k = self._first_at_or_below(hi)
        out = []
        while len(out) < limit:
            a = self.term(k)
            if a < lo or a <= self.limit:
                break
            out.append(a)
            k += 1
        return out

    def to_dict(self):
        return {"expr": self.text, "start": self.start, "limit": self.limit}


class SequenceSet(SetSpec):
    """Closed countable subset ``{limit} U {a_k}`` of the real line."""
    kind = "sequence"
    dim = 1

    def __init__(self, seq: Sequence1D):
        self.seq = seq

    def __repr__(self):
        return f"SequenceSet({self.seq!r})"

    def contains(self, x, atol=None):
        x = float(self._check(x)[0])
        atol = self.atol if atol is None else atol
        return abs(self.seq.nearest(x) - x) <= atol

    def distance(self, x):
        x = float(self._check(x)[0])
        p = self.seq.nearest(x)
        return DistanceResult(abs(p - x), np.array([p]))

    def to_dict(self):
        return {"kind": "sequence", **self.seq.to_dict()}


# ---------------------------------------------------------------- curves

class FunctionGraph(SetSpec):
    """Graph ``{(s, phi(s))}`` (or epi/hypograph) of a scalar function of one variable.

    ``excluded`` optionally punctures the graph at parameters of a sequence;
    distance is always to the closure.
    """
    kind = "curve"
    dim = 2

    def __init__(self, phi: str, relation: str = "=", excluded: Sequence1D | None = None,
                 var: str = "s"):
        if relation not in ("=", ">=", "<="):
            raise ValueError(f"bad relation {relation!r}")
        self.text, self.relation, self.excluded, self.var = str(phi), relation, excluded, var
        self.phi = SmoothMap(self.text, [var])
        self.poly = scalar_polynomial(self.text, var)

    def __repr__(self):
        return f"FunctionGraph({self.text!r}, {self.relation!r}, excluded={self.excluded!r})"

    def value(self, s: float) -> float:
        return float(self.phi([s])[0])

    def _punctured(self, s: float) -> bool:
        return self.excluded is not None and self.excluded.is_term(s)

    def contains(self, x, atol=None):
        s, y = self._check(x)
        atol = self.atol if atol is None else atol
        if self._punctured(s):
            return False
        gap = y - self.value(s)
        if self.relation == "=":
            return abs(gap) <= atol
        return gap >= -atol if self.relation == ">=" else gap <= atol

    def closure(self):
        return FunctionGraph(self.text, self.relation, None, self.var)

    @lru_cache(maxsize=256)
    def _shifted_poly(self, s0: float, y0: float):
        P = self.poly(np.polynomial.Polynomial([s0, 1.0])) - y0
        c = P.coef.copy()
        if abs(c[0]) <= 1e-12 * (1 + abs(y0)):
            c[0] = 0.0
        return np.polynomial.Polynomial(c)

    def _local(self, s0, y0, hs, hy):
        if self.poly is not None:
            P = self._shifted_poly(s0, y0)
            vert = hy - P(hs)
        else:
            P = None
            vert = hy - (self.value(s0 + hs) - y0)
        if self.relation == ">=" and vert >= 0 or self.relation == "<=" and vert <= 0:
            return 0.0, (hs, hy), 0.0
        if vert == 0.0:
            return 0.0, (hs, hy), 0.0
        if P is not None:
            best = self._curve_poly(P, hs, hy)
            gap = 0.0
        else:
            best = self._curve_scan(s0, y0, hs, hy, abs(vert))
            gap = 1e-12 * abs(vert)
        return best[0], best[1], gap

    @staticmethod
    def _curve_poly(P, hs, hy):
        dP = P.deriv()
        stat = (np.polynomial.Polynomial([-hs, 1.0]) + (P - hy) * dP)
        cands = [hs]
        if stat.degree() >= 1:
            for r in stat.roots():
                if abs(r.imag) <= 1e-6 * (1 + abs(r.real)):
                    cands.append(r.real)
        dstat = stat.deriv()
        best = None
        for z in cands:
            for _ in range(3):
                d = dstat(z)
                if d == 0:
                    break
                z = z - stat(z) / d
            val = math.hypot(z - hs, P(z) - hy)
            if best is None or val < best[0]:
                best = (val, (z, P(z)))
        return best

    def _curve_scan(self, s0, y0, hs, hy, radius):
        f = lambda z: math.hypot(z - hs, self.value(s0 + z) - y0 - hy)
        zs = hs + radius * np.linspace(-1, 1, 65)
        vals = [f(z) for z in zs]
        i = int(np.argmin(vals))
        lo, hi = zs[max(i - 1, 0)], zs[min(i + 1, 64)]
        res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-14 * (1 + radius)})
        z = res.x if res.fun < vals[i] else zs[i]
        return f(z), (z, self.value(s0 + z) - y0)

    def distance(self, x):
        s, y = self._check(x)
        d, (zs, zy), gap = self._local(0.0, 0.0, s, y)
        return DistanceResult(d, np.array([zs, zy]), gap)

    def local_distance(self, base, h):
        s0, y0 = self._check(base)
        hs, hy = self._check(h)
        d, (zs, zy), gap = self._local(s0, y0, hs, hy)
        return DistanceResult(d, np.array([s0 + zs, y0 + zy]), gap)

    def section(self, fixed_idx, values, closure=True):
        fixed_idx = list(fixed_idx)
        if fixed_idx != [0]:
            return self._section_value(float(np.asarray(values).reshape(-1)[0]))
        s = float(np.asarray(values).reshape(-1)[0])
        if not closure and self._punctured(s):
            return None
        y = self.value(s)
        if self.relation == "=":
            return Singleton([y])
        return Polyhedron([[-1.0]], [-y]) if self.relation == ">=" else Polyhedron([[1.0]], [y])

    def _section_value(self, y: float):
        if self.poly is None:
            raise NotImplementedError("inverse sections need a polynomial curve")
        roots = sorted(r.real for r in (self.poly - y).roots()
                       if abs(r.imag) <= 1e-9 * (1 + abs(r.real)))
        if self.relation == "=":
            pts = [Singleton([r]) for r in roots]
            return None if not pts else (pts[0] if len(pts) == 1 else Union(pts))
        ok = (lambda v: v <= y) if self.relation == ">=" else (lambda v: v >= y)
        edges = [-math.inf] + roots + [math.inf]
        pieces = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid = (lo + hi) / 2 if math.isfinite(lo) and math.isfinite(hi) else (
                hi - 1 if math.isfinite(hi) else (lo + 1 if math.isfinite(lo) else 0.0))
            if ok(self.poly(mid)):
                A, b = [], []
                if math.isfinite(lo):
                    A.append([-1.0]); b.append(-lo)
                if math.isfinite(hi):
                    A.append([1.0]); b.append(hi)
                pieces.append(Polyhedron(A, b) if A else FullSpace(1))
        for r in roots:
            pieces.append(Singleton([r]))
        return None if not pieces else Union(pieces)

    def punctures_near(self, idx, center, radius, limit=4):
        if idx != 0 or self.excluded is None:
            return []
        lo, hi = center - radius, center + radius
        hits = self.excluded.terms_in(max(lo, self.excluded.limit), hi, limit * 4)
        return sorted(hits, key=lambda a: abs(a - center))[:limit]

    def to_dict(self):
        out = {"kind": "curve", "phi": self.text, "relation": self.relation, "var": self.var}
        if self.excluded is not None:
            out["excluded"] = self.excluded.to_dict()
        return out


PuncturedParametric = FunctionGraph


# ---------------------------------------------------------------- smooth sets

class SmoothLevelSet(SetSpec):
    """``{x : g_i(x) rel_i 0}`` for smooth expressions ``g_i``.

    Projection is a multistart SLSQP solve in coordinates centred at the base
    point and scaled by ``|h|``; the reported gap is heuristic.
    """
    kind = "smooth"
    exact = False

    def __init__(self, g, variables: Sequence[str], relation="<="):
        exprs = [g] if isinstance(g, str) else list(g)
        rels = [relation] * len(exprs) if isinstance(relation, str) else list(relation)
        if len(rels) != len(exprs) or any(r not in ("<=", "=", ">=") for r in rels):
            raise ValueError("bad relations")
        self.g = SmoothMap(exprs, variables)
        self.relations = rels
        self.dim = len(variables)
        self._sign = np.array([-1.0 if r == ">=" else 1.0 for r in rels])
        self._eq = np.array([r == "=" for r in rels])
        self._seeds = ball_samples(self.dim, 6, seed=0) * 0.5

    def __repr__(self):
        return f"SmoothLevelSet({self.g.texts!r}, {self.g.variables!r}, {self.relations!r})"

    def _violation(self, x):
        v = self._sign * self.g(x)
        return np.where(self._eq, np.abs(v), np.maximum(v, 0.0))

    def contains(self, x, atol=None):
        x = self._check(x)
        atol = self.atol if atol is None else atol
        return bool(np.all(self._violation(x) <= atol))

    @lru_cache(maxsize=128)
    def _shifted(self, base: tuple):
        """Exact ``g(base + z) - g(base)`` (polynomial case) plus the base residual."""
        gb = self.g(np.array(base))
        if not self.g.is_polynomial:
            return None, gb
        zs = [sp.Symbol(f"z{i}", real=True) for i in range(self.dim)]
        sub = {s: sp.Float(b, 17) + z for s, b, z in zip(self.g.symbols, base, zs)}
        exprs = [sp.expand(e.subs(sub) - e.subs({s: sp.Float(b, 17) for s, b in zip(self.g.symbols, base)}))
                 for e in self.g.exprs]
        f = sp.lambdify(zs, exprs, "numpy")
        J = sp.lambdify(zs, [[sp.diff(e, z) for z in zs] for e in exprs], "numpy")
        H = sp.lambdify(zs, [[[sp.diff(e, a, b) for b in zs] for a in zs] for e in exprs], "numpy")
        return (f, J, H), gb

    def distance(self, x):
        return self.local_distance(np.zeros(self.dim), x)

    def local_distance(self, base, h):
        base, h = self._check(base), self._check(h)
        sigma = float(np.linalg.norm(h))
        if self.contains(base + h, atol=0.0):
            return DistanceResult(0.0, base + h)
        if sigma == 0.0:
            sigma = 1.0
        shifted, gb = self._shifted(tuple(base.tolist()))
        snap = np.where(np.abs(gb) <= self.atol, 0.0, gb)
        k, n = len(snap), self.dim
        if shifted is not None:
            f, J, H = shifted
            val = lambda w: (np.asarray(f(*(sigma * w)), float).reshape(-1) + snap) / sigma
            jac = lambda w: np.asarray(J(*(sigma * w)), float).reshape(k, n)
            hess = lambda w: sigma * np.asarray(H(*(sigma * w)), float).reshape(k, n, n)
        else:
            val = lambda w: self.g(base + sigma * w) / sigma
            jac = lambda w: self.g.jacobian(base + sigma * w)
            hess = lambda w: sigma * np.asarray(self.g.hessian(base + sigma * w)).reshape(k, n, n)
        hh = h / sigma
        if k <= 3:
            best = self._active_set_project(val, jac, hess, hh)
            if best is not None:
                d, w = best
                return DistanceResult(sigma * d, base + sigma * w, sigma * 1e-9)
        cons = []
        for i, rel in enumerate(self.relations):
            sgn = -1.0 if rel == "<=" else 1.0
            cons.append({"type": "eq" if rel == "=" else "ineq",
                         "fun": (lambda w, i=i, s=sgn: s * val(w)[i]),
                         "jac": (lambda w, i=i, s=sgn: s * jac(w)[i])})
        best = None
        for seed in [hh, np.zeros(self.dim)] + [hh + s for s in self._seeds]:
            res = optimize.minimize(lambda w: 0.5 * np.sum((w - hh) ** 2), seed,
                                    jac=lambda w: w - hh, constraints=cons,
                                    method="SLSQP", options={"ftol": 1e-15, "maxiter": 200})
            w = res.x
            v = val(w) * np.where(np.array(self.relations) == ">=", -1, 1)
            viol = np.where(self._eq, np.abs(v), np.maximum(v, 0.0)).max(initial=0.0)
            if viol > 1e-7:
                continue
            d = float(np.linalg.norm(w - hh))
            if best is None or d < best[0]:
                best = (d, w, viol)
        if best is None:
            return DistanceResult(math.inf, None, math.inf)
        d, w, viol = best
        return DistanceResult(sigma * d, base + sigma * w, sigma * (viol + 1e-9))

    @staticmethod
    def _kkt_project(val, jac, hess, hh, active=(0,)):
        """Nearest point of ``{val_i = 0, i in active}`` to ``hh`` by Newton's method
        on the KKT system ``w - hh + J_A^T lam = 0, val_A(w) = 0`` from a few seeds.

        Returns ``(distance, w, lam)`` or ``None`` if no seed converges.
        """
        A = list(active)
        n, k = hh.size, len(A)
        g0, d0 = val(hh)[A], jac(hh)[A]
        seeds = [hh, np.zeros(n)]
        lin = np.linalg.lstsq(d0, -g0, rcond=None)[0] if np.any(d0) else None
        if lin is not None:
            seeds.insert(0, hh + lin)
        best = None
        for w in seeds:
            w = w.astype(float).copy()
            lam = np.linalg.lstsq(jac(w)[A].T, hh - w, rcond=None)[0]
            for _ in range(60):
                gv, dg, Hg = val(w)[A], jac(w)[A], hess(w)[A]
                F = np.concatenate([w - hh + dg.T @ lam, gv])
                if np.linalg.norm(F) <= 1e-14 * (1 + np.linalg.norm(hh)):
                    break
                K = np.zeros((n + k, n + k))
                K[:n, :n] = np.eye(n) + np.tensordot(lam, Hg, axes=1)
                K[:n, n:] = dg.T
                K[n:, :n] = dg
                try:
                    step = np.linalg.solve(K, -F)
                except np.linalg.LinAlgError:
                    break
                w, lam = w + step[:n], lam + step[n:]
            if not np.all(np.isfinite(w)) or np.abs(val(w)[A]).max() > 1e-12:
                continue
            d = float(np.linalg.norm(w - hh))
            if best is None or d < best[0]:
                best = (d, w, lam)
        return best

    def _active_set_project(self, val, jac, hess, hh):
        """Try every active set of up to ``dim`` constraints (equalities always
        active) and keep the closest feasible KKT point."""
        eq = [i for i in range(len(self.relations)) if self._eq[i]]
        ineq = [i for i in range(len(self.relations)) if not self._eq[i]]
        sign = np.where(np.array(self.relations) == ">=", -1.0, 1.0)
        best = None
        for r in range(0, min(self.dim - len(eq), len(ineq)) + 1):
            for extra in itertools.combinations(ineq, r):
                act = eq + list(extra)
                if not act:
                    continue
                res = self._kkt_project(val, jac, hess, hh, act)
                if res is None:
                    continue
                v = sign * val(res[1])
                if np.max(np.where(self._eq, np.abs(v), v), initial=0.0) > 1e-12:
                    continue
                mult = res[2][len(eq):] * sign[list(extra)]
                if np.any(mult < -1e-10):
                    continue
                if best is None or res[0] < best[0]:
                    best = res[:2]
        return best

    def section(self, fixed_idx, values, closure=True):
        fixed_idx = list(fixed_idx)
        free = [v for i, v in enumerate(self.g.variables) if i not in fixed_idx]
        sub = {self.g.symbols[i]: float(v) for i, v in zip(fixed_idx, np.asarray(values).reshape(-1))}
        exprs = [str(e.subs(sub)) for e in self.g.exprs]
        return SmoothLevelSet(exprs, free, self.relations)

    def to_dict(self):
        return {"kind": "smooth", "g": list(self.g.texts), "vars": list(self.g.variables),
                "relation": list(self.relations)}


# ---------------------------------------------------------------- sum-norm distance

def sum_norm_distance(set_: SetSpec, x, blocks: Sequence[int]) -> DistanceResult:
    """Distance under ``sum_i |x_i|_2`` over coordinate blocks.

    Exact (linear program) for polyhedra and unions of polyhedra with scalar
    blocks; a single block falls back to the Euclidean oracle.
    """
    x = set_._check(x)
    blocks = list(blocks)
    if len(blocks) == 1:
        return set_.distance(x)
    if isinstance(set_, Union):
        return min((sum_norm_distance(p, x, blocks) for p in set_.pieces), key=lambda r: r.value)
    if isinstance(set_, Product) and list(set_.blocks) == blocks:
        return set_.distance(x)
    if not isinstance(set_, Polyhedron) or any(b != 1 for b in blocks):
        raise NotImplementedError("sum-norm distance needs a polyhedron with scalar blocks")
    n = set_.dim
    c = np.concatenate([np.zeros(n), np.ones(n)])
    I = np.eye(n)
    A_ub = np.vstack([np.hstack([set_.A, np.zeros_like(set_.A)]),
                      np.hstack([I, -I]), np.hstack([-I, -I])])
    b_ub = np.concatenate([set_.b, x, -x])
    res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (2 * n),
                           method="highs")
    if res.status == 2:
        return EMPTY
    z = res.x[:n]
    return DistanceResult(float(np.abs(z - x).sum()), z, 1e-9)

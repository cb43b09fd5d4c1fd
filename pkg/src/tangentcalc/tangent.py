"""Membership tests for first- and second-order Bouligand/Ursescu tangent sets.

For a closed set ``D`` (punctured sets are replaced by their closure, which
has the same tangent sets) and ``xbar`` in ``D``:

* ``u`` is Bouligand tangent iff ``liminf_{t->0} d(xbar + t u, D) / t = 0``;
* ``u`` is Ursescu tangent iff the same quotient tends to ``0``;
* second order replaces ``xbar + t u`` by ``xbar + t x1 + t^2 u`` and divides by ``t^2``.

The limits are estimated on a geometric grid of ``t`` values; the last third
of the grid is the "tail". A hysteresis band ``[eps_in, eps_out]`` separates
IN from OUT, and anything between is INCONCLUSIVE.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .geometry import SetSpec, as_vector

_T_FLOOR = 1e-15


class Verdict(str, enum.Enum):
    IN = "IN"
    OUT = "OUT"
    INCONCLUSIVE = "INCONCLUSIVE"

    def __str__(self):
        return self.value

    @property
    def conclusive(self) -> bool:
        return self is not Verdict.INCONCLUSIVE


IN, OUT, INCONCLUSIVE = Verdict.IN, Verdict.OUT, Verdict.INCONCLUSIVE


def verdict_and(*verdicts: Verdict) -> Verdict:
    """Three-valued conjunction."""
    if any(v is OUT for v in verdicts):
        return OUT
    if all(v is IN for v in verdicts):
        return IN
    return INCONCLUSIVE


def verdict_not(v: Verdict) -> Verdict:
    return {IN: OUT, OUT: IN}.get(v, INCONCLUSIVE)


@dataclass(frozen=True)
class LimitSchedule:
    """Geometric grid ``t_k = t0 * ratio**k``, ``k < steps``, plus thresholds.

    ``phases > 1`` interleaves ``phases`` shifted copies of the grid
    (exponents ``k + j/phases``); this probes more sequences ``t_n -> 0`` and
    breaks resonance between the grid and self-similar sets.
    """
    t0: float = 1.0
    ratio: float = 0.5
    steps: int = 40
    eps_in: float = 1e-4
    eps_out: float = 1e-2
    phases: int = 1

    def __post_init__(self):
        if not (self.t0 > 0 and 0 < self.ratio < 1 and self.steps >= 3 and self.phases >= 1):
            raise ValueError(f"degenerate schedule {self}")
        if not self.eps_in < self.eps_out:
            raise ValueError("eps_in must be below eps_out")
        if self.t_min <= _T_FLOOR:
            raise ValueError(f"schedule reaches t = {self.t_min:.3g}, below the float floor")

    @classmethod
    def second_order(cls, **kw) -> "LimitSchedule":
        """Default grid for ``t^2``-scaled quotients: 24 steps (``t_min^2 ~ 1e-14``)
        and three interleaved phases, so that ``t^2`` does not resonate with
        geometric sets such as ``{4^-k}``."""
        kw.setdefault("steps", 24)
        kw.setdefault("phases", 3)
        return cls(**kw)

    @property
    def t_min(self) -> float:
        return self.t0 * self.ratio ** (self.steps - 1)

    @property
    def tail(self) -> int:
        return math.ceil(self.steps * self.phases / 3)

    def grid(self) -> np.ndarray:
        k = np.arange((self.steps - 1) * self.phases + 1) / self.phases
        return self.t0 * self.ratio ** k

    def with_overrides(self, **kw) -> "LimitSchedule":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


DEFAULT_SCHEDULE = LimitSchedule()
DEFAULT_SCHEDULE_2 = LimitSchedule.second_order()


@dataclass
class TangentDecision:
    verdict: Verdict
    quotient_trace: list[tuple[float, float]] = field(default_factory=list)
    liminf_est: float = math.nan
    limsup_est: float = math.nan
    oscillating: bool = False
    note: str = ""

    @property
    def conclusive(self) -> bool:
        return self.verdict.conclusive

    def to_dict(self) -> dict:
        return {"verdict": str(self.verdict), "liminf": _num(self.liminf_est),
                "limsup": _num(self.limsup_est), "oscillating": self.oscillating,
                "note": self.note}


def _num(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    if math.isinf(x):
        return "inf"
    return float(x)


def write_trace_csv(decision: TangentDecision, fh, label: str = "") -> None:
    """Write ``(t, quotient)`` rows, one per grid point."""
    w = csv.writer(fh)
    w.writerow(["label", "t", "quotient"])
    for t, q in decision.quotient_trace:
        w.writerow([label, repr(t), repr(q)])


# ---------------------------------------------------------------- core estimator

def quotient_trace(set_: SetSpec, xbar, u, sched: LimitSchedule, x1=None) -> np.ndarray:
    """Rows ``(t, d(xbar + t x1 + t^2 u, D) / t^2)`` (second order when ``x1`` is given)
    or ``(t, d(xbar + t u, D) / t)``."""
    xbar = as_vector(xbar, set_.dim)
    u = as_vector(u, set_.dim)
    ts = sched.grid()
    out = np.empty((ts.size, 2))
    if x1 is None:
        for i, t in enumerate(ts):
            out[i] = t, set_.local_distance(xbar, t * u).value / t
    else:
        x1 = as_vector(x1, set_.dim)
        for i, t in enumerate(ts):
            out[i] = t, set_.local_distance(xbar, t * x1 + (t * t) * u).value / (t * t)
    return out


def _in_closure(set_: SetSpec, xbar) -> bool:
    return set_.distance(xbar).value <= set_.atol


def decide(trace: np.ndarray, sched: LimitSchedule, flavor: str) -> TangentDecision:
    """Turn a quotient trace into a three-valued verdict for flavor ``"B"`` or ``"U"``."""
    tail = trace[-sched.tail:, 1]
    lo, hi = float(tail.min()), float(tail.max())
    osc = hi >= sched.eps_out and lo <= sched.eps_in
    if flavor == "B":
        if lo <= sched.eps_in:
            v = IN
        elif lo >= sched.eps_out:
            v = OUT
        else:
            v = INCONCLUSIVE
    elif flavor == "U":
        if hi <= sched.eps_in:
            v = IN
        elif lo >= sched.eps_out or osc:
            v = OUT
        else:
            v = INCONCLUSIVE
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    return TangentDecision(v, [(float(t), float(q)) for t, q in trace], lo, hi, osc,
                           "oscillation certificate" if osc else "")


def _outside(note="reference point outside the closure") -> TangentDecision:
    return TangentDecision(OUT, [], math.inf, math.inf, False, note)


def tangent_decisions(set_: SetSpec, xbar, u, sched: LimitSchedule | None = None,
                      x1=None) -> dict[str, TangentDecision]:
    """Bouligand and Ursescu decisions from one shared quotient trace."""
    if sched is None:
        sched = DEFAULT_SCHEDULE if x1 is None else DEFAULT_SCHEDULE_2
    xbar = as_vector(xbar, set_.dim)
    u = as_vector(u, set_.dim)
    if not _in_closure(set_, xbar):
        return {"B": _outside(), "U": _outside()}
    if x1 is None and not np.any(u):
        d = TangentDecision(IN, [], 0.0, 0.0, False, "zero direction")
        return {"B": d, "U": d}
    trace = quotient_trace(set_, xbar, u, sched, x1)
    return {"B": decide(trace, sched, "B"), "U": decide(trace, sched, "U")}


def bouligand_membership(set_, xbar, u, sched=None) -> TangentDecision:
    """Is ``u`` in the first-order Bouligand (contingent) cone of ``set_`` at ``xbar``?"""
    return tangent_decisions(set_, xbar, u, sched)["B"]


def ursescu_membership(set_, xbar, u, sched=None) -> TangentDecision:
    """Is ``u`` in the first-order Ursescu (adjacent) cone of ``set_`` at ``xbar``?

    An oscillating tail (large limsup with vanishing liminf) counts as OUT.
    """
    return tangent_decisions(set_, xbar, u, sched)["U"]


def bouligand2_membership(set_, xbar, x1, u, sched=None) -> TangentDecision:
    return tangent_decisions(set_, xbar, u, sched, x1=x1)["B"]


def ursescu2_membership(set_, xbar, x1, u, sched=None) -> TangentDecision:
    return tangent_decisions(set_, xbar, u, sched, x1=x1)["U"]


def sample_cone(set_: SetSpec, xbar, direction_grid: Iterable, sched=None, x1=None,
                flavor: str = "B") -> list[tuple[np.ndarray, TangentDecision]]:
    """Batch decisions over a direction grid (``flavor`` is ``"B"`` or ``"U"``)."""
    out = []
    for u in direction_grid:
        u = as_vector(u, set_.dim)
        out.append((u, tangent_decisions(set_, xbar, u, sched, x1)[flavor]))
    return out


def literal_sequence_search(set_: SetSpec, xbar, u, sched: LimitSchedule | None = None,
                            ) -> float:
    """Literal reading of the sequence definition: for each ``t_k`` take the nearest
    point ``p_k`` of the set to ``xbar + t_k u`` and report the tail minimum of
    ``|(p_k - xbar)/t_k - u|``. Used to cross-check the quotient reformulation."""
    sched = sched or DEFAULT_SCHEDULE
    xbar = as_vector(xbar, set_.dim)
    u = as_vector(u, set_.dim)
    errs = []
    for t in sched.grid()[-sched.tail:]:
        r = set_.local_distance(xbar, t * u)
        errs.append(np.linalg.norm((r.witness - xbar) / t - u))
    return float(min(errs))


def tangent_candidates(set_: SetSpec, xbar, probes: Iterable, x1=None,
                       t: float | None = None) -> list[np.ndarray]:
    """Directions that are likely tangent: project ``xbar + t p`` (or
    ``xbar + t x1 + t^2 p``) onto the set and rescale.

    Used to populate the IN side of inclusion tests; every candidate is still
    decided by the estimator, never assumed.
    """
    xbar = as_vector(xbar, set_.dim)
    out = []
    if x1 is None:
        t = 1e-8 if t is None else t
        for p in probes:
            r = set_.local_distance(xbar, t * as_vector(p, set_.dim))
            if not r.is_empty:
                out.append((r.witness - xbar) / t)
    else:
        t = 1e-6 if t is None else t
        x1 = as_vector(x1, set_.dim)
        for p in probes:
            r = set_.local_distance(xbar, t * x1 + t * t * as_vector(p, set_.dim))
            if not r.is_empty:
                out.append((r.witness - xbar - t * x1) / (t * t))
    return dedupe(out)


def dedupe(vectors, tol: float = 1e-9) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for v in vectors:
        if all(np.linalg.norm(v - w) > tol * (1 + np.linalg.norm(v)) for w in out):
            out.append(v)
    return out

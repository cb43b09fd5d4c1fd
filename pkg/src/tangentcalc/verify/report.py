"""Inclusion records, suite reports, and their CSV / JSON renderings."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from ..tangent import IN, OUT, TangentDecision, Verdict

CONFIRMED = "CONFIRMED"
VACUOUS = "VACUOUS"
INCONCLUSIVE = "INCONCLUSIVE"
VIOLATION = "VIOLATION"

PASS = "PASS"
FAIL_INCONCLUSIVE = "TOO-INCONCLUSIVE"
NOT_APPLICABLE = "NOT-APPLICABLE"
PREMISE_FAILED = "PREMISE-FAILED"

CSV_COLUMNS = ("suite", "record_id", "t_or_radius", "quotient", "verdict_lhs", "verdict_rhs",
               "outcome")


def outcome(lhs: Verdict, rhs: Verdict) -> str:
    """Classify one sampled element for the inclusion ``LHS ⊂ RHS``."""
    if lhs is OUT:
        return VACUOUS
    if lhs is IN and rhs is IN:
        return CONFIRMED
    if lhs is IN and rhs is OUT:
        return VIOLATION
    return INCONCLUSIVE


def _clean(x):
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, Verdict):
        return x.value
    return x


@dataclass
class Record:
    relation: str
    inputs: dict
    lhs: Verdict
    rhs: Verdict
    outcome: str
    t: float = math.nan
    quotient: float = math.nan

    def to_dict(self):
        return _clean({"relation": self.relation, "inputs": self.inputs, "lhs": self.lhs,
                       "rhs": self.rhs, "outcome": self.outcome})


@dataclass
class InclusionReport:
    suite: str
    theorem: str
    instance_id: str
    records: list[Record] = field(default_factory=list)
    status: str = PASS
    prechecks: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    inconclusive_cap: float = 0.2

    def add(self, relation: str, inputs: dict, lhs: Verdict, rhs: Verdict,
            rhs_decision: TangentDecision | None = None) -> Record:
        t = q = math.nan
        if rhs_decision is not None and rhs_decision.quotient_trace:
            t, q = rhs_decision.quotient_trace[-1]
        rec = Record(relation, inputs, lhs, rhs, outcome(lhs, rhs), t, q)
        self.records.append(rec)
        return rec

    def add_equality(self, relation: str, inputs: dict, a: Verdict, b: Verdict, dec=None):
        self.add(relation + " [⊂]", inputs, a, b, dec)
        self.add(relation + " [⊃]", inputs, b, a, dec)

    @property
    def counts(self) -> dict[str, int]:
        c = {CONFIRMED: 0, VACUOUS: 0, INCONCLUSIVE: 0, VIOLATION: 0}
        for r in self.records:
            c[r.outcome] += 1
        return c

    @property
    def inconclusive_rate(self) -> float:
        return self.counts[INCONCLUSIVE] / len(self.records) if self.records else 0.0

    def finalize(self) -> "InclusionReport":
        """Settle the status from the records unless a premise already decided it."""
        if self.status in (NOT_APPLICABLE, PREMISE_FAILED):
            return self
        if self.counts[VIOLATION]:
            self.status = VIOLATION
        elif self.inconclusive_rate > self.inconclusive_cap:
            self.status = FAIL_INCONCLUSIVE
        else:
            self.status = PASS
        return self

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return _clean({
            "suite": self.suite, "theorem": self.theorem, "instance": self.instance_id,
            "status": self.status, "counts": self.counts,
            "inconclusive_rate": round(self.inconclusive_rate, 6),
            "prechecks": self.prechecks, "notes": self.notes,
            "records": [r.to_dict() for r in self.records],
        })

    def csv_rows(self) -> Iterable[list]:
        for i, r in enumerate(self.records):
            yield [self.suite, f"{self.instance_id}:{i}", repr(float(r.t)), repr(float(r.quotient)),
                   r.lhs.value, r.rhs.value, r.outcome]
        for name, pre in sorted(self.prechecks.items()):
            for radius, value in (pre.get("trace") or []) if isinstance(pre, dict) else []:
                yield [self.suite, f"{self.instance_id}:{name}", repr(float(radius)),
                       repr(float(value)) if value != "inf" else "inf", "", "", "PRECHECK"]

    def summary_line(self) -> str:
        c = self.counts
        return (f"{self.instance_id:<24} {self.suite:<15} {self.status:<16} "
                f"confirmed={c[CONFIRMED]} vacuous={c[VACUOUS]} "
                f"inconclusive={c[INCONCLUSIVE]} violations={c[VIOLATION]}")


def write_csv(reports: Iterable[InclusionReport], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for row in rep.csv_rows():
            w.writerow(row)


def dumps(reports: Iterable[InclusionReport], header: dict | None = None) -> str:
    """Deterministic JSON rendering (sorted keys, no timestamps)."""
    doc = {"header": _clean(header or {}), "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False) + "\n"

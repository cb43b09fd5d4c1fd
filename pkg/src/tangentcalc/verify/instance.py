"""Instance files: schema, loading, and the named-set library.

An instance is a YAML mapping::

    id: halfcone_halfplane
    suites: [product, preimage]
    sets:
      D: {kind: named, name: halfcone, at: [0, 0]}
      E: {kind: polyhedron, A: [[1]], b: [0], at: [0]}
    functions:
      f: {expr: ["x - 2*y"], vars: [x, y]}
    params:
      preimage: {D: D, E: E, f: f, xbar: [0, 0]}

Set and map entries may carry an ``at`` reference point (a vector for sets,
``{x: ..., y: ...}`` for maps); these are checked at load time and feed the
identity and monotonicity suites.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from ..expr import ExpressionError, SmoothMap
from ..geometry import (FullSpace, FunctionGraph, Polyhedron, Product, Sequence1D, SequenceSet,
                        SetSpec, Singleton, SmoothLevelSet, Union, as_vector)
from ..setvalued import (ConstraintMap, GraphSet, Indicator, MapSpec, Perturbation,
                         RestrictedFunction, SumMap)
from ..tangent import LimitSchedule


class InstanceError(ValueError):
    """Schema or membership problem in an instance file (CLI exit code 2)."""


_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}
SUITE_NAMES = ("product", "preimage", "sum_rule", "optimality", "perturbation", "constraint_map",
               "zero_direction", "monotonicity")
STATUSES = ("PASS", "VIOLATION", "TOO-INCONCLUSIVE", "NOT-APPLICABLE", "PREMISE-FAILED")

_STRS = {"oneOf": [{"type": "string"}, {"type": "array", "items": {"type": "string"}}]}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["id"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string", "pattern": "^[A-Za-z0-9_\\-]+$"},
        "description": {"type": "string"},
        "suites": {"type": "array", "items": {"enum": list(SUITE_NAMES)}},
        "expect": {"type": "object", "propertyNames": {"enum": list(SUITE_NAMES)},
                   "additionalProperties": {"enum": list(STATUSES)}},
        "sets": {"type": "object", "additionalProperties": {"$ref": "#/$defs/set"}},
        "maps": {"type": "object", "additionalProperties": {"$ref": "#/$defs/map"}},
        "functions": {"type": "object", "additionalProperties": {"$ref": "#/$defs/function"}},
        "params": {"type": "object", "additionalProperties": {"type": "object"}},
        "schedule": {"$ref": "#/$defs/schedule"},
        "grid": {"type": "object", "properties": {"count": {"type": "integer", "minimum": 1}}},
    },
    "$defs": {
        "function": {
            "type": "object", "required": ["expr", "vars"],
            "properties": {"expr": _STRS, "vars": {"type": "array", "items": {"type": "string"}}},
        },
        "schedule": {
            "type": "object", "additionalProperties": False,
            "properties": {k: {"type": "number"} for k in
                           ("t0", "ratio", "steps", "eps_in", "eps_out", "phases")},
        },
        "sequence": {
            "type": "object", "required": ["expr"],
            "properties": {"expr": {"type": "string"}, "start": {"type": "integer"},
                           "limit": {"type": "number"}},
        },
        "set": {
            "type": "object", "required": ["kind"],
            "properties": {
                "kind": {"enum": ["full", "singleton", "polyhedron", "halfspace", "union",
                                  "product", "smooth", "curve", "sequence", "named"]},
                "at": _VEC,
            },
            "allOf": [
                {"if": {"properties": {"kind": {"const": "full"}}},
                 "then": {"required": ["dim"]}},
                {"if": {"properties": {"kind": {"const": "singleton"}}},
                 "then": {"required": ["point"], "properties": {"point": _VEC}}},
                {"if": {"properties": {"kind": {"const": "polyhedron"}}},
                 "then": {"required": ["A", "b"], "properties": {"A": _MAT, "b": _VEC}}},
                {"if": {"properties": {"kind": {"const": "halfspace"}}},
                 "then": {"required": ["normal"], "properties": {"normal": _VEC}}},
                {"if": {"properties": {"kind": {"const": "union"}}},
                 "then": {"required": ["pieces"],
                          "properties": {"pieces": {"type": "array", "minItems": 1,
                                                    "items": {"$ref": "#/$defs/set"}}}}},
                {"if": {"properties": {"kind": {"const": "product"}}},
                 "then": {"required": ["factors"],
                          "properties": {"factors": {"type": "array", "minItems": 2,
                                                     "items": {"$ref": "#/$defs/set"}}}}},
                {"if": {"properties": {"kind": {"const": "smooth"}}},
                 "then": {"required": ["g", "vars"]}},
                {"if": {"properties": {"kind": {"const": "curve"}}},
                 "then": {"required": ["phi"],
                          "properties": {"relation": {"enum": ["=", ">=", "<="]},
                                         "excluded": {"$ref": "#/$defs/sequence"}}}},
                {"if": {"properties": {"kind": {"const": "sequence"}}},
                 "then": {"required": ["expr"]}},
                {"if": {"properties": {"kind": {"const": "named"}}},
                 "then": {"required": ["name"]}},
            ],
        },
        "map": {
            "type": "object", "required": ["kind"],
            "properties": {
                "kind": {"enum": ["graph", "restricted", "indicator", "sum", "perturbation",
                                  "constraint", "named"]},
                "at": {"type": "object", "required": ["x", "y"],
                       "properties": {"x": _VEC, "y": _VEC}},
            },
            "allOf": [
                {"if": {"properties": {"kind": {"const": "graph"}}},
                 "then": {"required": ["n", "set"]}},
                {"if": {"properties": {"kind": {"const": "restricted"}}},
                 "then": {"required": ["f"]}},
                {"if": {"properties": {"kind": {"const": "indicator"}}},
                 "then": {"required": ["M"]}},
                {"if": {"properties": {"kind": {"const": "sum"}}},
                 "then": {"required": ["F1", "F2"]}},
                {"if": {"properties": {"kind": {"const": "perturbation"}}},
                 "then": {"required": ["F", "K", "nx"]}},
                {"if": {"properties": {"kind": {"const": "constraint"}}},
                 "then": {"required": ["f", "D", "E", "n"]}},
                {"if": {"properties": {"kind": {"const": "named"}}},
                 "then": {"required": ["name"]}},
            ],
        },
    },
}


# ---------------------------------------------------------------- named library

def _harmonic():
    return Sequence1D("1/k")


NAMED_SETS = {
    "halfcone": lambda: Polyhedron([[1.0, -1.0], [-1.0, -1.0]], [0.0, 0.0]),
    "halfplane": lambda: Polyhedron([[1.0, 0.0]], [0.0]),
    "halfline": lambda: Polyhedron([[-1.0]], [0.0]),
    "orthant2": lambda: Polyhedron(-np.eye(2), np.zeros(2)),
    "reverse_cone": lambda: Union([Polyhedron([[1.0, -1.0]], [0.0]),
                                   Polyhedron([[-1.0, -1.0]], [0.0])]),
    "parabola": lambda: FunctionGraph("s^2"),
    "disk": lambda: SmoothLevelSet("x^2 + y^2 - 1", ["x", "y"]),
    "circle": lambda: SmoothLevelSet("x^2 + y^2 - 1", ["x", "y"], "="),
    "harmonic": lambda: SequenceSet(_harmonic()),
    "geometric4": lambda: SequenceSet(Sequence1D("4^(-k)")),
    "example31": lambda: FunctionGraph("s", excluded=_harmonic()),
}

NAMED_MAPS = {
    "example31": lambda: GraphSet(NAMED_SETS["example31"](), 1),
    "identity": lambda: RestrictedFunction(SmoothMap("x", ["x"])),
    "square": lambda: RestrictedFunction(SmoothMap("x^2", ["x"])),
    "epi_square": lambda: GraphSet(FunctionGraph("s^2", ">="), 1),
    "ray": lambda: GraphSet(Polyhedron([[1.0, -1.0]], [0.0]), 1),
    "zero": lambda: RestrictedFunction(SmoothMap("0", ["x"])),
    "harmonic_const": lambda: GraphSet(Product(FullSpace(1), SequenceSet(_harmonic())), 1),
    "geometric4_const": lambda: GraphSet(Product(FullSpace(1),
                                                 SequenceSet(Sequence1D("4^(-k)"))), 1),
}


def named_set(name: str) -> SetSpec:
    try:
        return NAMED_SETS[name]()
    except KeyError:
        raise InstanceError(f"unknown named set {name!r}; known: {sorted(NAMED_SETS)}") from None


def named_map(name: str) -> MapSpec:
    try:
        return NAMED_MAPS[name]()
    except KeyError:
        raise InstanceError(f"unknown named map {name!r}; known: {sorted(NAMED_MAPS)}") from None


# ---------------------------------------------------------------- builders

def build_function(d) -> SmoothMap:
    try:
        return SmoothMap(d["expr"], d["vars"])
    except (ExpressionError, KeyError, TypeError) as exc:
        raise InstanceError(f"bad function {d!r}: {exc}") from exc


def build_sequence(d) -> Sequence1D:
    return Sequence1D(d["expr"], d.get("start", 1), d.get("limit", 0.0))


def build_set(d, sets: dict | None = None) -> SetSpec:
    if isinstance(d, str):
        if sets and d in sets:
            return sets[d]
        return named_set(d)
    kind = d["kind"]
    try:
        if kind == "full":
            return FullSpace(int(d["dim"]))
        if kind == "singleton":
            return Singleton(d["point"])
        if kind == "polyhedron":
            return Polyhedron(d["A"], d["b"])
        if kind == "halfspace":
            return Polyhedron([d["normal"]], [d.get("offset", 0.0)])
        if kind == "union":
            return Union([build_set(p, sets) for p in d["pieces"]])
        if kind == "product":
            parts = [build_set(p, sets) for p in d["factors"]]
            out = parts[0]
            for p in parts[1:]:
                out = Product(out, p)
            return out
        if kind == "smooth":
            return SmoothLevelSet(d["g"], d["vars"], d.get("relation", "<="))
        if kind == "curve":
            exc = build_sequence(d["excluded"]) if "excluded" in d else None
            return FunctionGraph(d["phi"], d.get("relation", "="), exc, d.get("var", "s"))
        if kind == "sequence":
            return SequenceSet(build_sequence(d))
        if kind == "named":
            return named_set(d["name"])
    except InstanceError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise InstanceError(f"bad set {d!r}: {exc}") from exc
    raise InstanceError(f"unknown set kind {kind!r}")


def build_map(d, sets: dict, maps: dict, functions: dict) -> MapSpec:
    if isinstance(d, str):
        if d in maps:
            return maps[d]
        return named_map(d)
    fn = lambda v: functions[v] if isinstance(v, str) and v in functions else build_function(v)
    kind = d["kind"]
    try:
        if kind == "graph":
            return GraphSet(build_set(d["set"], sets), int(d["n"]))
        if kind == "restricted":
            f = fn(d["f"])
            return RestrictedFunction(f, build_set(d["M"], sets) if "M" in d else None)
        if kind == "indicator":
            return Indicator(build_set(d["M"], sets), int(d.get("m", 1)))
        if kind == "sum":
            f = fn(d["f"]) if "f" in d else None
            return SumMap(build_map(d["F1"], sets, maps, functions),
                          build_map(d["F2"], sets, maps, functions), f)
        if kind == "perturbation":
            return Perturbation(build_map(d["F"], sets, maps, functions),
                                build_map(d["K"], sets, maps, functions), int(d["nx"]))
        if kind == "constraint":
            return ConstraintMap(fn(d["f"]), build_set(d["D"], sets), build_set(d["E"], sets),
                                 int(d["n"]))
        if kind == "named":
            return named_map(d["name"])
    except InstanceError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise InstanceError(f"bad map {d!r}: {exc}") from exc
    raise InstanceError(f"unknown map kind {kind!r}")


# ---------------------------------------------------------------- Instance

@dataclass
class Instance:
    id: str
    description: str = ""
    suites: list[str] = field(default_factory=list)
    expect: dict[str, str] = field(default_factory=dict)
    sets: dict[str, SetSpec] = field(default_factory=dict)
    set_points: dict[str, np.ndarray] = field(default_factory=dict)
    maps: dict[str, MapSpec] = field(default_factory=dict)
    map_points: dict[str, tuple] = field(default_factory=dict)
    functions: dict[str, SmoothMap] = field(default_factory=dict)
    params: dict[str, dict] = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)
    grid_count: int = 16
    source: str = ""

    def sched(self, **overrides) -> LimitSchedule:
        base = dict(self.schedule)
        base.update({k: v for k, v in overrides.items() if v is not None})
        if "steps" in base:
            base["steps"] = int(base["steps"])
        if "phases" in base:
            base["phases"] = int(base["phases"])
        return LimitSchedule(**base)

    def sched2(self, **overrides) -> LimitSchedule:
        base = {k: v for k, v in self.schedule.items() if k in ("eps_in", "eps_out")}
        base.update({k: v for k, v in overrides.items() if v is not None and k != "steps"})
        return LimitSchedule.second_order(**base)

    def set(self, name) -> SetSpec:
        return build_set(name, self.sets)

    def map(self, name) -> MapSpec:
        return build_map(name, self.sets, self.maps, self.functions)

    def function(self, name) -> SmoothMap:
        if isinstance(name, str):
            if name not in self.functions:
                raise InstanceError(f"{self.id}: unknown function {name!r}")
            return self.functions[name]
        return build_function(name)

    def suite_params(self, suite: str) -> dict:
        if suite not in self.params:
            raise InstanceError(f"{self.id}: no parameters for suite {suite!r}")
        return self.params[suite]


def instance_from_dict(data: dict, source: str = "") -> Instance:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise InstanceError(f"{source or data.get('id', '?')}: schema error at "
                            f"'{path}': {exc.message}") from exc
    data = copy.deepcopy(data)
    inst = Instance(id=data["id"], description=data.get("description", ""),
                    suites=list(data.get("suites", [])), expect=dict(data.get("expect", {})),
                    params=dict(data.get("params", {})), schedule=dict(data.get("schedule", {})),
                    grid_count=int(data.get("grid", {}).get("count", 16)), source=source)
    for name, spec in data.get("functions", {}).items():
        inst.functions[name] = build_function(spec)
    for name, spec in data.get("sets", {}).items():
        S = build_set(spec, inst.sets)
        inst.sets[name] = S
        if "at" in spec:
            x = as_vector(spec["at"], S.dim)
            if S.distance(x).value > max(S.atol, 1e-9):
                raise InstanceError(f"{inst.id}: point {spec['at']} is not in set {name!r}")
            inst.set_points[name] = x
    for name, spec in data.get("maps", {}).items():
        F = build_map(spec, inst.sets, inst.maps, inst.functions)
        inst.maps[name] = F
        if "at" in spec:
            x, y = as_vector(spec["at"]["x"], F.n), as_vector(spec["at"]["y"], F.m)
            if not F.contains(x, y, atol=1e-9):
                raise InstanceError(f"{inst.id}: ({x.tolist()}, {y.tolist()}) is not in "
                                    f"the graph of map {name!r}")
            inst.map_points[name] = (x, y)
    try:
        inst.sched()
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"{inst.id}: bad schedule: {exc}") from exc
    return inst


def load_instance(path_or_id: str | Path) -> Instance:
    """Load an instance from a path, or by id from the shipped corpus."""
    p = Path(path_or_id)
    if not p.suffix and not p.exists():
        p = corpus_dir() / f"{path_or_id}.yaml"
    if not p.exists():
        raise InstanceError(f"no instance file {path_or_id!r}")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise InstanceError(f"{p}: YAML error: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceError(f"{p}: top level must be a mapping")
    return instance_from_dict(data, str(p))


def corpus_dir() -> Path:
    return Path(str(resources.files("tangentcalc.verify") / "corpus"))


def corpus_ids() -> list[str]:
    return sorted(p.stem for p in corpus_dir().glob("*.yaml"))

"""Command-line front end: ``python3 -m tangentcalc.verify <subcommand> ...``.

Exit codes: 0 when every requested suite meets its expectation, 1 on a
violation or unexpected status, 2 on invalid input (schema, expression,
schedule or reference-point errors), 3 when every suite was NOT-APPLICABLE
or PREMISE-FAILED.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .. import __version__
from ..expr import ExpressionError, SmoothMap
from ..geometry import FullSpace
from ..regularity import metric_regularity_modulus, subregularity_modulus
from ..setvalued import (GraphPointError, aubin_estimate, classify_differentiability, constraints_of,
                         level_set,
                         default_direction_grid, derivative2_membership, derivative_decisions,
                         dini2_membership, dini_membership)
from ..tangent import LimitSchedule, tangent_decisions
from .instance import InstanceError, build_set, corpus_ids, load_instance, named_map, named_set
from .report import NOT_APPLICABLE, PASS, PREMISE_FAILED, VIOLATION, _clean, dumps, write_csv
from .suites import SUITES, Options, run_suite

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_NA = 0, 1, 2, 3


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(s) for s in text.replace(";", ",").split(",") if s.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}") from None


def _add_schedule(p):
    g = p.add_argument_group("limit schedule")
    g.add_argument("--t0", type=float)
    g.add_argument("--ratio", type=float)
    g.add_argument("--steps", type=int)
    g.add_argument("--phases", type=int)
    g.add_argument("--eps-in", type=float, dest="eps_in")
    g.add_argument("--eps-out", type=float, dest="eps_out")


def _add_common(p):
    p.add_argument("--grid", type=int, help="direction grid density")
    p.add_argument("--seed", type=int, default=0, help="seed for low-discrepancy patterns")
    p.add_argument("--csv-dir", type=Path, help="directory for CSV traces")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true")


def _overrides(a) -> dict:
    return {k: getattr(a, k, None) for k in ("t0", "ratio", "steps", "phases", "eps_in", "eps_out")}


def _sched(a, second=False) -> LimitSchedule:
    kw = {k: v for k, v in _overrides(a).items() if v is not None}
    return LimitSchedule.second_order(**kw) if second else LimitSchedule(**kw)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tangentcalc",
                                 description="Tangent sets, derivatives of set-valued maps, "
                                             "regularity estimates and rule verification.")
    ap.add_argument("--version", action="version", version=f"tangentcalc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tangent", help="Bouligand/Ursescu membership of a direction")
    p.add_argument("--set", dest="set_name", required=True,
                   help="named set, or a set id of --instance")
    p.add_argument("--instance", help="instance file or corpus id providing the set")
    p.add_argument("--point", type=_vector, required=True)
    p.add_argument("--dir", type=_vector, required=True)
    p.add_argument("--x1", type=_vector, help="first-order direction (second-order test)")
    _add_schedule(p)
    _add_common(p)

    p = sub.add_parser("derivative", help="graphical derivative membership")
    p.add_argument("--map", dest="map_name", required=True)
    p.add_argument("--instance")
    p.add_argument("--x", type=_vector, required=True)
    p.add_argument("--y", type=_vector, required=True)
    p.add_argument("--u", type=_vector, required=True)
    p.add_argument("--v", type=_vector, required=True)
    p.add_argument("--x1", type=_vector)
    p.add_argument("--y1", type=_vector)
    _add_schedule(p)
    _add_common(p)

    p = sub.add_parser("regularity", help="subregularity / metric regularity / Aubin estimates")
    p.add_argument("--kind", choices=("subregularity", "metric", "aubin"), default="subregularity")
    p.add_argument("--function", help="comma-separated component expressions of g")
    p.add_argument("--vars", help="comma-separated variable names of g")
    p.add_argument("--constraint", help="named constraint set (default: whole space)")
    p.add_argument("--point", type=_vector)
    p.add_argument("--map", dest="map_name")
    p.add_argument("--instance")
    p.add_argument("--x", type=_vector)
    p.add_argument("--y", type=_vector)
    p.add_argument("--samples", type=int, default=64)
    _add_common(p)

    p = sub.add_parser("classify", help="proto/semi-differentiability of a map")
    p.add_argument("--map", dest="map_name", required=True)
    p.add_argument("--instance")
    p.add_argument("--x", type=_vector, required=True)
    p.add_argument("--y", type=_vector, required=True)
    _add_schedule(p)
    _add_common(p)

    p = sub.add_parser("verify", help="run rule-verification suites on one instance")
    p.add_argument("--instance", required=True, help="instance file or corpus id")
    p.add_argument("--suite", action="append", choices=SUITES,
                   help="suite to run (repeatable; default: the instance's list)")
    _add_schedule(p)
    _add_common(p)

    p = sub.add_parser("corpus", help="run the shipped corpus")
    p.add_argument("ids", nargs="*", help="corpus ids (default with --all: every instance)")
    p.add_argument("--all", action="store_true")
    p.add_argument("--list", action="store_true", help="list the corpus ids and exit")
    _add_schedule(p)
    _add_common(p)
    return ap


# ---------------------------------------------------------------- output

def _emit(a, text: str, doc) -> None:
    body = (json.dumps(_clean(doc), sort_keys=True, indent=1, ensure_ascii=False) + "\n"
            if a.format == "json" else text)
    if a.out:
        a.out.write_text(body)
    else:
        sys.stdout.write(body)


def _lookup_set(a):
    if a.instance:
        inst = load_instance(a.instance)
        return build_set(a.set_name, inst.sets)
    return named_set(a.set_name)


def _lookup_map(a):
    if a.instance:
        inst = load_instance(a.instance)
        return inst.map(a.map_name)
    return named_map(a.map_name)


def _trace_csv(a, name, trace, header=("t", "quotient")):
    if not a.csv_dir:
        return
    import csv
    a.csv_dir.mkdir(parents=True, exist_ok=True)
    with open(a.csv_dir / f"{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([repr(float(x)) for x in row] for row in trace)


# ---------------------------------------------------------------- commands

def cmd_tangent(a) -> int:
    S = _lookup_set(a)
    x1 = a.x1
    td = tangent_decisions(S, a.point, a.dir, _sched(a, x1 is not None), x1=x1)
    b, u = td["B"], td["U"]
    last = b.quotient_trace[-1][1] if b.quotient_trace else 0.0
    lines = [f"set={a.set_name} point={a.point.tolist()} dir={a.dir.tolist()}"
             + ("" if x1 is None else f" x1={x1.tolist()}"),
             f"Bouligand: {b.verdict}  (tail min {b.liminf_est:.6g})",
             f"Ursescu:   {u.verdict}  (tail max {u.limsup_est:.6g})"
             + ("  [oscillation certificate]" if u.oscillating else ""),
             f"final quotient: {last:.6g}"]
    _trace_csv(a, "tangent_trace", b.quotient_trace)
    _emit(a, "\n".join(lines) + "\n", {"B": b.to_dict(), "U": u.to_dict(),
                                       "trace": b.quotient_trace})
    return EXIT_OK


def cmd_derivative(a) -> int:
    F = _lookup_map(a)
    at = (a.x, a.y)
    if a.x1 is not None or a.y1 is not None:
        d = (a.x1 if a.x1 is not None else np.zeros(F.n),
             a.y1 if a.y1 is not None else np.zeros(F.m))
        s2 = _sched(a, True)
        res = {fl: derivative2_membership(F, at, d, a.u, a.v, fl, s2) for fl in ("B", "U")}
        res["D"] = dini2_membership(F, at, d, a.u, a.v, s2)
    else:
        res = derivative_decisions(F, at, a.u, a.v, _sched(a))
        res["D"] = dini_membership(F, at, a.u, a.v, _sched(a))
    names = {"B": "Bouligand", "U": "Ursescu", "D": "Dini"}
    lines = [f"map={a.map_name} at=({a.x.tolist()}, {a.y.tolist()}) "
             f"u={a.u.tolist()} v={a.v.tolist()}"]
    lines += [f"{names[k]:<10} {res[k].verdict}" for k in ("B", "U", "D")]
    _trace_csv(a, "derivative_trace", res["B"].quotient_trace)
    _emit(a, "\n".join(lines) + "\n", {k: v.to_dict() for k, v in res.items()})
    return EXIT_OK


def cmd_regularity(a) -> int:
    if a.kind == "subregularity":
        if not (a.function and a.vars and a.point is not None):
            raise InstanceError("subregularity needs --function, --vars and --point")
        g = SmoothMap(a.function.split(","), a.vars.split(","))
        C = named_set(a.constraint) if a.constraint else FullSpace(g.n)
        cons = constraints_of(C, g.symbols)
        if cons is None:
            raise InstanceError(f"constraint {a.constraint!r} has no closed-form description")
        target = g(a.point)
        sol = level_set(cons + [(e - float(c), "=") for e, c in zip(g.exprs, target)], g.symbols)
        est = subregularity_modulus(g, a.point, C, samples=a.samples, solution_set=sol,
                                    seed=a.seed)
    else:
        if not (a.map_name and a.x is not None and a.y is not None):
            raise InstanceError(f"{a.kind} needs --map, --x and --y")
        F = _lookup_map(a)
        fn = metric_regularity_modulus if a.kind == "metric" else aubin_estimate
        est = fn(F, (a.x, a.y), samples=a.samples, seed=a.seed)
    mod = est.modulus_est
    text = f"{a.kind} modulus: {mod if isinstance(mod, str) else f'{mod:.6g}'}\n"
    text += "".join(f"  r={r:.4g}  {v:.6g}\n" for r, v in est.modulus_trace)
    _trace_csv(a, f"{a.kind}_trace", est.modulus_trace, ("radius", "modulus"))
    _emit(a, text, est.to_dict())
    return EXIT_OK


def cmd_classify(a) -> int:
    F = _lookup_map(a)
    grid = default_direction_grid(F.n, F.m, a.grid or 16)
    cls = classify_differentiability(F, (a.x, a.y), grid, _sched(a))
    text = f"proto: {cls.proto}\nsemi:  {cls.semi}\n"
    if cls.witness is not None:
        text += f"witness: u={np.asarray(cls.witness[0]).tolist()} " \
                f"v={np.asarray(cls.witness[1]).tolist()}\n"
    _emit(a, text, cls.to_dict())
    return EXIT_OK


def _run_instances(a, ids, suites_override=None) -> int:
    reports, verdicts = [], []
    t_start = time.perf_counter()
    for iid in ids:
        inst = load_instance(iid)
        opts = Options(count=a.grid or inst.grid_count, seed=a.seed,
                       sched=inst.sched(**_overrides(a)), sched2=inst.sched2(**_overrides(a)))
        for suite in suites_override or inst.suites:
            rep = run_suite(inst, suite, opts)
            expected = inst.expect.get(suite, PASS)
            reports.append(rep)
            verdicts.append((rep.status, expected))
            logging.getLogger(__name__).info("%s", rep.summary_line())
    elapsed = time.perf_counter() - t_start
    header = {"tool": f"tangentcalc {__version__}", "instances": list(ids), "seed": a.seed,
              "schedule_overrides": {k: v for k, v in _overrides(a).items() if v is not None}}
    if a.csv_dir:
        a.csv_dir.mkdir(parents=True, exist_ok=True)
        name = ids[0] if len(ids) == 1 else "corpus"
        with open(a.csv_dir / f"{name}.csv", "w", newline="") as fh:
            write_csv(reports, fh)
    lines = []
    for rep, (status, expected) in zip(reports, verdicts):
        mark = "" if status == expected else f"   (expected {expected})"
        lines.append(rep.summary_line() + mark)
        for name, pre in sorted(rep.prechecks.items()):
            if isinstance(pre, dict) and "modulus_est" in pre:
                mu = pre["modulus_est"]
                lines.append(f"    {name}: mu_hat = {mu if isinstance(mu, str) else f'{mu:.4g}'}"
                             + (f" [{'; '.join(pre['flags'])}]" if pre.get("flags") else ""))
            elif isinstance(pre, dict):
                lines.append(f"    {name}: " + ", ".join(f"{k}={v}" for k, v in sorted(pre.items())
                                                         if k != "witness" or v))
        lines += [f"    note: {n}" for n in rep.notes]
    lines.append(f"{len(reports)} suite run(s) in {elapsed:.1f}s")
    if a.format == "json":
        body = dumps(reports, header)
        if a.out:
            a.out.write_text(body)
        else:
            sys.stdout.write(body)
    else:
        _emit(a, "\n".join(lines) + "\n", None)
    if any(s == VIOLATION for s, _ in verdicts) or any(s != e for s, e in verdicts):
        return EXIT_FAIL
    if verdicts and all(s in (NOT_APPLICABLE, PREMISE_FAILED) for s, _ in verdicts):
        return EXIT_NA
    return EXIT_OK


def cmd_verify(a) -> int:
    return _run_instances(a, [a.instance], a.suite)


def cmd_corpus(a) -> int:
    if a.list:
        sys.stdout.write("\n".join(corpus_ids()) + "\n")
        return EXIT_OK
    ids = a.ids or (corpus_ids() if a.all else [])
    if not ids:
        raise InstanceError("give corpus ids or --all")
    return _run_instances(a, ids)


COMMANDS = {"tangent": cmd_tangent, "derivative": cmd_derivative, "regularity": cmd_regularity,
            "classify": cmd_classify, "verify": cmd_verify, "corpus": cmd_corpus}


def run_cli(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except (InstanceError, ExpressionError, GraphPointError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_SCHEMA


def main() -> None:
    sys.exit(run_cli())

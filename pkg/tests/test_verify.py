import json

import numpy as np
import pytest
import yaml

from tangentcalc.tangent import IN, INCONCLUSIVE, OUT
from tangentcalc.verify import (InclusionReport, InstanceError, Options, corpus_ids, load_instance,
                                run_suite)
from tangentcalc.verify.cli import run_cli
from tangentcalc.verify.report import (CONFIRMED, FAIL_INCONCLUSIVE, NOT_APPLICABLE, PASS,
                                       VACUOUS, VIOLATION, dumps, outcome)


@pytest.mark.parametrize("lhs, rhs, expected", [
    (OUT, IN, VACUOUS), (OUT, OUT, VACUOUS), (IN, IN, CONFIRMED), (IN, OUT, VIOLATION),
    (IN, INCONCLUSIVE, "INCONCLUSIVE"), (INCONCLUSIVE, IN, "INCONCLUSIVE"),
])
def test_outcome_table(lhs, rhs, expected):
    assert outcome(lhs, rhs) == expected


def test_report_status():
    r = InclusionReport("s", "t", "i")
    r.add("a", {}, IN, IN)
    assert r.finalize().status == PASS
    r.add("a", {}, INCONCLUSIVE, IN)
    assert r.finalize().status == FAIL_INCONCLUSIVE
    r.add("a", {}, IN, OUT)
    assert r.finalize().status == VIOLATION
    na = InclusionReport("s", "t", "i", status=NOT_APPLICABLE)
    na.add("a", {}, IN, OUT)
    assert na.finalize().status == NOT_APPLICABLE


def test_corpus_loads():
    ids = corpus_ids()
    assert len(ids) >= 12 and "example31" in ids
    for iid in ids:
        assert load_instance(iid).suites


def _write(tmp_path, data):
    p = tmp_path / "inst.yaml"
    p.write_text(yaml.safe_dump(data))
    return str(p)


def test_schema_errors(tmp_path):
    with pytest.raises(InstanceError):
        load_instance(_write(tmp_path, {"id": "x", "suites": ["nonsense"]}))
    with pytest.raises(InstanceError):
        load_instance(_write(tmp_path, {"id": "x", "sets": {"D": {"kind": "named", "name": "halfline",
                                                                 "at": [-1]}}}))
    with pytest.raises(InstanceError):
        load_instance("no_such_instance")


def test_suite_is_deterministic():
    inst = load_instance("halflines")
    a = run_suite(inst, "product", Options(seed=3))
    b = run_suite(inst, "product", Options(seed=3))
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]
    assert a.status == PASS
    json.loads(dumps([a]))


def test_example31_sum_rule_prechecks():
    rep = run_suite(load_instance("example31"), "sum_rule")
    assert rep.status == PASS
    assert rep.prechecks["proto_F1"]["proto"] == "YES"


def test_cli_tangent_json(capsys):
    assert run_cli(["tangent", "--set", "halfcone", "--point", "0,0", "--dir", "1,0",
                    "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["B"]["verdict"] == "OUT"
    assert out["B"]["liminf"] == pytest.approx(0.7071067811865476)


def test_cli_exit_codes(tmp_path, capsys):
    assert run_cli(["verify", "--instance", "halflines", "--suite", "product"]) == 0
    assert run_cli(["verify", "--instance", "optimality_nonmin"]) == 3
    bad = _write(tmp_path, {"id": "x", "suites": ["nonsense"]})
    assert run_cli(["verify", "--instance", bad]) == 2
    assert run_cli(["tangent", "--set", "halfcone", "--point", "0,0", "--dir", "1,0",
                    "--eps-in", "1", "--eps-out", "0.5"]) == 2
    assert run_cli(["derivative", "--map", "square", "--x", "1", "--y", "5",
                    "--u", "1", "--v", "2"]) == 2


def test_cli_violation_exit_code(tmp_path, capsys):
    # an expectation that cannot be met is reported with exit code 1
    data = yaml.safe_load(open(load_instance("halflines").source))
    data["expect"] = {"product": VIOLATION}
    assert run_cli(["verify", "--instance", _write(tmp_path, data), "--suite", "product"]) == 1


def test_cli_csv_and_out(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run_cli(["verify", "--instance", "identity_preimage", "--suite", "preimage",
                    "--format", "json", "--out", str(out), "--csv-dir", str(tmp_path)]) == 0
    assert json.loads(out.read_text())
    assert list(tmp_path.glob("*.csv"))


def test_cli_regularity_and_classify(capsys):
    assert run_cli(["regularity", "--function", "x^2", "--vars", "x", "--point", "0"]) == 0
    assert "DIVERGENT" in capsys.readouterr().out
    assert run_cli(["classify", "--map", "example31", "--x", "0", "--y", "0"]) == 0
    text = capsys.readouterr().out
    assert "YES" in text and "NO" in text


def test_cli_bad_expression(capsys):
    assert run_cli(["regularity", "--function", "x^^2", "--vars", "x", "--point", "0"]) == 2

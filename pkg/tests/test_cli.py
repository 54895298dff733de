import csv
import io
import json
import subprocess
import sys

import pytest

from markov_recurrence import cli
from markov_recurrence.cli import RunConfig, main, parse_selectors, resolve_sets, run
from markov_recurrence.chain import StateSpace
from markov_recurrence.errors import FamilyTooLarge, ParseError
from markov_recurrence.specfile import bundled_path

EXM = str(bundled_path("exM"))
IDENTITY = str(bundled_path("identity"))


def invoke(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_verify_theorem1_on_exm(capsys):
    code, out, _ = invoke(capsys, "verify", "--input", EXM, "--theorem", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and doc["command"] == "verify" and doc["input"] == "exM"
    check, = doc["results"]["checks"]
    assert check["holds"] and check["details"]["E_MAIN_ALL_A"] is False and check["details"]["PRP"] is False


def test_verify_all_theorems(capsys):
    code, out, _ = invoke(capsys, "verify", "--input", str(bundled_path("ex2")))
    doc = json.loads(out)
    assert code == 0 and doc["results"]["all_passed"]
    roles = {(c["theorem"], c["property"]): c["role"] for c in doc["results"]["checks"]}
    assert roles[("4", "THEOREM4A")] == "check" and roles[("4", "PRP")] == "evaluation"


def test_identity_all_subsets_recurrent(capsys):
    code, out, _ = invoke(capsys, "analyze", "--input", IDENTITY, "--sets", "ALL_SUBSETS")
    assert code == 0
    sets = json.loads(out)["results"]["sets"]
    assert len(sets) == 7
    for rec in sets:
        assert rec["recurrence"]["recurrent"] == rec["set"]
        assert all(s.get("diverges") for s in rec["series"])


def test_analyze_exm_csv(capsys):
    code, out, _ = invoke(capsys, "analyze", "--input", EXM, "--sets", "s0;s1,s2", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["set"] for r in rows] == ["s0", "s1 s2"]
    assert rows[0]["recurrent"] == "" and rows[0]["nonrecurrent"] == "s0"
    assert rows[0]["main_diverges"] == "false"


def test_analyze_schedule_reports_start_times(capsys):
    code, out, _ = invoke(capsys, "analyze", "--input", str(bundled_path("diag")), "--sets", "x0")
    rec, = json.loads(out)["results"]["sets"]
    assert code == 0 and set(rec["recurrent_by_start"]) == {"0", "1", "2"}
    assert all(v == [] for v in rec["recurrent_by_start"].values())


def test_witness_is_confirmed_by_analyze(capsys):
    _, out, _ = invoke(capsys, "verify", "--input", EXM, "--theorem", "1")
    witness = json.loads(out)["results"]["checks"][0]["details"]["PRP_witness"]
    _, out, _ = invoke(capsys, "analyze", "--input", EXM, "--sets", ",".join(witness))
    rec, = json.loads(out)["results"]["sets"]
    assert rec["recurrence"]["m_nonrecurrent"] > 0


def test_gallery_output(capsys):
    code, out, _ = invoke(capsys, "gallery")
    rows = {r["example"]: r for r in csv.DictReader(io.StringIO(out))}
    assert code == 0
    assert set(rows) == {"ex0", "exM", "ex1", "ex2", "ex5", "ex6", "diag"}
    assert rows["ex1"]["status"] == "DISCREPANCY-DOCUMENTED"
    assert all(r["status"] != "FAIL" for r in rows.values())


def test_gallery_failure_exits_one(capsys, monkeypatch):
    from markov_recurrence.gallery import FAIL, GalleryEntry
    monkeypatch.setattr(cli, "run_gallery", lambda names: [GalleryEntry("ex0", FAIL, (), "forced")])
    code, _, _ = invoke(capsys, "gallery")
    assert code == 1


def test_failed_check_exits_one(capsys, monkeypatch):
    from markov_recurrence.recurrence import Property, PropertyVerdict
    from markov_recurrence.sets import SupportSet
    monkeypatch.setattr(cli, "verify_theorem1",
                        lambda q, m: PropertyVerdict(Property.THEOREM1, False, SupportSet(q.n, 1)))
    code, out, _ = invoke(capsys, "verify", "--input", EXM, "--theorem", "1")
    assert code == 1
    assert json.loads(out)["results"]["all_passed"] is False


@pytest.mark.parametrize("argv", [
    ["analyze", "--input", EXM, "--format", "json"],
    ["simulate", "--input", EXM, "--seed", "5", "--trials", "500", "--steps", "1,3"],
    ["multirec", "--input", EXM, "--k", "2,3"],
    ["discretize", "--input", str(bundled_path("ex6")), "--refine", "10,20"],
])
def test_byte_stable_output(capsys, argv):
    _, first, _ = invoke(capsys, *argv)
    _, second, _ = invoke(capsys, *argv)
    assert first == second and first.endswith("\n")


def test_simulate_csv_columns(capsys):
    code, out, _ = invoke(capsys, "simulate", "--input", str(bundled_path("ex2")), "--sets", "0",
                          "--trials", "1000")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 4
    assert list(rows[0]) == ["x", "set", "t", "trials", "point", "lo", "hi", "exact", "covered"]
    assert float(rows[0]["exact"]) == pytest.approx(0.25)


def test_discretize_ex6(capsys):
    code, out, _ = invoke(capsys, "discretize", "--input", str(bundled_path("ex6")))
    res = json.loads(out)["results"]
    assert code == 0 and res["unknown_strictly_decreasing"]
    assert [lv["n_cells"] for lv in res["levels"]] == [10, 100, 1000]


def test_multirec_exm(capsys):
    _, out, _ = invoke(capsys, "multirec", "--input", EXM, "--sets", "s2", "--k", "4")
    row, = json.loads(out)["results"]["results"]
    assert row["n"] == 1 and row["exhaustive"]


def test_generator_gamma_flag(capsys):
    code, out, _ = invoke(capsys, "analyze", "--input", str(bundled_path("gen2")), "--gamma", "0.1")
    assert code == 0 and json.loads(out)["results"]["topological_recurrent"] == ["s0", "s1"]


@pytest.mark.parametrize("argv", [
    ["analyze", "--input", "/nonexistent.yaml"],
    ["analyze", "--input", EXM, "--sets", "s9"],
    ["analyze", "--input", EXM, "--gamma", "1"],
    ["discretize", "--input", EXM],
    ["analyze", "--input", str(bundled_path("ex6"))],
    ["verify", "--input", str(bundled_path("diag"))],
])
def test_input_errors_exit_two(capsys, argv):
    code, out, err = invoke(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("error:")


def test_bad_yaml_exits_two(capsys, tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("states: 2\nmatrix:\n  - [0.5, 0.5]\n  - [0.9, 0.9]\n")
    code, _, err = invoke(capsys, "analyze", "--input", str(p))
    assert code == 2 and "line 4" in err


def test_family_too_large(capsys, tmp_path):
    p = tmp_path / "big.yaml"
    p.write_text("states: 21\nmap: [" + ", ".join(str(i) for i in range(21)) + "]\n")
    code, _, err = invoke(capsys, "analyze", "--input", str(p), "--sets", "ALL_SUBSETS")
    assert code == 2 and "ALL_SUBSETS" in err
    with pytest.raises(FamilyTooLarge):
        resolve_sets(StateSpace(21), ["ALL_SUBSETS"])
    code, out, _ = invoke(capsys, "verify", "--input", str(p), "--theorem", "1")
    assert code == 2


def test_selectors():
    assert parse_selectors("s0;s1, s2;ALL_SUBSETS;") == [["s0"], ["s1", "s2"], "ALL_SUBSETS"]
    sets = resolve_sets(StateSpace(3, ("a", "b", "c")), [["a", "c"], "SINGLETONS", ["c", "a"]])
    assert [s.bits for s in sets] == [5, 1, 2, 4]
    with pytest.raises(ParseError):
        resolve_sets(StateSpace(3), [["7"]])


def test_run_config_defaults():
    assert RunConfig("gallery").output_format == "csv"
    assert RunConfig("analyze").output_format == "json"
    with pytest.raises(ValueError):
        RunConfig("explode")


def test_run_writes_to_given_streams():
    out, err = io.StringIO(), io.StringIO()
    assert run(RunConfig("analyze", input_path=EXM), out, err) == 0
    assert json.loads(out.getvalue())["input"] == "exM" and err.getvalue() == ""


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "markov_recurrence", "verify", "--input", EXM,
                           "--theorem", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "verify"

import csv
import json
import subprocess
import sys

import pytest

from dispbound.cli import run


def strip_ts(text):
    doc = json.loads(text)
    doc["meta"].pop("timestamp")
    return doc


def out_of(capsys, argv):
    code = run(argv)
    return code, capsys.readouterr()


def test_relations_json(capsys):
    code, out = out_of(capsys, ["--threads", "1", "relations", "--n", "2", "--k", "2", "--paper-check"])
    assert code == 0
    doc = json.loads(out.out)
    assert doc["result"]["total"] == 48 and len(doc["result"]["relations"]) == 48
    assert doc["result"]["paper_check"]["diffs"] == 0
    meta = doc["meta"]
    assert meta["tool"] == "dispbound" and meta["version"] and meta["config"]["k"] == 2
    assert "timestamp" in meta


def test_relations_csv(capsys, tmp_path):
    path = tmp_path / "rel.csv"
    assert run(["relations", "--k", "2", "--emit", str(path)]) == 0
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 48 and set(rows[0]) == {"gamma", "s", "S", "j"}


def test_verify_message(capsys):
    code, out = out_of(capsys, ["--threads", "1", "verify", "--n", "2", "--k", "2"])
    assert code == 0
    assert out.out.strip() == "alpha=33, x*=uniform, gap<1e-6"


def test_verify_emits_json(tmp_path, capsys):
    path = tmp_path / "v.json"
    assert run(["verify", "--k", "2", "--paper-check", "--emit", str(path)]) == 0
    assert json.loads(path.read_text())["result"]["ok"]


def test_family_point_file(tmp_path, capsys):
    pt = tmp_path / "x.json"
    pt.write_text(json.dumps([1.0] * 12))
    code, out = out_of(capsys, ["family", "--point", str(pt), "--which", "F"])
    assert code == 0
    doc = json.loads(out.out)
    assert doc["result"]["F"]["value"] == pytest.approx(33)
    assert len(doc["result"]["members"]) == 12


@pytest.mark.parametrize("argv", [
    ["relations", "--n", "1"],
    ["relations", "--k", "1"],
    ["family", "--point", "missing.json"],
    ["minimize", "--restarts", "0"],
    ["convexity", "--region", "cf", "--samples", "0"],
    ["hyperbolic-test", "--margin-factor", "0"],
    ["conjecture", "--restarts", "3"],
    ["nonsense"],
    ["--threads", "0", "relations"],
    ["minimize", "--format", "csv"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_bad_point_is_usage_error(tmp_path, capsys):
    pt = tmp_path / "x.json"
    pt.write_text(json.dumps([1.0, -1.0] + [1.0] * 10))
    assert run(["family", "--point", str(pt)]) == 2


def test_failure_exit_code(capsys):
    # an impossible tolerance turns the check into a failure
    assert run(["--threads", "1", "verify", "--k", "2", "--tol", "1e-30"]) == 1


def test_conjecture(tmp_path, capsys):
    path = tmp_path / "c.json"
    assert run(["--threads", "1", "conjecture", "--n", "3", "--k", "2", "--emit", str(path)]) == 0
    res = json.loads(path.read_text())["result"]
    assert res["status"] == "conjecture-supported"
    assert res["alpha_star"] == pytest.approx(145, rel=1e-6)


def test_hyperbolic_csv(tmp_path, capsys):
    path = tmp_path / "margins.csv"
    assert run(["hyperbolic-test", "--k", "2", "--trials", "3", "--seed", "7", "--emit", str(path)]) == 0
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["seed", "z0", "D", "bound", "margin", "argmax_word"]
    assert len(rows) == 30 and all(float(r["margin"]) >= 0 for r in rows)


@pytest.mark.parametrize("argv", [
    ["minimize", "--k", "2", "--restarts", "3"],
    ["convexity", "--region", "cg", "--samples", "200", "--seed", "3"],
    ["hyperbolic-test", "--trials", "2", "--base-points", "2"],
])
def test_json_is_deterministic(argv, capsys):
    run(["--threads", "1"] + argv)
    first = capsys.readouterr().out
    run(["--threads", "1"] + argv)
    second = capsys.readouterr().out
    assert strip_ts(first) == strip_ts(second)
    # byte-identical once the timestamp value is blanked
    assert first.replace(json.loads(first)["meta"]["timestamp"], "") == second.replace(
        json.loads(second)["meta"]["timestamp"], "")


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "dispbound.cli", "relations", "--n", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "--n must be" in proc.stderr

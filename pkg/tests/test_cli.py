import json
import os
import subprocess
import sys

import pytest

from fraisse.cli import run

A = {"points": ["x", "y"], "dist": [["0", "1"], ["1", "0"]]}
B = {"points": ["u", "v"], "dist": [["0", "2"], ["2", "0"]]}
PHI = {"source": A, "target": B, "values": [["1/2", "2"], ["3/2", "1"]]}


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def _cli(*args, hashseed="0"):
    env = dict(os.environ, PYTHONHASHSEED=hashseed)
    return subprocess.run([sys.executable, "-m", "fraisse", *args], capture_output=True, env=env, timeout=600)


@pytest.mark.parametrize("args", [
    ["uhf", "nap", "--eps", "1/10", "--seed", "4"],
    ["cat", "chain", "--steps", "4", "--seed", "2"],
    ["matrix", "verify-lemma", "--m", "2", "--n", "2", "--trials", "10", "--seed", "1"],
])
def test_runs_are_byte_identical(args):
    first, second = _cli(*args, hashseed="1"), _cli(*args, hashseed="2")
    assert first.returncode == 0
    assert first.stdout == second.stdout


def test_global_flags_before_or_after(capsys):
    assert run(["--seed", "3", "uhf", "nap", "--eps", "1/4"]) == 0
    before = capsys.readouterr().out
    assert run(["uhf", "nap", "--eps", "1/4", "--seed", "3"]) == 0
    assert capsys.readouterr().out == before


def test_nap_output_round_trips_through_check_trace(tmp_path, capsys):
    out = str(tmp_path / "nap.json")
    assert run(["uhf", "nap", "--eps", "1/10", "--seed", "7", "--out", out]) == 0
    assert run(["uhf", "check-trace", out]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["all_trace_preserving"] and len(rep["morphisms"]) == 4


def test_apx_commands(tmp_path, capsys):
    f = _write(tmp_path, "phi.json", PHI)
    assert run(["apx", "validate", f]) == 0
    assert run(["apx", "totality", f]) == 0
    assert run(["apx", "amalgamate", f]) == 0
    capsys.readouterr()
    assert run(["apx", "strictify", f, f]) == 2


def test_malformed_json_exit_1(tmp_path, capsys):
    f = _write(tmp_path, "bad.json", "{nope")
    assert run(["apx", "validate", f]) == 1
    assert "line 1" in capsys.readouterr().err


def test_schema_error_exit_1(tmp_path, capsys):
    f = _write(tmp_path, "bad.json", {"source": A, "target": B, "values": [[0.5, "2"], ["3/2", "1"]]})
    assert run(["apx", "validate", f]) == 1
    assert "values[0][0]" in capsys.readouterr().err


def test_middle_space_mismatch_names_both(tmp_path, capsys):
    f = _write(tmp_path, "phi.json", PHI)
    assert run(["apx", "compose", f, f]) == 1
    err = capsys.readouterr().err
    assert "points u, v" in err and "points x, y" in err


def test_katetov_failure_exit_2(tmp_path):
    bad = dict(PHI, values=[["1/2", "3"], ["3/2", "1"]])
    assert run(["apx", "validate", _write(tmp_path, "phi.json", bad)]) == 2


def test_budget_exhaustion_exit_3(capsys):
    assert run(["uhf", "nap", "--eps", "1/10", "--seed", "3", "--budget", "2"]) == 3
    assert json.loads(capsys.readouterr().out)["resource_exhausted"]


def test_uhf_limit_check_exit_codes():
    assert run(["uhf", "limit-check", "--format", "summary"]) == 0
    assert run(["uhf", "limit-check", "--chain", "identity", "--length", "4"]) == 2


def test_hilbert_and_hall(tmp_path, capsys):
    assert run(["uhf", "hilbert", "--level", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["checks_pass"]
    half = {"breaks": ["0", "1"], "affine": [["1/2", "0"]]}
    top = {"breaks": ["0", "1"], "affine": [["1/2", "1/2"]]}
    f = _write(tmp_path, "h.json", {"t1": [half, top], "t2": [top, half], "delta": "3/4"})
    assert run(["uhf", "hall-match", f]) == 0
    assert json.loads(capsys.readouterr().out)["sigma"] == [1, 0]


def test_out_file_and_summary(tmp_path):
    out = tmp_path / "r.txt"
    assert run(["matrix", "verify-lemma", "--m", "2", "--n", "2", "--trials", "5",
                "--format", "summary", "--out", str(out)]) == 0
    assert "failures: 0" in out.read_text()

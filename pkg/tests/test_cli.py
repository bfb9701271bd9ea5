import csv
import json
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from liectrl import __version__, cli
from liectrl.catalog import SO3_1, SO3_2, SO3_3, rank_deficient_r2, so3
from liectrl.checker import ControlSystem
from liectrl.simulator import GroupRealization, MatrixFactor
from liectrl.specfile import to_document, write_spec

FIXTURE_DIR = resources.files("liectrl") / "fixtures"
REPORT_KEYS = {"command", "input_digest", "parameters", "results", "tolerances", "version"}


def spec(name):
    return str(FIXTURE_DIR / f"{name}.json")


@pytest.mark.parametrize(
    "name, code, conclusion",
    [
        ("rolling_sphere", 0, "Controllable"),
        ("sl2_ex_ii", 0, "Controllable"),
        ("classical_r2_rotation", 0, "Controllable"),
        ("sl2_ex_i", 2, "SufficientConditionFails"),
    ],
)
def test_check_exit_codes(name, code, conclusion):
    report, got = cli.run(["check", spec(name)])
    assert got == code
    assert report["results"]["conclusion"] == conclusion
    assert set(report) == REPORT_KEYS
    assert report["version"] == __version__
    assert len(report["input_digest"]) == 64


def test_check_inconclusive_without_fsc(tmp_path):
    doc = json.loads((FIXTURE_DIR / "sl2_ex_ii.json").read_text())
    doc["group"]["declarations"] = []
    p = tmp_path / "bare.json"
    write_spec(p, doc)
    report, code = cli.run(["check", str(p)])
    assert code == 3 and report["results"]["conclusion"] == "Inconclusive"


@pytest.mark.parametrize("name", ["rolling_sphere", "sl2_ex_i", "product_homogeneous", "heisenberg_solvable"])
def test_validate(name):
    report, code = cli.run(["validate", spec(name)])
    assert code == 0 and report["results"]["passed"]
    assert report["results"]["jacobi_residual"] <= 1e-12


def test_tolerances_echoed():
    report, _ = cli.run(["check", spec("sl2_ex_ii"), "--tol-spec", "1e-7"])
    assert report["tolerances"]["tol_spec"] == 1e-7
    assert set(report["tolerances"]) == {"tol_alg", "tol_spec", "tol_rank", "dt"}


def test_decompose_zero_derivation(tmp_path):
    a = so3()
    sys_ = ControlSystem(a, np.zeros((3, 3)), np.eye(3), name="so3_driftless")
    r = GroupRealization(a, [MatrixFactor(np.array([SO3_1, SO3_2, SO3_3]), ("orthogonal", "unit_det"), "SO(3)")],
                         np.zeros((3, 3)), ["trivial"])
    p = tmp_path / "so3.json"
    write_spec(p, to_document(sys_, r))
    report, code = cli.run(["decompose", str(p)])
    res = report["results"]
    assert code == 0
    assert res["dims"] == {"g_plus": 0, "g_minus": 0, "g_zero": 3, "g_kernel": 3}
    assert res["spectrum"] == [{"re": 0.0, "im": 0.0, "multiplicity": 3}]
    assert res["g0_structure"]["classification"] == "compact"


def test_decompose_ex_i():
    res = cli.run(["decompose", spec("sl2_ex_i")])[0]["results"]
    assert res["dims"] == {"g_plus": 1, "g_minus": 1, "g_zero": 1, "g_kernel": 1}
    assert res["grading_residual"] == 0.0


def test_parse_error_report(tmp_path):
    doc = json.loads((FIXTURE_DIR / "sl2_ex_ii.json").read_text())
    doc["algebra"]["structure"][1] = [2, 0, 2, 2.0]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    report, code = cli.run(["check", str(p)])
    assert code == 1
    assert report["results"]["error"]["path"] == "$.algebra.structure[1]"
    assert report["input_digest"] is not None


def test_validation_error_report(tmp_path):
    doc = json.loads((FIXTURE_DIR / "sl2_ex_ii.json").read_text())
    doc["algebra"]["structure"][0][3] = -3.0
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    report, code = cli.run(["validate", str(p)])
    assert code == 1
    assert report["results"]["error"]["residuals"]["jacobi"] == pytest.approx(1.0)


def test_missing_file():
    report, code = cli.run(["check", "/nonexistent/spec.json"])
    assert code == 1 and report["input_digest"] is None
    assert "error" in report["results"]


def test_simulate_csv(tmp_path):
    out = tmp_path / "traj.csv"
    control = json.dumps([[0.5, [1.0]], [0.5, [-1.0]]])
    report, code = cli.run(["simulate", spec("sl2_ex_ii"), "--control", control, "--stride", "100",
                            "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["time", "f0_m00", "f0_m01", "f0_m10", "f0_m11"]
    assert len(rows) == 1 + report["results"]["samples"] == 1 + 11
    assert float(rows[-1][0]) == pytest.approx(1.0)
    assert report["results"]["invariant_residuals"]["det"] <= 1e-9


def test_simulate_jsonl_zero_control(tmp_path):
    out = tmp_path / "traj.jsonl"
    report, code = cli.run(["simulate", spec("rolling_sphere"), "--T", "0.01", "--out", str(out)])
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert code == 0 and len(lines) == 11
    assert lines[0]["time"] == 0.0 and lines[0]["f1_m00"] == 1.0


def test_simulate_truncates_control():
    control = json.dumps([[1.0, [0.0]], [1.0, [0.0]]])
    report, _ = cli.run(["simulate", spec("sl2_ex_ii"), "--control", control, "--T", "1.5"])
    assert report["results"]["duration"] == 1.5


def test_simulate_needs_control_or_duration():
    report, code = cli.run(["simulate", spec("sl2_ex_ii")])
    assert code == 1 and report["results"]["error"]["code"]


def test_reach_pass_and_seed_env(tmp_path, monkeypatch):
    out = tmp_path / "cloud.jsonl"
    args = ["reach", spec("sl2_ex_ii"), "--N", "200", "--dt", "0.01", "--out", str(out)]
    report, code = cli.run(args)
    assert code == 0 and report["results"]["accessibility"]["result"] == "pass"
    assert report["parameters"]["seed"] == 0
    assert len(out.read_text().splitlines()) == 200
    monkeypatch.setenv("LIECTRL_SEED", "7")
    report7, _ = cli.run(args)
    assert report7["parameters"]["seed"] == 7
    explicit, _ = cli.run(args + ["--seed", "3"])
    assert explicit["parameters"]["seed"] == 3


def test_reach_bad_seed_env(monkeypatch):
    monkeypatch.setenv("LIECTRL_SEED", "abc")
    report, code = cli.run(["reach", spec("sl2_ex_ii"), "--N", "10"])
    assert code == 1 and "LIECTRL_SEED" in report["results"]["error"]["message"]


def test_reach_rank_deficient_exits_3(tmp_path):
    p = tmp_path / "rd.json"
    write_spec(p, to_document(*rank_deficient_r2()))
    report, code = cli.run(["reach", str(p), "--N", "100", "--dt", "0.01"])
    assert code == 3 and report["results"]["accessibility"]["dimension"] == 1


def test_reach_composition():
    report, _ = cli.run(["reach", spec("rolling_sphere"), "--N", "50", "--dt", "0.01", "--box", "1",
                         "--composition"])
    assert report["results"]["composition"]["passed"]
    assert report["parameters"]["box"] == [[-1.0, 1.0]] * 4


def test_connect_found():
    report, code = cli.run(["connect", spec("sl2_ex_ii"), "--to", "1,0,0"])
    assert code == 0 and report["results"]["result"] == "found"
    assert report["results"]["residual"] <= 1e-3


def test_connect_budget_exhausted():
    report, code = cli.run(["connect", spec("sl2_ex_ii"), "--to", "1,0,0", "--budget", "100"])
    assert code == 3 and report["results"]["result"] == "best"


def test_connect_bad_coordinates():
    report, code = cli.run(["connect", spec("sl2_ex_ii"), "--to", "1,0"])
    assert code == 1


def test_main_writes_report(tmp_path, capsys):
    rep = tmp_path / "report.json"
    code = cli.main(["check", spec("sl2_ex_i"), "--report", str(rep)])
    printed = json.loads(capsys.readouterr().out)
    assert code == 2
    assert json.loads(rep.read_text()) == printed


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "liectrl.cli", "check", spec("sl2_ex_i")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["results"]["conclusion"] == "SufficientConditionFails"


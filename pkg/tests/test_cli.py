import csv
import json
import subprocess
import sys

import pytest

from elasticdue.cli import main

from conftest import NETWORKS, SCENARIOS


def _scenario(tmp_path, name="frozen", **overrides):
    doc = json.loads((SCENARIOS / f"{name}.json").read_text())
    doc["network"] = str((SCENARIOS / doc["network"]).resolve())
    for section, values in overrides.items():
        doc.setdefault(section, {}).update(values)
    path = tmp_path / f"{name}_scenario.json"
    path.write_text(json.dumps(doc))
    return path


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_frozen_solves_to_closed_form(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", str(SCENARIOS / "frozen.json"), "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["converged"]
    assert rep["demand"][0]["Q"] == pytest.approx(100.0, abs=1e-3)
    assert rep["demand"][0]["multiplier"] == pytest.approx(-rep["demand"][0]["theta_at_Q"])


def test_choke_scenario_gives_zero_demand(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", str(SCENARIOS / "choke.json"), "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["demand"][0]["Q"] == 0.0
    assert all(v == 0.0 for row in rep["flows"] for v in row["bins"])


def test_desired_arrival_outside_horizon_is_invalid(tmp_path, capsys):
    path = _scenario(tmp_path, penalty={"T_A": 40})
    assert main(["solve", str(path), "--out", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    diag = json.loads(err)
    assert "T_A" in diag["message"]
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize(
    "overrides",
    [
        {"grid": {"n_bins": 0}},
        {"solver": {"alpha": -1}},
        {"solver": {"bogus": 1}},
        {"output": {"format": "xml"}},
    ],
)
def test_invalid_scenarios_exit_2(tmp_path, overrides):
    assert main(["validate", str(_scenario(tmp_path, **overrides))]) == 2


@pytest.mark.parametrize("alpha, needle", [(-1, "'L1'"), ("fast", "$.links[0].alpha")])
def test_bad_network_is_named_in_diagnostic(tmp_path, capsys, alpha, needle):
    net = json.loads((NETWORKS / "frozen.json").read_text())
    net["links"][0]["alpha"] = alpha
    (tmp_path / "net.json").write_text(json.dumps(net))
    doc = json.loads((SCENARIOS / "frozen.json").read_text())
    doc["network"] = "net.json"
    (tmp_path / "s.json").write_text(json.dumps(doc))
    assert main(["validate", str(tmp_path / "s.json")]) == 2
    assert needle in json.loads(capsys.readouterr().err.splitlines()[-1])["message"]


def test_missing_scenario_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_not_converged_exit_3(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", str(_scenario(tmp_path, solver={"max_iters": 1})), "--out", str(out)]) == 3
    rep = _report(out)
    assert rep["converged"] is False and rep["iterations"] == 1


def test_unwritable_output_exit_1(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["solve", str(SCENARIOS / "choke.json"), "--out", str(blocker)]) == 1


def test_seed_range_checked(tmp_path):
    assert main(["solve", str(SCENARIOS / "choke.json"), "--out", str(tmp_path), "--seed", "-1"]) == 2


def test_validate_prints_summary(capsys):
    assert main(["validate", str(SCENARIOS / "diamond.json")]) == 0
    assert json.loads(capsys.readouterr().out) == {"valid": True, "paths": 5, "bins": 16}


def test_csv_round_trips_json(tmp_path):
    path = SCENARIOS / "parallel2_congested.json"
    assert main(["solve", str(path), "--out", str(tmp_path / "j")]) == 0
    assert main(["solve", str(path), "--out", str(tmp_path / "c"), "--format", "csv"]) == 0
    rep = _report(tmp_path / "j")
    with open(tmp_path / "c" / "flows.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3 and len(rows[0]) == 1 + 32
    for row, flow in zip(rows[1:], rep["flows"]):
        assert row[0] == flow["path"]
        assert [float(v) for v in row[1:]] == flow["bins"]
    with open(tmp_path / "c" / "demand.csv", newline="") as fh:
        demand = list(csv.DictReader(fh))
    assert float(demand[0]["Q"]) == rep["demand"][0]["Q"]
    with open(tmp_path / "c" / "trace.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == rep["iterations"]


def test_report_is_deterministic(tmp_path):
    path = SCENARIOS / "parallel2.json"
    for d in ("a", "b"):
        assert main(["solve", str(path), "--out", str(tmp_path / d), "--seed", "7"]) == 0
    first = (tmp_path / "a" / "report.json").read_bytes()
    assert first == (tmp_path / "b" / "report.json").read_bytes()
    assert json.loads(first)["seed"] == 7


def test_oracle_command(tmp_path):
    path = _scenario(tmp_path, grid={"tf": 16, "n_bins": 16}, oracle={"iters": 3000})
    out = tmp_path / "out"
    code = main(["oracle", str(path), "--out", str(out), "--seed", "100"])
    rep = json.loads((out / "oracle.json").read_text())
    assert rep["seeds"] == [100, 101, 102, 103, 104]
    assert rep["demand"][0]["Q"] == pytest.approx(100.0, rel=1e-3)
    assert code == (0 if rep["converged"] else 3)


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "elasticdue.cli", "validate", str(SCENARIOS / "frozen.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["valid"]

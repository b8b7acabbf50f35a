import json
from pathlib import Path

import pandas as pd
import pytest
from numpy.testing import assert_allclose

from src.cli import main
from src.discrete_system.utils import load_json_report, validate_report

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_config(directory: Path, raw) -> str:
    path = directory / "config.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return str(path)


def run(command, out: Path, *extra):
    code = main([command, "--out", str(out), "--log-level", "WARNING", *extra])
    return code, load_json_report(out / f"{command}.json") if code == 0 else None


def test_spectrum_report(tmp_path):
    code, report = run("spectrum", tmp_path, "--period", "6")
    assert code == 0
    assert validate_report(report) == []
    assert report["command"] == "spectrum"
    assert_allclose(report["body"]["spectrum"]["eigenvalues"], [0, 1, 1, 3, 3, 4], atol=1e-12)
    assert report["body"]["spectrum"]["lambda_max"] == 4.0
    frame = pd.read_csv(tmp_path / "spectrum_eigenvalues.csv")
    assert list(frame.columns) == ["j", "closed_form", "dense"]
    assert len(frame) == 6


def test_check_on_desk_config(tmp_path):
    code, report = run("check", tmp_path, "--config", str(CONFIGS / "desk.json"))
    assert code == 0
    body = report["body"]
    assert body["conditions"]["A2"]["verdict"] == "fails"
    for name in ("A1", "A3", "W1", "W2"):
        assert body["conditions"][name]["verdict"] == "holds-on-sample"
    assert body["bounds"]["coercivity"]["violations"] == 0
    assert body["bounds"]["ps_bound"]["violations"] == 0
    assert body["constant_sequences"]["max_phi"] <= 0.0
    assert "output" not in body["config"]


def test_check_records_vacuous_bounds(tmp_path):
    raw = json.loads((CONFIGS / "penalized.json").read_text(encoding="utf-8"))
    raw["conditions"]["samples"] = 100
    code, report = run("check", tmp_path, "--config", write_config(tmp_path, raw))
    assert code == 0
    # the unit penalty reading leaves min(w3, 1) below lambda_max / 2
    assert "error" in report["body"]["bounds"]["coercivity"]


def test_solve_desk(tmp_path):
    config = write_config(tmp_path, {"seed": 0, "solver": {"ensemble": 2}, "oracle": {"starts": 50}})
    code, report = run("solve", tmp_path / "out", "--config", config)
    assert code == 0
    body = report["body"]
    assert 0.60 < body["minimax"]["c_hat"] < 0.64
    assert body["certificates"]["certificate_i"] and body["certificates"]["certificate_ii"]
    assert body["refined"]["residual_max_norm"] <= 1e-8
    assert body["catalog_match"]["matched"]
    assert body["geometry"]["source"] == "ray"
    assert (tmp_path / "out" / "solve_path.csv").exists()
    assert (tmp_path / "out" / "solve_catalog.csv").exists()


def test_solve_penalized(tmp_path):
    code, report = run("solve", tmp_path, "--config", str(CONFIGS / "penalized.json"), "--ensemble", "1")
    assert code == 0
    body = report["body"]
    assert body["geometry"]["source"] == "penalty"
    assert body["geometry"]["level"] == pytest.approx(2.4 * 0.25)
    assert body["claimed_gradient_mismatch"] >= 0.0
    assert "refined" not in body


def test_solve_is_deterministic(tmp_path):
    config = write_config(tmp_path, {"seed": 5, "solver": {"ensemble": 2, "knots": 16}, "oracle": {"starts": 10}})
    run("solve", tmp_path / "a", "--config", config)
    run("solve", tmp_path / "b", "--config", config)
    first = load_json_report(tmp_path / "a" / "solve.json")
    second = load_json_report(tmp_path / "b" / "solve.json")
    assert first["body"] == second["body"]


def test_seed_flag_changes_component_seeds(tmp_path):
    _, first = run("oracle", tmp_path / "a", "--seed", "1")
    _, second = run("oracle", tmp_path / "b", "--seed", "2")
    assert first["body"]["catalog"]["seed"] != second["body"]["catalog"]["seed"]


def test_deform(tmp_path):
    config = write_config(tmp_path, {"seed": 1, "deformation": {"samples": 5}})
    code, report = run("deform", tmp_path / "out", "--config", config)
    assert code == 0
    body = report["body"]
    assert len(body["runs"]) == 3
    assert all(r["conclusions"]["i"]["verdict"] == "pass" for r in body["runs"])
    assert body["descent"]["verdict"] == "pass"
    traces = pd.read_csv(tmp_path / "out" / "deform_traces.csv")
    assert set(traces["run"]) == {0, 1, 2}


def test_oracle(tmp_path):
    config = write_config(tmp_path, {"seed": 3, "oracle": {"starts": 10}})
    code, report = run("oracle", tmp_path / "out", "--config", config)
    assert code == 0
    ray = report["body"]["ray_scan"]
    assert len(ray["roots"]) == 2
    assert 1.12 < ray["roots"][1] < 1.14
    assert max(ray["residuals"]) <= 1e-10


def test_missing_seed_exits_with_path(tmp_path, capsys):
    config = write_config(tmp_path, {"period": 6})
    assert main(["check", "--config", config, "--out", str(tmp_path)]) == 2
    assert "config.seed" in capsys.readouterr().err


def test_unknown_field_exits_with_path(tmp_path, capsys):
    config = write_config(tmp_path, {"seed": 0, "solver": {"bogus": 1}})
    assert main(["solve", "--config", config, "--out", str(tmp_path)]) == 2
    assert "config.solver.bogus" in capsys.readouterr().err


def test_bad_fixed_set_exits_with_path(tmp_path, capsys):
    config = write_config(tmp_path, {"seed": 0, "deformation": {"fixed_sets": [{"kind": "slab", "lo": 0.0}]}})
    assert main(["deform", "--config", config, "--out", str(tmp_path)]) == 2
    assert "config.deformation.fixed_sets[0].hi" in capsys.readouterr().err

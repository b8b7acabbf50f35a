import math

import numpy as np
import pytest

from src.discrete_system.errors import ReportError
from src.discrete_system.utils import (
    build_envelope,
    central_difference_gradient,
    component_seeds,
    load_json_report,
    random_ball_samples,
    relative_error,
    to_jsonable,
    validate_report,
    write_json_report,
)


def test_component_seeds_are_stable_and_distinct():
    names = ("solver", "oracle", "bounds")
    seeds = component_seeds(42, names)
    assert seeds == component_seeds(42, names)
    assert len(set(seeds.values())) == 3
    assert seeds != component_seeds(43, names)
    assert all(isinstance(v, int) for v in seeds.values())


def test_to_jsonable():
    converted = to_jsonable({"a": np.float64(1.5), "b": np.arange(3), "c": (np.int64(2), math.inf),
                             "d": -np.inf, "e": float("nan")})
    assert converted == {"a": 1.5, "b": [0, 1, 2], "c": [2, "inf"], "d": "-inf", "e": None}
    assert type(converted["a"]) is float


def test_envelope_validation():
    report = build_envelope("spectrum", {"spectrum": {}})
    assert validate_report(report) == []
    assert "generated_at" in report["meta"]
    assert validate_report({"command": "spectrum"})
    assert validate_report(build_envelope("spectrum", {}))
    assert validate_report(build_envelope("launch", {}))


def test_write_refuses_malformed_report(tmp_path):
    with pytest.raises(ReportError):
        write_json_report(tmp_path / "bad.json", build_envelope("solve", {"functional": {}}))
    assert not (tmp_path / "bad.json").exists()


def test_report_round_trip(tmp_path):
    report = build_envelope("oracle", {"potential": {"a": 2.5}, "catalog": {"entries": []}})
    path = write_json_report(tmp_path / "nested" / "oracle.json", report)
    assert load_json_report(path) == report
    assert not list((tmp_path / "nested").glob("*.tmp"))


def test_load_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    with pytest.raises(ReportError):
        load_json_report(path)


def test_central_difference_gradient():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    x = np.array([0.3, -1.2])
    fd = central_difference_gradient(lambda v: 0.5 * v @ A @ v, x)
    assert relative_error(fd, A @ x) <= 1e-9


def test_random_ball_samples_stay_inside(rng):
    samples = random_ball_samples(6, 500, 2.0, rng)
    assert samples.shape == (500, 6)
    assert np.max(np.linalg.norm(samples, axis=1)) <= 2.0

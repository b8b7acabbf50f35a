import json

import pytest

from src.discrete_system.config import (
    DESK_DIRECTION,
    apply_overrides,
    desk_problem_config,
    load_problem_config,
    parse_problem_config,
)
from src.discrete_system.errors import ConfigError
from src.discrete_system.models import FunctionalKind, FunctionalSpec
from src.discrete_system.problem import ProblemBuilder


def test_defaults_fill_missing_blocks():
    config = parse_problem_config({"seed": 4})
    assert config.period == 6
    assert config.potential.kind == "cosine_mu"
    assert config.solver.symmetry == "isotropy"
    assert len(config.deformation.fixed_sets) == 3


@pytest.mark.parametrize("raw, path", [
    ({}, "config.seed"),
    ({"seed": -1}, "config.seed"),
    ({"seed": 0, "period": 2}, "config.period"),
    ({"seed": 0, "solver": {"eps": -1.0}}, "config.solver.eps"),
    ({"seed": 0, "solver": {"knots": 33}}, "config.solver.knots"),
    ({"seed": 0, "solver": {"symmetry": "mirror"}}, "config.solver.symmetry"),
    ({"seed": 0, "potential": {"weight": {"kind": "square"}}}, "config.potential.weight.kind"),
    ({"seed": 0, "potential": {"kind": "custom_profile"}}, "config.potential.profile"),
    ({"seed": 0, "functional": {"geometry": {"direction": [1, 0]}}}, "config.functional.geometry.direction"),
    ({"seed": 0, "functional": {"kind": "penalized", "w3": 2.4}}, "config.functional.n_star"),
    ({"seed": 0, "oracle": "many"}, "config.oracle"),
    ({"seed": 0, "deformation": {"typo": 1}}, "config.deformation.typo"),
])
def test_errors_name_the_json_path(raw, path):
    with pytest.raises(ConfigError) as info:
        parse_problem_config(raw)
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_boolean_is_not_a_number():
    with pytest.raises(ConfigError):
        parse_problem_config({"seed": True})


def test_load_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"seed\": 0,", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_problem_config(path)


def test_load_reads_partial_config(tmp_path):
    path = tmp_path / "partial.json"
    path.write_text(json.dumps({"seed": 9, "solver": {"ensemble": 3}}), encoding="utf-8")
    config = load_problem_config(path)
    assert config.seed == 9
    assert config.solver.ensemble == 3


def test_overrides():
    config = desk_problem_config()
    changed = apply_overrides(config, seed=7, ensemble=2, eps=0.05, out="elsewhere")
    assert (changed.seed, changed.solver.ensemble, changed.solver.eps, changed.output.dir) == (7, 2, 0.05, "elsewhere")
    assert config.seed == 0
    assert config.solver.ensemble == 8
    with pytest.raises(ConfigError):
        apply_overrides(config, ensemble=0)


def test_builder_on_desk():
    builder = ProblemBuilder(desk_problem_config())
    assert builder.potential() is builder.potential()
    assert builder.functional() is builder.functional()
    assert builder.geometry() is builder.geometry(builder.functional())
    assert builder.direction().to_list() == list(DESK_DIRECTION)
    geometry = builder.geometry()
    assert geometry.source == "ray"
    assert geometry.level == pytest.approx(0.3)


def test_builder_needs_direction_off_the_desk_period():
    config = parse_problem_config({"seed": 0, "period": 8})
    with pytest.raises(ConfigError):
        ProblemBuilder(config).direction()


def test_builder_penalty_geometry_needs_w4():
    config = parse_problem_config({"seed": 0, "functional": {"kind": "penalized", "n_star": 3, "w3": 2.4,
                                                             "penalty": "unit", "geometry": {"kind": "penalty"}}})
    with pytest.raises(ConfigError) as info:
        ProblemBuilder(config).geometry()
    assert info.value.path == "config.functional.geometry.w4"


def test_builder_rebuilds_geometry_for_another_functional():
    builder = ProblemBuilder(desk_problem_config())
    own = builder.geometry()
    other = FunctionalSpec(FunctionalKind.STANDARD, builder.potential())
    rebuilt = builder.geometry(other)
    assert rebuilt is not own
    assert rebuilt.level == pytest.approx(own.level)
    assert builder.geometry() is own

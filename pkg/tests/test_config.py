"""Run configuration validation and YAML loading tests.

Features: config
See: docs/FEATURES.md#config
"""

from __future__ import annotations

from pathlib import Path

import pytest

from polysfem.config import (
    SETTINGS_SCHEMA,
    RunConfig,
    SolverSettings,
    build_run_config,
    load_config_file,
    merge,
    validate,
)
from polysfem.const import METHODS
from polysfem.exceptions import ConfigError
from polysfem.smoothing import SmoothingRule

pytestmark = pytest.mark.feature("config")


def test_defaults() -> None:
    config = build_run_config({})
    assert config == RunConfig()
    assert config.methods == ("csfem",)
    assert config.settings.smoothing_rule == SmoothingRule(2, 3, 2)
    assert config.settings.pfem_order(2) == 8
    assert config.settings.pfem_order(3) == 6


def test_both_methods_and_coercion() -> None:
    config = build_run_config(
        {"method": "BOTH", "workers": "4", "levels": 3, "output": "out/rates.csv"}
    )
    assert config.methods == METHODS
    assert config.settings.workers == 4
    assert config.levels == 3
    assert config.output == Path("out/rates.csv")


def test_load_order_overrides_body_force_order() -> None:
    assert SolverSettings().body_force_order(2) == 8
    assert SolverSettings(load_order=3).body_force_order(3) == 3


@pytest.mark.parametrize(
    "values",
    [
        {"pfem_order_2d": 0},
        {"problem": "beam"},
        {"method": "fem"},
        {"solver_tolerance": 1e-3},
        {"smoothing_facet_order": 1},
        {"workers": 0},
        {"frobnicate": 1},
    ],
)
def test_invalid_values_are_config_errors(values) -> None:
    with pytest.raises(ConfigError, match="Invalid configuration"):
        build_run_config(values)


def test_settings_schema_rejects_run_keys() -> None:
    with pytest.raises(ConfigError):
        validate({"problem": "patch"}, SETTINGS_SCHEMA)
    assert validate({}, SETTINGS_SCHEMA)["smoothing_boundary_points"] == 2


def test_yaml_file_keys_are_normalized(tmp_path) -> None:
    path = tmp_path / "run.yaml"
    path.write_text("pfem-order-2d: 10\nmethod: pfem\nlevels: 2\n", encoding="utf-8")
    values = load_config_file(path)
    assert values == {"pfem_order_2d": 10, "method": "pfem", "levels": 2}
    config = build_run_config(values)
    assert config.settings.pfem_order_2d == 10
    assert config.method == "pfem"


def test_empty_yaml_file(tmp_path) -> None:
    path = tmp_path / "empty.yaml"
    path.write_text("", encoding="utf-8")
    assert load_config_file(path) == {}


@pytest.mark.parametrize(
    ("text", "message"),
    [("- 1\n- 2\n", "must contain a mapping"), ("method: [csfem\n", "not valid YAML")],
)
def test_bad_yaml_files(tmp_path, text: str, message: str) -> None:
    path = tmp_path / "bad.yaml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError, match=message):
        load_config_file(path)


def test_missing_file(tmp_path) -> None:
    with pytest.raises(ConfigError, match="Cannot read config"):
        load_config_file(tmp_path / "missing.yaml")


def test_explicit_flags_override_the_file() -> None:
    merged = merge({"method": "pfem", "levels": 4}, {"method": "csfem", "levels": None})
    assert merged == {"method": "csfem", "levels": 4}

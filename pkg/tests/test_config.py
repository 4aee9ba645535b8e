"""Tests for settings loading and environment overrides."""
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.config import Settings


def test_defaults_without_file(tmp_path) -> None:
    settings = Settings.load(tmp_path / "missing.yaml")
    assert settings.numerics.grid == 1000
    assert settings.planner.variant == "avp-rrt"
    assert settings.output_dir == Path("output")


def test_yaml_values(tmp_path) -> None:
    config_file = tmp_path / "config.yaml"
    config_file.write_text("numerics:\n  grid: 400\nplanner:\n  k_neighbors: 3\n")
    settings = Settings.load(config_file)
    assert settings.grid == 400
    assert settings.planner.k_neighbors == 3


def test_environment_overrides_yaml(tmp_path, monkeypatch) -> None:
    config_file = tmp_path / "config.yaml"
    config_file.write_text("numerics:\n  grid: 400\n")
    monkeypatch.setenv("AVP_GRID", "250")
    monkeypatch.setenv("AVP_EPSILON", "0.005")
    monkeypatch.setenv("AVP_SEED", "42")
    monkeypatch.setenv("AVP_OUTPUT_DIR", str(tmp_path / "runs"))
    settings = Settings.load(config_file)
    assert settings.grid == 250
    assert settings.epsilon == pytest.approx(0.005)
    assert settings.seed == 42
    assert settings.output_dir == tmp_path / "runs"


def test_invalid_value_rejected(tmp_path, monkeypatch) -> None:
    monkeypatch.setenv("AVP_GRID", "5")
    with pytest.raises(ValidationError):
        Settings.load(tmp_path / "missing.yaml")


def test_project_config_file_loads() -> None:
    settings = Settings.load()
    assert settings.planner.extension_grid == 200
    assert settings.planner.radius is None
    assert settings.baseline.v_max == pytest.approx(50.0)

"""Shared fixtures: small systems, unit paths and their phase-plane data."""
from pathlib import Path

import numpy as np
import pytest

from src.config import Settings
from src.kinodynamics.path import straight_path
from src.kinodynamics.phaseplane import project_constraints
from src.kinodynamics.systems import (
    AccelerationBox,
    AccelerationBoxParams,
    DoubleIntegrator,
    DoubleIntegratorParams,
    DoublePendulum,
)

PROJECT_ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = PROJECT_ROOT / "scenarios"
PATHS = SCENARIOS / "paths"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def unit_path():
    """q(s) = s on [0, 1], one joint."""
    return straight_path([0.0], [1.0])


@pytest.fixture
def integrator():
    """|qdd| <= 1, one joint."""
    return DoubleIntegrator(DoubleIntegratorParams(accel_max=[1.0]))


@pytest.fixture
def bounded_integrator():
    return DoubleIntegrator(DoubleIntegratorParams(accel_max=[1.0], vel_max=[0.5]))


@pytest.fixture
def integrator_2d():
    return DoubleIntegrator(DoubleIntegratorParams(accel_max=[1.0, 1.0]))


@pytest.fixture
def pendulum():
    return DoublePendulum()


@pytest.fixture
def unit_pd(integrator, unit_path):
    return project_constraints(integrator, unit_path, 1000)


@pytest.fixture
def bounded_pd(bounded_integrator, unit_path):
    return project_constraints(bounded_integrator, unit_path, 1000)


@pytest.fixture
def contradictory_pd(unit_path):
    """qdd <= -1 and qdd >= 1 at once."""
    system = AccelerationBox(AccelerationBoxParams(accel_min=[1.0], accel_max=[-1.0]))
    return project_constraints(system, unit_path, 200)


@pytest.fixture
def decelerating_pd(unit_path):
    """-2 <= qdd <= -0.5: every motion slows down."""
    system = AccelerationBox(AccelerationBoxParams(accel_min=[-2.0], accel_max=[-0.5]))
    return project_constraints(system, unit_path, 1000)


@pytest.fixture
def test_settings(tmp_path) -> Settings:
    settings = Settings()
    settings.app.output_dir = tmp_path / "output"
    return settings


@pytest.fixture
def scenario_file():
    """Resolves a scenario fixture by name."""
    return lambda name: SCENARIOS / f"{name}.json"


@pytest.fixture
def path_file():
    return lambda name: PATHS / f"{name}.json"

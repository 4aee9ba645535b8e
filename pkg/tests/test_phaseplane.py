"""Tests for the projection of joint constraints onto the (s, sdot) plane."""
import math

import numpy as np
import pytest

from src.core.errors import DimensionMismatchError
from src.kinodynamics.path import hermite_segment, straight_path
from src.kinodynamics.phaseplane import (
    PathDynamics,
    accel_limits,
    compute_mvc,
    compute_mvc_direct,
    dump_csv,
    project_constraints,
)
from src.kinodynamics.systems import DoubleIntegrator, DoubleIntegratorParams


def _parabola():
    """q(s) = s**2 on [0, 1]."""
    return hermite_segment([0.0], [0.0], [1.0], [2.0], 1.0)


# =============================================================================
# Coefficients and acceleration limits
# =============================================================================


class TestProjection:
    def test_rows_on_straight_path(self, unit_pd) -> None:
        a, b, c = unit_pd.coefficients_at(0.5)
        np.testing.assert_allclose(a, [1.0, -1.0])
        np.testing.assert_allclose(b, [0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(c, [-1.0, -1.0])

    def test_rows_on_parabola(self, integrator) -> None:
        pd = project_constraints(integrator, _parabola(), 100)
        a, b, c = pd.coefficients_at(0.5)
        np.testing.assert_allclose(a, [1.0, -1.0], atol=1e-9)
        np.testing.assert_allclose(b, [2.0, -2.0], atol=1e-9)
        np.testing.assert_allclose(c, [-1.0, -1.0])

    def test_accel_limits_at_rest(self, unit_pd) -> None:
        bounds = accel_limits(unit_pd, 0.5, 0.0)
        assert bounds.alpha == pytest.approx(-1.0)
        assert bounds.beta == pytest.approx(1.0)
        assert bounds.admissible

    def test_accel_limits_on_parabola(self, integrator) -> None:
        pd = project_constraints(integrator, _parabola(), 100)
        bounds = accel_limits(pd, 0.5, 0.5)
        # beta = (1 - 2 x) / (2 s), alpha = (-1 - 2 x) / (2 s) with x = 0.25
        assert bounds.beta == pytest.approx(0.5, abs=1e-9)
        assert bounds.alpha == pytest.approx(-1.5, abs=1e-9)

    def test_grid_matches_limits_at(self, unit_pd) -> None:
        k = unit_pd.index_of(0.25)
        assert unit_pd.limits_at(k, 0.3) == pytest.approx((-1.0, 1.0))

    def test_small_grid_rejected(self, integrator, unit_path) -> None:
        with pytest.raises(ValueError, match="n_grid"):
            project_constraints(integrator, unit_path, 5)

    def test_dimension_mismatch(self, integrator_2d, unit_path) -> None:
        with pytest.raises(DimensionMismatchError):
            project_constraints(integrator_2d, unit_path, 100)


# =============================================================================
# Maximum velocity curves
# =============================================================================


class TestMaximumVelocityCurve:
    def test_unbounded_on_straight_path(self, unit_pd) -> None:
        assert math.isinf(compute_mvc(unit_pd, 0.5))
        assert np.all(np.isinf(unit_pd.mvc))

    def test_parabola_bounded_only_at_rest_tangent(self, integrator) -> None:
        pd = project_constraints(integrator, _parabola(), 100)
        # q_s = 0 at s = 0 leaves 2 x <= 1
        assert pd.mvc[0] == pytest.approx(math.sqrt(0.5))
        assert np.all(np.isinf(pd.mvc[1:]))

    def test_contradictory_constraints_pin_mvc_to_zero(self, contradictory_pd) -> None:
        np.testing.assert_allclose(contradictory_pd.mvc, 0.0)
        assert not accel_limits(contradictory_pd, 0.5, 0.0).admissible

    def test_crossing_rows(self) -> None:
        n = 50
        pd = PathDynamics.from_coefficients(
            1.0,
            a=np.tile([[1.0], [-1.0]], n + 1),
            b=np.ones((2, n + 1)),
            c=-np.ones((2, n + 1)),
        )
        np.testing.assert_allclose(pd.mvc, 1.0)

    def test_duplicate_rows_leave_mvc_unchanged(self) -> None:
        n = 50
        a = np.tile([[1.0], [-1.0]], n + 1)
        b = np.ones((2, n + 1))
        c = -np.ones((2, n + 1))
        single = PathDynamics.from_coefficients(1.0, a, b, c)
        doubled = PathDynamics.from_coefficients(1.0, np.vstack([a, a]), np.vstack([b, b]), np.vstack([c, c]))
        np.testing.assert_allclose(doubled.mvc, single.mvc)

    def test_threshold_is_strict(self) -> None:
        n = 10
        a = np.vstack([np.full(n + 1, 0.5), -np.ones(n + 1)])
        a[0, 0] = 1.0
        b = np.vstack([np.ones(n + 1), 2.0 * np.ones(n + 1)])
        pd = PathDynamics.from_coefficients(1.0, a, b, -np.ones((2, n + 1)), zero_inertia_threshold=0.5)
        # |a| equal to threshold * row scale keeps the row in the pair crossing
        assert not pd.zero_mask[0, 1]
        assert pd.mvc[1] == pytest.approx(math.sqrt(0.75))
        alpha, beta = pd.limits_at(1, 0.5)
        assert beta == pytest.approx(1.0)
        assert alpha == pytest.approx(0.0)

    def test_direct_bound_on_unit_speed_path(self) -> None:
        system = DoubleIntegrator(DoubleIntegratorParams(accel_max=[1.0], vel_max=[2.0]))
        path = straight_path([0.0], [1.0])
        assert compute_mvc_direct(system, path, 0.4) == pytest.approx(2.0)
        pd = project_constraints(system, path, 100)
        np.testing.assert_allclose(pd.mvc_direct, 2.0)
        assert pd.ceiling_at(0.4) == pytest.approx(2.0)

    def test_direct_bound_scales_with_tangent(self) -> None:
        system = DoubleIntegrator(DoubleIntegratorParams(accel_max=[1.0], vel_max=[2.0]))
        path = hermite_segment([0.0], [2.0], [2.0], [2.0], 1.0)
        assert compute_mvc_direct(system, path, 0.5) == pytest.approx(1.0)
        pd = project_constraints(system, path, 100)
        assert pd.direct_at(0.5) == pytest.approx(1.0)

    def test_no_direct_bounds(self, unit_pd, integrator, unit_path) -> None:
        assert not unit_pd.has_direct_bounds
        assert math.isinf(compute_mvc_direct(integrator, unit_path, 0.5))


# =============================================================================
# Debug dump
# =============================================================================


class TestDumpCsv:
    def test_columns_and_rows(self, bounded_pd, tmp_path) -> None:
        target = tmp_path / "phaseplane.csv"
        dump_csv(bounded_pd, target)
        lines = target.read_text().splitlines()
        assert lines[0] == "s,mvc,mvc_direct,a_1,a_2,b_1,b_2,c_1,c_2"
        assert len(lines) == bounded_pd.n_grid + 2
        first = [float(v) for v in lines[1].split(",")]
        assert first[0] == 0.0
        assert first[2] == pytest.approx(0.5)

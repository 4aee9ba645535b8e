"""Tests for the brute-force reachability and minimum-time checks."""
import math

import numpy as np
import pytest

from src.kinodynamics.avp import VelocityInterval
from src.kinodynamics.oracle import agrees_with, min_time_dp, reachable_final_set
from src.kinodynamics.path import random_c1_path
from src.kinodynamics.phaseplane import project_constraints
from src.kinodynamics.topp import profile_duration, topp_profile


class TestReachableFinalSet:
    def test_unit_integrator_from_rest(self, unit_pd) -> None:
        grid = reachable_final_set(unit_pd, VelocityInterval(0.0, 0.0), v_max=2.0)
        final = grid.final_interval()
        assert grid.is_contiguous
        assert final.lo == pytest.approx(0.0, abs=2 * grid.dv)
        assert final.hi == pytest.approx(math.sqrt(2.0), abs=2 * grid.dv)

    def test_velocity_bound(self, bounded_pd) -> None:
        grid = reachable_final_set(bounded_pd, VelocityInterval(0.0, 0.0))
        assert grid.final_interval().hi == pytest.approx(0.5, abs=2 * grid.dv)

    def test_contradictory_is_empty(self, contradictory_pd) -> None:
        grid = reachable_final_set(contradictory_pd, VelocityInterval(0.0, 0.0), v_max=2.0)
        assert grid.final_cells().size == 0
        assert grid.final_interval() is None

    def test_forced_deceleration_is_empty(self, decelerating_pd) -> None:
        grid = reachable_final_set(decelerating_pd, VelocityInterval(0.0, 0.5), v_max=2.0)
        assert grid.final_interval() is None

    def test_unbounded_ceiling_needs_v_max(self, unit_pd) -> None:
        with pytest.raises(ValueError, match="v_max"):
            reachable_final_set(unit_pd, VelocityInterval(0.0, 0.0))

    def test_small_grid_rejected(self, unit_pd) -> None:
        with pytest.raises(ValueError):
            reachable_final_set(unit_pd, VelocityInterval(0.0, 0.0), n_s=10, v_max=2.0)

    def test_table(self, unit_pd) -> None:
        grid = reachable_final_set(unit_pd, VelocityInterval(0.0, 0.0), n_s=50, n_v=50, v_max=2.0)
        columns, data = grid.to_table()
        assert columns == ["s", "sdot_cell", "sdot_lo", "sdot_hi"]
        assert data.shape[0] == int(np.count_nonzero(grid.reachable))
        assert np.all(data[:, 2] <= data[:, 3])


class TestMinTime:
    def test_triangle(self, unit_pd) -> None:
        result = min_time_dp(unit_pd, 0.0, 0.0, v_max=2.0)
        assert result.feasible
        assert result.duration == pytest.approx(2.0, rel=0.05)

    def test_trapezoid(self, bounded_pd) -> None:
        result = min_time_dp(bounded_pd, 0.0, 0.0)
        assert result.feasible
        assert result.duration == pytest.approx(2.5, rel=0.05)

    def test_infeasible(self, contradictory_pd) -> None:
        result = min_time_dp(contradictory_pd, 0.0, 0.0, v_max=2.0)
        assert not result.feasible
        assert math.isinf(result.duration)

    def test_matches_topp_on_random_path(self, integrator_2d) -> None:
        path = random_c1_path(np.random.default_rng(3), np.array([[-1.0, 1.0], [-1.0, 1.0]]))
        pd = project_constraints(integrator_2d, path, 1000)
        profile = topp_profile(pd, 0.0, 0.0)
        v_max = 1.2 * float(np.max(profile.sdot_values))
        result = min_time_dp(pd, 0.0, 0.0, v_max=v_max)
        assert result.feasible
        assert result.duration == pytest.approx(profile_duration(profile), rel=0.05)


class TestAgreesWith:
    def test_matching_interval(self, unit_pd) -> None:
        grid = reachable_final_set(unit_pd, VelocityInterval(0.0, 0.0), v_max=2.0)
        agrees, gap = agrees_with(VelocityInterval(0.0, math.sqrt(2.0)), grid)
        assert agrees
        assert gap <= 2 * grid.dv

    def test_wrong_upper_bound(self, unit_pd) -> None:
        grid = reachable_final_set(unit_pd, VelocityInterval(0.0, 0.0), v_max=2.0)
        agrees, gap = agrees_with(VelocityInterval(0.0, 1.0), grid)
        assert not agrees
        assert gap == pytest.approx(math.sqrt(2.0) - 1.0, abs=2 * grid.dv)

    def test_both_empty(self, contradictory_pd) -> None:
        grid = reachable_final_set(contradictory_pd, VelocityInterval(0.0, 0.0), v_max=2.0)
        assert agrees_with(None, grid) == (True, 0.0)

    def test_one_side_empty(self, contradictory_pd) -> None:
        grid = reachable_final_set(contradictory_pd, VelocityInterval(0.0, 0.0), v_max=2.0)
        agrees, gap = agrees_with(VelocityInterval(0.0, 1.0), grid)
        assert not agrees
        assert math.isinf(gap)

"""Tests for configuration-space obstacles."""
import numpy as np
import pytest
from pydantic import ValidationError

from src.core.errors import ScenarioError
from src.core.models import ObstacleSpec
from src.kinodynamics.path import straight_path
from src.planning.collision import Box, CollisionChecker, Sphere


class TestShapes:
    def test_box_contains_boundary(self) -> None:
        box = Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
        inside = box.contains(np.array([[0.5, 0.5], [1.0, 1.0], [1.1, 0.5]]))
        assert inside.tolist() == [True, True, False]

    def test_sphere(self) -> None:
        sphere = Sphere(np.array([0.0, 0.0]), 0.5)
        assert sphere.contains(np.array([[0.3, 0.3], [0.4, 0.4]])).tolist() == [True, False]


class TestCollisionChecker:
    def test_empty_checker_is_free(self) -> None:
        checker = CollisionChecker()
        assert checker.is_free([10.0, -3.0])
        assert checker.path_free(straight_path([0.0, 0.0], [1.0, 1.0]))

    def test_from_specs(self) -> None:
        specs = [
            ObstacleSpec(kind="box", lower=[0.4, -1.0], upper=[0.6, 1.0]),
            ObstacleSpec(kind="sphere", center=[-1.0, 0.0], radius=0.2),
        ]
        checker = CollisionChecker.from_specs(specs, dim=2)
        mask = checker.free_mask(np.array([[0.5, 0.0], [-1.0, 0.1], [0.0, 0.0]]))
        assert mask.tolist() == [False, False, True]

    def test_path_through_wall(self) -> None:
        checker = CollisionChecker.from_specs([ObstacleSpec(kind="box", lower=[0.45, -1.0], upper=[0.55, 1.0])])
        assert not checker.path_free(straight_path([0.0, 0.0], [1.0, 0.0]))
        assert checker.path_free(straight_path([0.0, 0.0], [0.4, 0.0]))

    def test_coarse_sampling_can_miss_thin_walls(self) -> None:
        checker = CollisionChecker.from_specs([ObstacleSpec(kind="box", lower=[0.51, -1.0], upper=[0.52, 1.0])])
        path = straight_path([0.0, 0.0], [1.0, 0.0])
        assert checker.path_free(path, resolution=2)
        assert not checker.path_free(path, resolution=200)

    def test_dimension_mismatch(self) -> None:
        with pytest.raises(ScenarioError, match="dimension"):
            CollisionChecker.from_specs([ObstacleSpec(kind="sphere", center=[0.0], radius=1.0)], dim=2)

    def test_inverted_box(self) -> None:
        with pytest.raises(ScenarioError, match="inconsistent"):
            CollisionChecker.from_specs([ObstacleSpec(kind="box", lower=[1.0], upper=[0.0])])

    def test_incomplete_spec(self) -> None:
        with pytest.raises(ValidationError, match="lower and upper"):
            ObstacleSpec(kind="box", lower=[0.0])

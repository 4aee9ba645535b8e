"""
Configuration-space obstacles and a sampling collision checker.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from src.core.errors import ScenarioError
from src.core.models import ObstacleSpec
from src.kinodynamics.path import ConfigPath

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.all((points >= self.lower) & (points <= self.upper), axis=1)


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.linalg.norm(points - self.center, axis=1) <= self.radius


class CollisionChecker:
    def __init__(self, obstacles: Iterable = ()):
        self.obstacles: List = list(obstacles)

    @classmethod
    def from_specs(cls, specs: Sequence[ObstacleSpec], dim: Optional[int] = None) -> "CollisionChecker":
        obstacles = []
        for spec in specs:
            if spec.kind == "box":
                shape = Box(np.asarray(spec.lower, dtype=float), np.asarray(spec.upper, dtype=float))
                size = shape.lower.size
                if shape.upper.size != size or np.any(shape.upper < shape.lower):
                    raise ScenarioError("box obstacle corners are inconsistent")
            else:
                shape = Sphere(np.asarray(spec.center, dtype=float), float(spec.radius))
                size = shape.center.size
            if dim is not None and size != dim:
                raise ScenarioError(f"obstacle of dimension {size} in a {dim}-DOF scenario")
            obstacles.append(shape)
        return cls(obstacles)

    def free_mask(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        hit = np.zeros(points.shape[0], dtype=bool)
        for obstacle in self.obstacles:
            hit |= obstacle.contains(points)
        return ~hit

    def is_free(self, q: Sequence[float]) -> bool:
        return bool(self.free_mask(q)[0])

    def path_free(self, path: ConfigPath, resolution: int = 100) -> bool:
        """Samples the path every s_end / resolution."""
        if not self.obstacles:
            return True
        q, _, _ = path.evaluate_many(np.linspace(0.0, path.s_end, resolution + 1))
        return bool(np.all(self.free_mask(q)))

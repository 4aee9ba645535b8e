"""
Pydantic models for the files read and written by the command runners.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator

from src.core.errors import ScenarioError


class NumericsOptions(BaseModel):
    """Phase-plane integration parameters shared by TOPP, AVP and the planners."""
    grid: int = Field(1000, ge=10)
    epsilon: float = Field(0.01, gt=0)
    zero_inertia_threshold: float = 1e-10
    discontinuity_threshold: float = 0.2
    singular_offset: int = 2
    velocity_tolerance: float = 1e-6
    lc_grace_cells: int = 2


class PlannerConfig(BaseModel):
    variant: Literal["avp-rrt", "avp-birrt", "knn-rrt"] = "avp-rrt"
    k_neighbors: int = Field(10, gt=0)
    max_reps: int = Field(2000, gt=0)
    radius: Optional[float] = Field(None, gt=0)
    epsilon: float = Field(0.01, gt=0)
    goal_velocity: float = Field(0.0, ge=0)
    seed: int = 0
    goal_bias: float = Field(0.1, ge=0, lt=1)
    bridge_test: bool = False
    bridge_length: float = Field(0.5, gt=0)
    bridge_attempts: int = Field(20, gt=0)
    extension_grid: int = Field(200, ge=10)
    collision_resolution: int = Field(100, gt=0)
    shortcut_iterations: int = Field(0, ge=0)


class BaselineParams(BaseModel):
    """State-space KNN-RRT parameters; v_max bounds sampled velocities and normalizes the metric."""
    v_max: float = Field(50.0, gt=0)
    steer_trials: int = Field(10, gt=0)
    duration_min: float = Field(0.01, gt=0)
    duration_max: float = Field(2.0, gt=0)
    time_step: float = Field(0.01, gt=0)
    goal_tolerance: float = Field(0.01, gt=0)
    goal_every: int = Field(5, gt=0)
    max_extensions: int = Field(10000, gt=0)


class SystemSpec(BaseModel):
    type: str
    params: Dict[str, Any] = {}


class ObstacleSpec(BaseModel):
    kind: Literal["box", "sphere"]
    lower: Optional[List[float]] = None
    upper: Optional[List[float]] = None
    center: Optional[List[float]] = None
    radius: Optional[float] = None

    @model_validator(mode="after")
    def _check_shape(self):
        if self.kind == "box" and (self.lower is None or self.upper is None):
            raise ValueError("box obstacles need lower and upper corners")
        if self.kind == "sphere" and (self.center is None or self.radius is None):
            raise ValueError("sphere obstacles need center and radius")
        return self


class Scenario(BaseModel):
    """Scenario file: system, workspace bounds, start/goal and planner overrides."""
    id: str = "scenario"
    system: SystemSpec
    bounds: Optional[List[Tuple[float, float]]] = None
    q_start: Optional[List[float]] = None
    q_goal: Optional[List[float]] = None
    goal_velocity: float = Field(0.0, ge=0)
    v_max: Optional[float] = Field(None, gt=0)
    planner: Dict[str, Any] = {}
    baseline: Dict[str, Any] = {}
    obstacles: List[ObstacleSpec] = []

    @classmethod
    def from_file(cls, path: Path) -> "Scenario":
        data = _read_json(path)
        data.setdefault("id", Path(path).stem)
        try:
            return cls(**data)
        except ValidationError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc

    def require_planning_fields(self) -> None:
        missing = [name for name in ("bounds", "q_start", "q_goal") if getattr(self, name) is None]
        if missing:
            raise ScenarioError(f"scenario {self.id} lacks {', '.join(missing)}")
        dims = {len(self.bounds), len(self.q_start), len(self.q_goal)}
        if len(dims) != 1:
            raise ScenarioError(f"scenario {self.id}: bounds, q_start and q_goal disagree on dimension")


class PathFile(BaseModel):
    """Serialized ConfigPath: breakpoints and per-segment cubic coefficients (ascending degree)."""
    dim: int = Field(gt=0)
    breakpoints: List[float]
    segments: List[List[List[float]]]

    @classmethod
    def from_file(cls, path: Path) -> "PathFile":
        try:
            return cls(**_read_json(path))
        except ValidationError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc


class RunReport(BaseModel):
    scenario_id: str
    command: str
    status: Literal["success", "failure", "error", "mismatch"]
    exit_code: int = 0
    wall_time_s: float = 0.0
    reason: Optional[str] = None
    outputs: Dict[str, str] = {}
    metrics: Dict[str, Any] = {}
    config: Dict[str, Any] = {}


def _read_json(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"file not found: {path}")
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: expected a JSON object")
    return data

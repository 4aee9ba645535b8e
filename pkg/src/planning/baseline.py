"""
State-space KNN-RRT used as a comparison baseline for AVP-RRT.

The tree lives in (q, qd). Extensions steer with per-joint cubic
polynomials of random duration and are cut at the first sample where the
system constraints are violated.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.core.models import BaselineParams, PlannerConfig
from src.kinodynamics.systems import SystemModel
from src.kinodynamics.topp import Trajectory
from src.planning.planner import PlanningProblem, PlanResult

logger = logging.getLogger(__name__)


def wrap_angle(delta: np.ndarray) -> np.ndarray:
    return (np.asarray(delta, dtype=float) + np.pi) % (2.0 * np.pi) - np.pi


def state_metric(x_a: np.ndarray, x_b: np.ndarray, params: Optional[BaselineParams] = None) -> np.ndarray:
    """
    Distance between states x = (q, qd) that treats joint angles as periodic.

    Velocity differences are normalized by params.v_max. Accepts single
    states (2n,) or stacks (K, 2n) on either side.
    """
    v_max = (params or BaselineParams()).v_max
    x_a = np.asarray(x_a, dtype=float)
    x_b = np.asarray(x_b, dtype=float)
    n = x_a.shape[-1] // 2
    dq = x_a[..., :n] - x_b[..., :n]
    dv = x_a[..., n:] - x_b[..., n:]
    angular = np.sqrt(np.maximum(1.0 - np.cos(dq), 0.0)) / 4.0
    return np.sum(angular, axis=-1) + np.sum(np.abs(dv), axis=-1) / (4.0 * v_max)


@dataclass
class SteerSegment:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray

    @property
    def final_state(self) -> np.ndarray:
        return np.concatenate([self.positions[-1], self.velocities[-1]])

    @property
    def duration(self) -> float:
        return float(self.times[-1])


def _cubic_segment(x_from: np.ndarray, x_to: np.ndarray, duration: float, time_step: float) -> SteerSegment:
    n = x_from.size // 2
    q0, v0 = x_from[:n], x_from[n:]
    q1 = q0 + wrap_angle(x_to[:n] - q0)
    v1 = x_to[n:]
    T = duration
    c2 = 3.0 * (q1 - q0) / T ** 2 - (2.0 * v0 + v1) / T
    c3 = -2.0 * (q1 - q0) / T ** 3 + (v0 + v1) / T ** 2
    steps = max(1, int(np.ceil(T / time_step - 1e-9)))
    t = np.linspace(0.0, T, steps + 1)[:, None]
    q = q0 + v0 * t + c2 * t ** 2 + c3 * t ** 3
    qd = v0 + 2.0 * c2 * t + 3.0 * c3 * t ** 2
    qdd = 2.0 * c2 + 6.0 * c3 * t
    return SteerSegment(t[:, 0], q, qd, qdd)


def _cut_at_violation(segment: SteerSegment, system: SystemModel) -> Optional[SteerSegment]:
    values, limits = system.state_constraints(segment.positions, segment.velocities, segment.accelerations)
    admissible = np.all(np.abs(values) <= limits, axis=1)
    if admissible.all():
        return segment
    first_bad = int(np.argmin(admissible))
    if first_bad <= 1:
        return None
    keep = slice(0, first_bad)
    return SteerSegment(
        segment.times[keep], segment.positions[keep], segment.velocities[keep], segment.accelerations[keep]
    )


def steer(
    x_near: np.ndarray,
    x_rand: np.ndarray,
    system: SystemModel,
    rng: np.random.Generator,
    params: Optional[BaselineParams] = None,
) -> Optional[SteerSegment]:
    """
    Tries steer_trials cubic interpolations of random duration from x_near
    toward x_rand, truncates each at its first inadmissible sample and keeps
    the one whose end state is closest to x_rand. None when every trial is
    inadmissible from the start.
    """
    params = params or BaselineParams()
    x_near = np.asarray(x_near, dtype=float)
    x_rand = np.asarray(x_rand, dtype=float)
    best: Optional[SteerSegment] = None
    best_distance = np.inf
    for duration in rng.uniform(params.duration_min, params.duration_max, size=params.steer_trials):
        segment = _cut_at_violation(_cubic_segment(x_near, x_rand, float(duration), params.time_step), system)
        if segment is None or segment.duration <= 0.0:
            continue
        distance = float(state_metric(segment.final_state, x_rand, params))
        if distance < best_distance:
            best, best_distance = segment, distance
    return best


@dataclass(eq=False)
class StateNode:
    state: np.ndarray
    parent: Optional["StateNode"] = None
    segment: Optional[SteerSegment] = None
    index: int = 0


@dataclass
class StateTree:
    nodes: List[StateNode] = field(default_factory=list)
    _states: List[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)

    def add(self, node: StateNode) -> StateNode:
        node.index = len(self.nodes)
        self.nodes.append(node)
        self._states.append(node.state)
        return node

    def nearest(self, x: np.ndarray, k: int, params: BaselineParams) -> List[StateNode]:
        distances = state_metric(np.array(self._states), x, params)
        order = np.argsort(distances, kind="stable")[:k]
        return [self.nodes[i] for i in order]

    def to_dict(self) -> List[Dict[str, Any]]:
        return [
            {
                "index": node.index,
                "state": node.state.tolist(),
                "parent": None if node.parent is None else node.parent.index,
            }
            for node in self.nodes
        ]


def _trajectory_from(node: StateNode) -> Trajectory:
    segments: List[SteerSegment] = []
    while node is not None and node.segment is not None:
        segments.append(node.segment)
        node = node.parent
    segments.reverse()
    times, positions, velocities, accelerations = [], [], [], []
    offset = 0.0
    for i, segment in enumerate(segments):
        start = 0 if i == 0 else 1
        times.append(segment.times[start:] + offset)
        positions.append(segment.positions[start:])
        velocities.append(segment.velocities[start:])
        accelerations.append(segment.accelerations[start:])
        offset += segment.duration
    return Trajectory(
        np.concatenate(times), np.vstack(positions), np.vstack(velocities), np.vstack(accelerations)
    )


def plan_knnrrt_baseline(
    problem: PlanningProblem, config: PlannerConfig, params: Optional[BaselineParams] = None
) -> PlanResult:
    """KNN-RRT in state space toward (q_goal, 0), stopping after params.max_extensions extensions."""
    params = params or BaselineParams()
    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    n = problem.dim
    if problem.goal_velocity > 0.0:
        logger.warning("The state-space baseline targets a rest state; goal_velocity is ignored")
    x_goal = np.concatenate([problem.q_goal, np.zeros(n)])
    x_start = np.concatenate([problem.q_start, np.zeros(n)])
    tree = StateTree()
    tree.add(StateNode(x_start))

    if float(state_metric(x_start, x_goal, params)) <= params.goal_tolerance:
        trajectory = Trajectory(np.zeros(1), problem.q_start[None, :].copy(), np.zeros((1, n)), np.zeros((1, n)))
        return PlanResult(True, 0, trajectory, trees=[tree], wall_time_s=time.perf_counter() - started, durations=[0.0])

    low = np.concatenate([problem.bounds[:, 0], np.full(n, -params.v_max)])
    high = np.concatenate([problem.bounds[:, 1], np.full(n, params.v_max)])
    for rep in range(1, params.max_extensions + 1):
        x_rand = x_goal if rep % params.goal_every == 0 else rng.uniform(low, high)
        best: Optional[SteerSegment] = None
        best_parent: Optional[StateNode] = None
        best_distance = np.inf
        for node in tree.nearest(x_rand, config.k_neighbors, params):
            segment = steer(node.state, x_rand, problem.system, rng, params)
            if segment is None:
                continue
            if problem.checker.obstacles and not np.all(problem.checker.free_mask(segment.positions)):
                continue
            distance = float(state_metric(segment.final_state, x_rand, params))
            if distance < best_distance:
                best, best_parent, best_distance = segment, node, distance
        if best is None:
            continue
        node = tree.add(StateNode(best.final_state, best_parent, best))
        if float(state_metric(node.state, x_goal, params)) <= params.goal_tolerance:
            trajectory = _trajectory_from(node)
            logger.info(
                f"KNN-RRT reached the goal after {rep} extensions, {len(tree)} nodes, duration {trajectory.duration:.3f} s"
            )
            return PlanResult(
                True, rep, trajectory, trees=[tree],
                wall_time_s=time.perf_counter() - started, durations=[trajectory.duration],
            )
    return PlanResult(
        False, params.max_extensions, trees=[tree], reason="max_extensions",
        wall_time_s=time.perf_counter() - started,
    )

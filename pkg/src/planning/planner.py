"""
AVP-RRT: a configuration-space RRT whose vertices carry the interval of
path velocities reachable at their configuration. Extensions are C1 cubic
paths checked for collisions and propagated with AVP; the solution path is
retimed with TOPP once the goal is connected.

Includes the bi-directional variant (start tree grown with avp_forward,
goal tree with avp_backward), bridge-test sampling and shortcutting.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from src.core.errors import ContinuityError, DegeneratePathError, InfeasibleError, KinodynamicsError
from src.core.models import NumericsOptions, PlannerConfig
from src.kinodynamics.avp import AvpOutcome, VelocityInterval, avp_backward, avp_forward
from src.kinodynamics.path import (
    ConfigPath,
    concatenate_all,
    hermite_segment,
    interpolate_c1,
    random_unit_vector,
)
from src.kinodynamics.phaseplane import PathDynamics, project_constraints
from src.kinodynamics.systems import SystemModel
from src.kinodynamics.topp import (
    Trajectory,
    compute_clc,
    profile_duration,
    retime,
    topp_profile,
)
from src.planning.collision import CollisionChecker

logger = logging.getLogger(__name__)

COINCIDENT = 1e-9
# vertices scanned linearly before the k-d tree is rebuilt
KDTREE_BATCH = 64


@dataclass(eq=False)
class Vertex:
    """
    Start-tree vertices store the interval reached at config through inpath
    (which ends at config). Goal-tree vertices store the interval of
    velocities at config from which the goal is reachable; their inpath
    starts at config and ends at the parent.
    """
    config: np.ndarray
    interval: VelocityInterval
    inpath: Optional[ConfigPath] = None
    parent: Optional["Vertex"] = None
    out_tangent: Optional[np.ndarray] = None
    index: int = 0


class Tree:
    def __init__(self, root: Optional[Vertex] = None, backward: bool = False):
        self.vertices: List[Vertex] = []
        self.backward = backward
        self._kdtree: Optional[cKDTree] = None
        self._indexed = 0
        if root is not None:
            self.add(root)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def root(self) -> Vertex:
        return self.vertices[0]

    def add(self, vertex: Vertex) -> Vertex:
        vertex.index = len(self.vertices)
        self.vertices.append(vertex)
        return vertex

    def nearest(self, q: np.ndarray, k: int) -> List[Vertex]:
        """k closest vertices; recent additions are scanned until the backlog outgrows the indexed part."""
        if not self.vertices:
            return []
        q = np.asarray(q, dtype=float)
        n = len(self.vertices)
        if self._kdtree is None or n - self._indexed > max(KDTREE_BATCH, self._indexed):
            self._kdtree = cKDTree(np.array([v.config for v in self.vertices]))
            self._indexed = n
        k = min(k, n)
        distances, idx = self._kdtree.query(q, k=min(k, self._indexed))
        distances, idx = np.atleast_1d(distances), np.atleast_1d(idx)
        if self._indexed < n:
            backlog = np.array([v.config for v in self.vertices[self._indexed:]])
            distances = np.concatenate([distances, np.linalg.norm(backlog - q, axis=1)])
            idx = np.concatenate([idx, np.arange(self._indexed, n)])
        order = np.lexsort((idx, distances))[:k]
        return [self.vertices[i] for i in idx[order]]

    def to_dict(self) -> List[Dict[str, Any]]:
        return [
            {
                "index": v.index,
                "config": v.config.tolist(),
                "interval": v.interval.to_list(),
                "parent": None if v.parent is None else v.parent.index,
            }
            for v in self.vertices
        ]


def nearest_neighbors(tree: Tree, q: Sequence[float], k: int) -> List[Vertex]:
    """At most k vertices sorted by increasing Euclidean distance to q."""
    return tree.nearest(np.asarray(q, dtype=float), k)


def interval_intersection(a: VelocityInterval, b: VelocityInterval) -> Optional[VelocityInterval]:
    return a.intersect(b)


@dataclass
class PlanningProblem:
    system: SystemModel
    bounds: np.ndarray
    q_start: np.ndarray
    q_goal: np.ndarray
    goal_velocity: float = 0.0
    checker: CollisionChecker = field(default_factory=CollisionChecker)

    @property
    def dim(self) -> int:
        return int(self.bounds.shape[0])

    def default_radius(self) -> float:
        diagonal = float(np.linalg.norm(self.bounds[:, 1] - self.bounds[:, 0]))
        return 0.5 * diagonal / math.sqrt(self.dim)


@dataclass
class PlanResult:
    success: bool
    iterations: int
    trajectory: Optional[Trajectory] = None
    path: Optional[ConfigPath] = None
    trees: List[Tree] = field(default_factory=list)
    reason: Optional[str] = None
    wall_time_s: float = 0.0
    durations: List[float] = field(default_factory=list)

    @property
    def vertices(self) -> int:
        return sum(len(t) for t in self.trees)


@dataclass
class ExtensionContext:
    """Everything one extension or connection attempt needs besides the tree."""
    problem: PlanningProblem
    config: PlannerConfig
    numerics: NumericsOptions
    rng: np.random.Generator
    radius: float

    def project(self, path: ConfigPath, grid: Optional[int] = None) -> PathDynamics:
        return project_constraints(
            self.problem.system, path, grid or self.config.extension_grid,
            zero_inertia_threshold=self.numerics.zero_inertia_threshold,
        )

    def propagate(self, pd: PathDynamics, interval: VelocityInterval, backward: bool = False) -> AvpOutcome:
        clc = compute_clc(
            pd,
            discontinuity_threshold=self.numerics.discontinuity_threshold,
            singular_offset=self.numerics.singular_offset,
            grace_cells=self.numerics.lc_grace_cells,
        )
        run = avp_backward if backward else avp_forward
        return run(
            pd, interval, self.config.epsilon, clc=clc,
            velocity_tolerance=self.numerics.velocity_tolerance,
            grace_cells=self.numerics.lc_grace_cells,
        )

    def tangent_of(self, vertex: Vertex) -> np.ndarray:
        if vertex.out_tangent is not None:
            return vertex.out_tangent
        return random_unit_vector(self.rng, self.problem.dim)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / float(np.linalg.norm(v))


def extend(tree: Tree, q_rand: np.ndarray, ctx: ExtensionContext) -> Optional[Vertex]:
    """
    Tries the K nearest vertices in order and returns the first new vertex
    whose path is collision-free and admits a non-empty AVP interval.
    Goal trees (tree.backward) grow paths that end at the existing vertex.
    """
    q_rand = np.asarray(q_rand, dtype=float)
    for vertex in tree.nearest(q_rand, ctx.config.k_neighbors):
        delta = q_rand - vertex.config
        dist = float(np.linalg.norm(delta))
        if dist < COINCIDENT:
            logger.debug(f"Vertex {vertex.index}: sample coincides with the vertex")
            continue
        q_new = vertex.config + min(1.0, ctx.radius / dist) * delta
        tangent = ctx.tangent_of(vertex)
        try:
            if tree.backward:
                path = interpolate_c1(q_new, vertex.config - q_new, vertex.config, tangent)
            else:
                path = interpolate_c1(vertex.config, tangent, q_new)
        except DegeneratePathError as exc:
            logger.debug(f"Vertex {vertex.index}: {exc}")
            continue
        if not ctx.problem.checker.path_free(path, ctx.config.collision_resolution):
            logger.debug(f"Vertex {vertex.index}: extension collides")
            continue
        outcome = ctx.propagate(ctx.project(path), vertex.interval, backward=tree.backward)
        if not outcome.success:
            logger.debug(f"Vertex {vertex.index}: AVP failure {outcome.to_dict()['case_tag']}")
            continue
        if tree.backward:
            new_tangent = path.unit_tangent(0.0)
        else:
            new_tangent = path.unit_tangent(path.s_end)
        return tree.add(Vertex(q_new, outcome.interval, path, vertex, new_tangent))
    return None


@dataclass
class Connection:
    path: ConfigPath
    interval: VelocityInterval


def connect(vertex: Vertex, q_goal: np.ndarray, goal_velocity: float, ctx: ExtensionContext) -> Optional[Connection]:
    """Path from vertex to q_goal whose AVP interval contains the goal path velocity."""
    q_goal = np.asarray(q_goal, dtype=float)
    if float(np.linalg.norm(q_goal - vertex.config)) < COINCIDENT:
        return None
    try:
        path = interpolate_c1(vertex.config, ctx.tangent_of(vertex), q_goal)
    except DegeneratePathError:
        return None
    if not ctx.problem.checker.path_free(path, ctx.config.collision_resolution):
        return None
    outcome = ctx.propagate(ctx.project(path), vertex.interval)
    if not outcome.success:
        return None
    sdot_goal = goal_velocity / float(np.linalg.norm(path.evaluate(path.s_end)[1]))
    if not outcome.interval.contains(sdot_goal, ctx.numerics.velocity_tolerance):
        logger.debug(
            f"Goal velocity {sdot_goal:.4g} outside [{outcome.interval.lo:.4g}, {outcome.interval.hi:.4g}]"
        )
        return None
    return Connection(path, outcome.interval)


def reconstruct_path(vertex: Vertex) -> List[ConfigPath]:
    """Inpaths from the root of a start tree down to vertex, in traversal order."""
    pieces: List[ConfigPath] = []
    while vertex is not None and vertex.inpath is not None:
        pieces.append(vertex.inpath)
        vertex = vertex.parent
    return pieces[::-1]


def _goal_chain(vertex: Vertex) -> List[ConfigPath]:
    """Outgoing paths of a goal-tree vertex up to the goal root."""
    pieces: List[ConfigPath] = []
    while vertex is not None and vertex.inpath is not None:
        pieces.append(vertex.inpath)
        vertex = vertex.parent
    return pieces


def bridge_sample(
    checker: CollisionChecker, bounds: np.ndarray, rng: np.random.Generator, bridge_length: float
) -> Optional[np.ndarray]:
    """Midpoint of a colliding pair of configurations, when that midpoint is free."""
    q_a = rng.uniform(bounds[:, 0], bounds[:, 1])
    q_b = q_a + bridge_length * random_unit_vector(rng, bounds.shape[0])
    if checker.is_free(q_a) or checker.is_free(q_b):
        return None
    midpoint = 0.5 * (q_a + q_b)
    return midpoint if checker.is_free(midpoint) else None


def _random_config(ctx: ExtensionContext, goal: np.ndarray) -> np.ndarray:
    bounds = ctx.problem.bounds
    if ctx.rng.random() < ctx.config.goal_bias:
        return goal
    if ctx.config.bridge_test:
        for _ in range(ctx.config.bridge_attempts):
            q = bridge_sample(ctx.problem.checker, bounds, ctx.rng, ctx.config.bridge_length)
            if q is not None:
                return q
    return ctx.rng.uniform(bounds[:, 0], bounds[:, 1])


def _retime_solution(
    pieces: List[ConfigPath], problem: PlanningProblem, numerics: NumericsOptions
) -> Tuple[ConfigPath, Trajectory]:
    path = concatenate_all(pieces)
    pd = project_constraints(
        problem.system, path, numerics.grid, zero_inertia_threshold=numerics.zero_inertia_threshold
    )
    sdot_goal = problem.goal_velocity / float(np.linalg.norm(path.evaluate(path.s_end)[1]))
    clc = compute_clc(
        pd,
        discontinuity_threshold=numerics.discontinuity_threshold,
        singular_offset=numerics.singular_offset,
        grace_cells=numerics.lc_grace_cells,
    )
    profile = topp_profile(pd, 0.0, sdot_goal, clc=clc, velocity_tolerance=numerics.velocity_tolerance)
    trajectory = retime(path, profile, 0.0, problem.goal_velocity, tolerance=max(numerics.velocity_tolerance, 1e-6))
    return path, trajectory


def _trivial_result(problem: PlanningProblem, started: float) -> Optional[PlanResult]:
    if float(np.linalg.norm(problem.q_goal - problem.q_start)) >= COINCIDENT or problem.goal_velocity != 0.0:
        return None
    q = problem.q_start[None, :]
    zeros = np.zeros_like(q)
    trajectory = Trajectory(np.zeros(1), q.copy(), zeros, zeros.copy())
    logger.info("Start and goal coincide at rest: nothing to plan")
    return PlanResult(True, 0, trajectory, None, [], wall_time_s=time.perf_counter() - started, durations=[0.0])


def _context(problem: PlanningProblem, config: PlannerConfig, numerics: NumericsOptions) -> ExtensionContext:
    radius = config.radius if config.radius is not None else problem.default_radius()
    return ExtensionContext(problem, config, numerics, np.random.default_rng(config.seed), radius)


def plan_avprrt(
    problem: PlanningProblem, config: PlannerConfig, numerics: Optional[NumericsOptions] = None
) -> PlanResult:
    """Uni-directional AVP-RRT from q_start at rest to q_goal at goal_velocity."""
    numerics = numerics or NumericsOptions()
    started = time.perf_counter()
    trivial = _trivial_result(problem, started)
    if trivial is not None:
        return trivial
    ctx = _context(problem, config, numerics)
    tree = Tree(Vertex(problem.q_start.copy(), VelocityInterval(0.0, 0.0)))

    for rep in range(1, config.max_reps + 1):
        q_rand = _random_config(ctx, problem.q_goal)
        vertex = extend(tree, q_rand, ctx)
        if vertex is None:
            continue
        logger.debug(
            f"rep {rep}: vertex {vertex.index} at {np.round(vertex.config, 3).tolist()} "
            f"interval [{vertex.interval.lo:.3f}, {vertex.interval.hi:.3f}]"
        )
        connection = connect(vertex, problem.q_goal, problem.goal_velocity, ctx)
        if connection is None:
            continue
        try:
            path, trajectory = _retime_solution(reconstruct_path(vertex) + [connection.path], problem, numerics)
        except (InfeasibleError, ContinuityError) as exc:
            logger.warning(f"rep {rep}: goal connected but retiming failed ({exc}), continuing")
            continue
        logger.info(f"AVP-RRT solved after {rep} iterations, {len(tree)} vertices, duration {trajectory.duration:.3f} s")
        return PlanResult(
            True, rep, trajectory, path, [tree],
            wall_time_s=time.perf_counter() - started, durations=[trajectory.duration],
        )
    return PlanResult(
        False, config.max_reps, trees=[tree], reason="max_reps",
        wall_time_s=time.perf_counter() - started,
    )


def _bridge(
    forward_vertex: Vertex, goal_vertex: Vertex, ctx: ExtensionContext
) -> Optional[ConfigPath]:
    """Path from a start-tree vertex to a goal-tree vertex with overlapping velocity intervals."""
    gap = float(np.linalg.norm(goal_vertex.config - forward_vertex.config))
    if gap < COINCIDENT or gap > ctx.radius:
        return None
    try:
        path = interpolate_c1(
            forward_vertex.config, ctx.tangent_of(forward_vertex), goal_vertex.config, goal_vertex.out_tangent
        )
    except DegeneratePathError:
        return None
    if not ctx.problem.checker.path_free(path, ctx.config.collision_resolution):
        return None
    outcome = ctx.propagate(ctx.project(path), forward_vertex.interval)
    if not outcome.success or interval_intersection(outcome.interval, goal_vertex.interval) is None:
        return None
    return path


def plan_birrt(
    problem: PlanningProblem, config: PlannerConfig, numerics: Optional[NumericsOptions] = None
) -> PlanResult:
    """Bi-directional AVP-RRT; trees alternate extensions and try to bridge after each one."""
    numerics = numerics or NumericsOptions()
    started = time.perf_counter()
    trivial = _trivial_result(problem, started)
    if trivial is not None:
        return trivial
    ctx = _context(problem, config, numerics)
    start_tree = Tree(Vertex(problem.q_start.copy(), VelocityInterval(0.0, 0.0)))
    goal_tree = Tree(Vertex(problem.q_goal.copy(), VelocityInterval.point(problem.goal_velocity)), backward=True)

    for rep in range(1, config.max_reps + 1):
        grow_start = rep % 2 == 1
        tree, other = (start_tree, goal_tree) if grow_start else (goal_tree, start_tree)
        q_rand = _random_config(ctx, other.root.config)
        vertex = extend(tree, q_rand, ctx)
        if vertex is None:
            continue
        for partner in other.nearest(vertex.config, config.k_neighbors):
            forward_vertex, goal_vertex = (vertex, partner) if grow_start else (partner, vertex)
            bridge = _bridge(forward_vertex, goal_vertex, ctx)
            if bridge is None:
                continue
            pieces = reconstruct_path(forward_vertex) + [bridge] + _goal_chain(goal_vertex)
            try:
                path, trajectory = _retime_solution(pieces, problem, numerics)
            except (InfeasibleError, ContinuityError) as exc:
                logger.warning(f"rep {rep}: trees bridged but retiming failed ({exc}), continuing")
                continue
            logger.info(
                f"Bi-directional AVP-RRT solved after {rep} iterations, "
                f"{len(start_tree) + len(goal_tree)} vertices, duration {trajectory.duration:.3f} s"
            )
            return PlanResult(
                True, rep, trajectory, path, [start_tree, goal_tree],
                wall_time_s=time.perf_counter() - started, durations=[trajectory.duration],
            )
    return PlanResult(
        False, config.max_reps, trees=[start_tree, goal_tree], reason="max_reps",
        wall_time_s=time.perf_counter() - started,
    )


@dataclass
class ShortcutResult:
    trajectory: Trajectory
    path: ConfigPath
    durations: List[float]


def shortcut(
    trajectory: Trajectory,
    path: ConfigPath,
    system: SystemModel,
    iterations: int,
    rng: np.random.Generator,
    checker: Optional[CollisionChecker] = None,
    numerics: Optional[NumericsOptions] = None,
    collision_resolution: int = 100,
) -> ShortcutResult:
    """
    Replaces random stretches of the path by C1 cubics matching the original
    position and derivative at both cut points, and keeps a replacement only
    when the retimed trajectory is strictly faster. durations records the
    duration after every accepted replacement.
    """
    numerics = numerics or NumericsOptions()
    checker = checker or CollisionChecker()
    durations = [trajectory.duration]
    if iterations <= 0:
        return ShortcutResult(trajectory, path, durations)
    v_beg = float(np.linalg.norm(trajectory.velocities[0]))
    v_end = float(np.linalg.norm(trajectory.velocities[-1]))
    min_gap = 1e-6 * path.s_end

    for it in range(iterations):
        s_a, s_b = np.sort(rng.uniform(0.0, path.s_end, size=2))
        if s_b - s_a < min_gap:
            continue
        q_a, d_a, _ = path.evaluate(s_a)
        q_b, d_b, _ = path.evaluate(s_b)
        chord = float(np.linalg.norm(q_b - q_a))
        if chord < COINCIDENT:
            continue
        try:
            segment = hermite_segment(q_a, d_a, q_b, d_b, chord)
            pieces = []
            if s_a > min_gap:
                pieces.append(path.subpath(0.0, s_a))
            pieces.append(segment)
            if path.s_end - s_b > min_gap:
                pieces.append(path.subpath(s_b, path.s_end))
            candidate = concatenate_all(pieces)
        except KinodynamicsError as exc:
            logger.debug(f"shortcut {it}: {exc}")
            continue
        if not checker.path_free(candidate, collision_resolution):
            continue
        try:
            pd = project_constraints(system, candidate, numerics.grid, numerics.zero_inertia_threshold)
            sdot_beg = v_beg / float(np.linalg.norm(candidate.evaluate(0.0)[1]))
            sdot_end = v_end / float(np.linalg.norm(candidate.evaluate(candidate.s_end)[1]))
            clc = compute_clc(
                pd,
                discontinuity_threshold=numerics.discontinuity_threshold,
                singular_offset=numerics.singular_offset,
                grace_cells=numerics.lc_grace_cells,
            )
            profile = topp_profile(pd, sdot_beg, sdot_end, clc=clc, velocity_tolerance=numerics.velocity_tolerance)
        except InfeasibleError:
            continue
        if profile_duration(profile) >= durations[-1] * (1.0 - 1e-9):
            continue
        retimed = retime(candidate, profile, v_beg, v_end, tolerance=max(numerics.velocity_tolerance, 1e-6))
        path, trajectory = candidate, retimed
        durations.append(retimed.duration)
        logger.debug(f"shortcut {it}: accepted, duration {retimed.duration:.4f} s")
    logger.info(f"Shortcutting: {durations[0]:.4f} s -> {durations[-1]:.4f} s ({len(durations) - 1} accepted)")
    return ShortcutResult(trajectory, path, durations)

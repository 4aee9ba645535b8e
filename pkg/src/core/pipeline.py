"""
Runners behind the CLI commands.

Each runner loads its input files, runs the algorithm, writes its output
files under <out>/<scenario id>/<command>/ and returns a RunReport whose
exit_code the CLI passes on: 0 success, 1 input error, 2 infeasible or
planner failure, 3 oracle mismatch.
"""
import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from src.config import Settings
from src.core import bench
from src.core.errors import InfeasibleError, KinodynamicsError, ScenarioError
from src.core.models import BaselineParams, PathFile, PlannerConfig, RunReport, Scenario
from src.core.reporting import write_csv, write_json, write_rows
from src.kinodynamics.avp import VelocityInterval, avp_backward, avp_forward
from src.kinodynamics.oracle import agrees_with, reachable_final_set
from src.kinodynamics.path import ConfigPath
from src.kinodynamics.phaseplane import PathDynamics, dump_csv, project_constraints
from src.kinodynamics.systems import SystemModel, build_system
from src.kinodynamics.topp import compute_clc, retime, saturation_report, topp_profile
from src.planning.baseline import plan_knnrrt_baseline
from src.planning.collision import CollisionChecker
from src.planning.planner import PlanningProblem, PlanResult, plan_avprrt, plan_birrt, shortcut

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_MISMATCH = 3


class RunContext:
    """Collects the state of one command run until it becomes a RunReport."""

    def __init__(self, command: str, settings: Settings, out_dir: Optional[Path] = None):
        self.command = command
        self.settings = settings
        self.out_root = Path(out_dir) if out_dir is not None else settings.output_dir
        self.scenario_id = "unknown"
        self.outputs: Dict[str, str] = {}
        self.metrics: Dict[str, Any] = {}
        self.config: Dict[str, Any] = {"numerics": settings.numerics.model_dump(mode="json")}
        self.started = time.perf_counter()

    @property
    def out_dir(self) -> Path:
        return self.out_root / self.scenario_id / self.command

    def output(self, key: str, file_path: Path) -> None:
        self.outputs[key] = str(file_path)

    def csv(self, key: str, name: str, header, table) -> None:
        self.output(key, write_csv(self.out_dir / name, header, table, self.settings.app.csv_precision))

    def report(self, status: str, exit_code: int, reason: Optional[str] = None) -> RunReport:
        report = RunReport(
            scenario_id=self.scenario_id,
            command=self.command,
            status=status,
            exit_code=exit_code,
            wall_time_s=time.perf_counter() - self.started,
            reason=reason,
            outputs=dict(self.outputs),
            metrics=self.metrics,
            config=self.config,
        )
        if self.scenario_id != "unknown":
            report_path = self.out_dir / "report.json"
            report.outputs["report"] = str(report_path)
            write_json(report_path, report)
        return report


def _guarded(ctx: RunContext, body: Callable[[], RunReport]) -> RunReport:
    try:
        return body()
    except (ScenarioError, ValidationError, ValueError, OSError) as exc:
        logger.error(f"{ctx.command}: invalid input ({exc})")
        return ctx.report("error", EXIT_INPUT, reason=str(exc))
    except KinodynamicsError as exc:
        logger.exception(f"{ctx.command}: evaluation failed")
        return ctx.report("error", EXIT_INPUT, reason=str(exc))


def load_scenario(ctx: RunContext, scenario_file: Path) -> Tuple[Scenario, SystemModel]:
    scenario = Scenario.from_file(scenario_file)
    ctx.scenario_id = scenario.id
    system = build_system(scenario.system.model_dump())
    ctx.config["system"] = system.to_dict()
    return scenario, system


def load_path(path_file: Path) -> ConfigPath:
    return ConfigPath.from_dict(PathFile.from_file(path_file).model_dump())


def _project(ctx: RunContext, system: SystemModel, path: ConfigPath) -> PathDynamics:
    numerics = ctx.settings.numerics
    pd = project_constraints(system, path, numerics.grid, numerics.zero_inertia_threshold)
    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    dump_csv(pd, ctx.out_dir / "phaseplane.csv", ctx.settings.app.csv_precision)
    ctx.output("phaseplane", ctx.out_dir / "phaseplane.csv")
    return pd


def _clc(ctx: RunContext, pd: PathDynamics):
    numerics = ctx.settings.numerics
    return compute_clc(
        pd,
        discontinuity_threshold=numerics.discontinuity_threshold,
        singular_offset=numerics.singular_offset,
        grace_cells=numerics.lc_grace_cells,
    )


# ---------------------------------------------------------------------------
# topp
# ---------------------------------------------------------------------------

def run_topp(
    scenario_file: Path, path_file: Path, sdot_beg: float, sdot_end: float,
    settings: Settings, out_dir: Optional[Path] = None,
) -> RunReport:
    """Time-optimal retiming of a path file between two path velocities."""
    ctx = RunContext("topp", settings, out_dir)

    def body() -> RunReport:
        _, system = load_scenario(ctx, scenario_file)
        path = load_path(path_file)
        ctx.metrics.update(sdot_beg=sdot_beg, sdot_end=sdot_end)
        pd = _project(ctx, system, path)
        clc = _clc(ctx, pd)
        try:
            profile = topp_profile(pd, sdot_beg, sdot_end, clc=clc, velocity_tolerance=settings.numerics.velocity_tolerance)
        except InfeasibleError as exc:
            logger.error(f"TOPP infeasible on {ctx.scenario_id}: {exc.reason}")
            return ctx.report("failure", EXIT_INFEASIBLE, reason=exc.reason)
        ctx.csv("profile", "profile.csv", *profile.to_table())
        v_beg = sdot_beg * float(np.linalg.norm(path.evaluate(0.0)[1]))
        v_end = sdot_end * float(np.linalg.norm(path.evaluate(path.s_end)[1]))
        trajectory = retime(path, profile, v_beg, v_end, tolerance=max(settings.numerics.velocity_tolerance, 1e-6))
        ctx.csv("trajectory", "trajectory.csv", *trajectory.to_table())
        saturation = saturation_report(system, trajectory)
        ctx.metrics.update(
            duration_s=trajectory.duration,
            saturated_fraction=saturation.saturated_fraction,
            max_violation=saturation.max_violation,
        )
        logger.info(f"TOPP on {ctx.scenario_id}: duration {trajectory.duration:.6g} s")
        return ctx.report("success", EXIT_OK)

    return _guarded(ctx, body)


# ---------------------------------------------------------------------------
# avp
# ---------------------------------------------------------------------------

def run_avp(
    scenario_file: Path, path_file: Path, lo: float, hi: float, direction: str,
    settings: Settings, out_dir: Optional[Path] = None,
) -> RunReport:
    """Propagates [lo, hi] across the path (fwd) or back to its start (bwd)."""
    ctx = RunContext("avp", settings, out_dir)

    def body() -> RunReport:
        _, system = load_scenario(ctx, scenario_file)
        path = load_path(path_file)
        interval = VelocityInterval(lo, hi)
        pd = _project(ctx, system, path)
        propagate = avp_forward if direction == "fwd" else avp_backward
        outcome = propagate(
            pd, interval, settings.numerics.epsilon, clc=_clc(ctx, pd),
            velocity_tolerance=settings.numerics.velocity_tolerance,
            grace_cells=settings.numerics.lc_grace_cells,
        )
        diagnostics = outcome.diagnostics
        ctx.output("trace", write_json(ctx.out_dir / "avp.json", outcome.to_dict()))
        if diagnostics.phi is not None:
            ctx.csv("phi", "phi.csv", *diagnostics.phi.to_table())
        if diagnostics.clc is not None:
            ctx.csv("clc", "clc.csv", *diagnostics.clc.to_table())
        for i, psi in enumerate(diagnostics.psi):
            ctx.csv(f"psi_{i}", f"psi_{i}.csv", *psi.to_table())
        ctx.metrics.update(direction=direction, start=[lo, hi], **outcome.to_dict())
        ctx.metrics.pop("trace")
        if not outcome.success:
            return ctx.report("failure", EXIT_INFEASIBLE, reason=outcome.case_tag.value)
        return ctx.report("success", EXIT_OK)

    return _guarded(ctx, body)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def run_oracle(
    scenario_file: Path, path_file: Path, lo: float, hi: float,
    settings: Settings, out_dir: Optional[Path] = None,
) -> RunReport:
    """Grid reachability from [lo, hi] compared with avp_forward on the same path."""
    ctx = RunContext("oracle", settings, out_dir)
    oracle = settings.oracle

    def body() -> RunReport:
        scenario, system = load_scenario(ctx, scenario_file)
        path = load_path(path_file)
        start = VelocityInterval(lo, hi)
        pd = _project(ctx, system, path)
        grid = reachable_final_set(pd, start, oracle.n_s, oracle.n_v, v_max=scenario.v_max, v_margin=oracle.v_margin)
        ctx.csv("reachability", "reachability.csv", *grid.to_table())
        outcome = avp_forward(
            pd, start, settings.numerics.epsilon, clc=_clc(ctx, pd),
            velocity_tolerance=settings.numerics.velocity_tolerance,
            grace_cells=settings.numerics.lc_grace_cells,
        )
        agrees, gap = agrees_with(outcome.interval, grid, oracle.tolerance_cells, oracle.relative_tolerance)
        reference = grid.final_interval()
        ctx.metrics.update(
            interval=None if outcome.interval is None else outcome.interval.to_list(),
            oracle_interval=None if reference is None else reference.to_list(),
            oracle_runs=[list(run) for run in grid.final_runs()],
            contiguous=grid.is_contiguous,
            cell_size=grid.dv,
            max_gap=gap,
        )
        ctx.config["oracle"] = oracle.model_dump(mode="json")
        if not agrees:
            logger.error(f"Oracle and AVP disagree on {ctx.scenario_id} (gap {gap:.4g})")
            return ctx.report("mismatch", EXIT_MISMATCH, reason="oracle_mismatch")
        return ctx.report("success", EXIT_OK)

    return _guarded(ctx, body)


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------

def planning_inputs(
    scenario: Scenario, system: SystemModel, settings: Settings, seed: Optional[int] = None
) -> Tuple[PlanningProblem, PlannerConfig, BaselineParams]:
    """Problem plus resolved planner and baseline parameters (settings overridden by the scenario)."""
    scenario.require_planning_fields()
    bounds = np.asarray(scenario.bounds, dtype=float)
    if bounds.shape[0] != system.dim:
        raise ScenarioError(f"scenario {scenario.id}: {bounds.shape[0]} bounds for a {system.dim}-DOF system")
    planner_data = {**settings.planner.model_dump(), "epsilon": settings.numerics.epsilon, **scenario.planner}
    if seed is not None:
        planner_data["seed"] = seed
    config = PlannerConfig(**planner_data)
    baseline = BaselineParams(**{**settings.baseline.model_dump(), **scenario.baseline})
    problem = PlanningProblem(
        system=system,
        bounds=bounds,
        q_start=np.asarray(scenario.q_start, dtype=float),
        q_goal=np.asarray(scenario.q_goal, dtype=float),
        goal_velocity=scenario.goal_velocity,
        checker=CollisionChecker.from_specs(scenario.obstacles, system.dim),
    )
    return problem, config, baseline


def solve(problem: PlanningProblem, config: PlannerConfig, baseline: BaselineParams, settings: Settings) -> PlanResult:
    if config.variant == "avp-birrt":
        return plan_birrt(problem, config, settings.numerics)
    if config.variant == "knn-rrt":
        return plan_knnrrt_baseline(problem, config, baseline)
    return plan_avprrt(problem, config, settings.numerics)


def run_plan(
    scenario_file: Path, settings: Settings, out_dir: Optional[Path] = None,
    seed: Optional[int] = None, shortcut_iterations: Optional[int] = None,
) -> RunReport:
    """Plans from q_start at rest to q_goal; optionally shortcuts the retimed result."""
    ctx = RunContext("plan", settings, out_dir)

    def body() -> RunReport:
        scenario, system = load_scenario(ctx, scenario_file)
        problem, config, baseline = planning_inputs(scenario, system, settings, seed)
        if shortcut_iterations is not None:
            config = config.model_copy(update={"shortcut_iterations": shortcut_iterations})
        ctx.config["planner"] = config.model_dump(mode="json")
        if config.variant == "knn-rrt":
            ctx.config["baseline"] = baseline.model_dump(mode="json")
        logger.info(f"Planning {ctx.scenario_id} with {config.variant} (seed {config.seed})")

        result = solve(problem, config, baseline, settings)
        ctx.output("tree", write_json(ctx.out_dir / "tree.json", [tree.to_dict() for tree in result.trees]))
        ctx.metrics.update(iterations=result.iterations, vertices=result.vertices, search_time_s=result.wall_time_s)
        if not result.success:
            ctx.output("result", write_json(ctx.out_dir / "result.json", _result_json(ctx, result, None)))
            logger.error(f"{config.variant} failed on {ctx.scenario_id} after {result.iterations} iterations")
            return ctx.report("failure", EXIT_INFEASIBLE, reason=result.reason)

        trajectory = result.trajectory
        if config.shortcut_iterations > 0 and result.path is not None:
            shortened = shortcut(
                trajectory, result.path, system, config.shortcut_iterations,
                np.random.default_rng(config.seed + 1), problem.checker, settings.numerics,
                config.collision_resolution,
            )
            trajectory = shortened.trajectory
            ctx.metrics["shortcut_durations"] = shortened.durations
            write_json(ctx.out_dir / "path.json", shortened.path.to_dict())
            ctx.output("path", ctx.out_dir / "path.json")
        elif result.path is not None:
            ctx.output("path", write_json(ctx.out_dir / "path.json", result.path.to_dict()))
        ctx.csv("trajectory", "trajectory.csv", *trajectory.to_table())
        saturation = saturation_report(system, trajectory)
        ctx.metrics.update(
            duration_s=trajectory.duration,
            saturated_fraction=saturation.saturated_fraction,
            max_violation=saturation.max_violation,
        )
        ctx.output("result", write_json(ctx.out_dir / "result.json", _result_json(ctx, result, trajectory.duration)))
        return ctx.report("success", EXIT_OK)

    return _guarded(ctx, body)


def _result_json(ctx: RunContext, result: PlanResult, duration: Optional[float]) -> Dict[str, Any]:
    return {
        "status": "success" if result.success else "failure",
        "iterations": result.iterations,
        "vertices": result.vertices,
        "wall_time_s": result.wall_time_s,
        "trajectory_csv_ref": ctx.outputs.get("trajectory"),
        "duration_s": duration,
    }


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def run_bench(
    scenario_dir: Path, repeats: int, settings: Settings, out_dir: Optional[Path] = None,
    seed: int = 0, timing_paths: int = 0,
) -> RunReport:
    """
    Runs every scenario of scenario_dir that declares a planning problem
    `repeats` times with seeds seed + run index and writes bench.csv. A
    positive timing_paths adds the AVP/TOPP timing comparison on each system.
    """
    ctx = RunContext("bench", settings, out_dir)
    ctx.scenario_id = Path(scenario_dir).name or "bench"

    def body() -> RunReport:
        directory = Path(scenario_dir)
        if not directory.is_dir():
            raise ScenarioError(f"not a directory: {directory}")
        jobs: List[Tuple[Scenario, SystemModel, int]] = []
        systems: Dict[str, Tuple[SystemModel, np.ndarray]] = {}
        for scenario_file in sorted(directory.glob("*.json")):
            try:
                scenario = Scenario.from_file(scenario_file)
            except ScenarioError as exc:
                logger.debug(f"Skipping {scenario_file.name}: {exc}")
                continue
            if scenario.bounds is None or scenario.q_start is None or scenario.q_goal is None:
                continue
            system = build_system(scenario.system.model_dump())
            systems.setdefault(system.name, (system, np.asarray(scenario.bounds, dtype=float)))
            jobs.extend((scenario, system, seed + i) for i in range(repeats))
        logger.info(f"Bench: {len(jobs)} runs over {len(jobs) // max(repeats, 1)} scenarios")

        def worker(job: Tuple[Scenario, SystemModel, int]) -> Dict[str, Any]:
            scenario, system, run_seed = job
            problem, config, baseline = planning_inputs(scenario, system, settings, run_seed)
            result = solve(problem, config, baseline, settings)
            return {
                "scenario": scenario.id,
                "planner": config.variant,
                "seed": run_seed,
                "success": result.success,
                "wall_time_s": result.wall_time_s,
                "vertices": result.vertices,
                "iterations": result.iterations,
            }

        runs = bench.run_pool(jobs, worker, settings.bench.max_workers)
        rows = bench.summarize_runs(runs)
        ctx.output("runs", write_rows(ctx.out_dir / "runs.csv", list(runs[0].keys()) if runs else ["scenario"], runs))
        ctx.output("table", write_rows(ctx.out_dir / "bench.csv", bench.BENCH_COLUMNS, rows))
        ctx.metrics["rows"] = len(rows)
        ctx.metrics["table"] = rows

        if timing_paths > 0:
            timings = {}
            for name, (system, bounds) in systems.items():
                timings[name] = bench.timing_benchmark(
                    system, timing_paths, seed, bounds, settings.numerics.grid
                ).to_dict()
            ctx.metrics["timing"] = timings
        return ctx.report("success", EXIT_OK)

    return _guarded(ctx, body)

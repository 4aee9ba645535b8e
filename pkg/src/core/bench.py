"""
Batch execution of planning runs on a worker pool, aggregation of the
results into a success-rate table, and the AVP versus TOPP timing
micro-benchmark.
"""
import logging
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

import numpy as np

from src.core.errors import InfeasibleError
from src.kinodynamics.avp import VelocityInterval, avp_forward
from src.kinodynamics.path import random_c1_path
from src.kinodynamics.phaseplane import project_constraints
from src.kinodynamics.systems import SystemModel
from src.kinodynamics.topp import compute_clc, topp_profile

logger = logging.getLogger(__name__)

Job = TypeVar("Job")
Result = TypeVar("Result")

BENCH_COLUMNS = [
    "scenario", "planner", "runs", "successes", "success_rate",
    "mean_time_s", "sd_time_s", "mean_vertices", "mean_iterations",
]


def run_pool(jobs: Sequence[Job], worker: Callable[[Job], Result], max_workers: int = 4) -> List[Result]:
    """Runs worker on every job; results come back in job order."""
    results: List[Optional[Result]] = [None] * len(jobs)
    if max_workers <= 1:
        for i, job in enumerate(jobs):
            results[i] = worker(job)
            logger.debug(f"Processed {i + 1}/{len(jobs)}")
        return results
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = {executor.submit(worker, job): i for i, job in enumerate(jobs)}
        processed = 0
        for future in as_completed(futures):
            results[futures[future]] = future.result()
            processed += 1
            logger.debug(f"Processed {processed}/{len(jobs)}")
    return results


def summarize_runs(runs: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """
    Groups run records {scenario, planner, success, wall_time_s, vertices,
    iterations} by (scenario, planner). Times and vertex counts are averaged
    over successful runs only; groups without a success get empty cells.
    """
    groups: Dict[tuple, List[Dict[str, Any]]] = {}
    for run in runs:
        groups.setdefault((run["scenario"], run["planner"]), []).append(run)
    rows = []
    for (scenario, planner), members in groups.items():
        solved = [m for m in members if m["success"]]
        times = [m["wall_time_s"] for m in solved]
        rows.append({
            "scenario": scenario,
            "planner": planner,
            "runs": len(members),
            "successes": len(solved),
            "success_rate": len(solved) / len(members),
            "mean_time_s": statistics.fmean(times) if times else None,
            "sd_time_s": statistics.stdev(times) if len(times) > 1 else (0.0 if times else None),
            "mean_vertices": statistics.fmean(m["vertices"] for m in solved) if solved else None,
            "mean_iterations": statistics.fmean(m["iterations"] for m in solved) if solved else None,
        })
    return rows


@dataclass(frozen=True)
class TimingResult:
    paths: int
    median_topp_s: float
    median_avp_s: float

    @property
    def ratio(self) -> float:
        if self.median_topp_s <= 0.0:
            return math.inf
        return self.median_avp_s / self.median_topp_s

    def to_dict(self) -> Dict[str, float]:
        return {
            "paths": self.paths,
            "median_topp_s": self.median_topp_s,
            "median_avp_s": self.median_avp_s,
            "ratio": self.ratio,
        }


def timing_benchmark(
    system: SystemModel,
    n_paths: int,
    seed: int,
    bounds: np.ndarray,
    grid: int = 1000,
) -> TimingResult:
    """
    Median wall time of a rest-to-rest TOPP and of AVP from [0, 0] on the same
    random paths. Each side computes its own limiting curves.
    """
    rng = np.random.default_rng(seed)
    topp_times, avp_times = [], []
    for i in range(n_paths):
        path = random_c1_path(rng, bounds)
        pd = project_constraints(system, path, grid)

        t0 = time.perf_counter()
        try:
            topp_profile(pd, 0.0, 0.0, clc=compute_clc(pd))
        except InfeasibleError:
            pass
        t1 = time.perf_counter()
        avp_forward(pd, VelocityInterval(0.0, 0.0), clc=compute_clc(pd))
        t2 = time.perf_counter()

        topp_times.append(t1 - t0)
        avp_times.append(t2 - t1)
    result = TimingResult(n_paths, float(np.median(topp_times)), float(np.median(avp_times)))
    logger.info(
        f"Timing over {n_paths} paths: TOPP {result.median_topp_s * 1e3:.2f} ms, "
        f"AVP {result.median_avp_s * 1e3:.2f} ms (ratio {result.ratio:.2f})"
    )
    return result

"""
Brute-force checks on a (s, sdot) cell grid, independent of the profile
integrator: forward reachability of end velocities and a minimum-time
dynamic program. Slow by construction; meant for small instances and tests.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.kinodynamics.avp import VelocityInterval
from src.kinodynamics.phaseplane import PathDynamics, accel_limits

logger = logging.getLogger(__name__)

MIN_CELLS = 50
V_MARGIN = 1.2


@dataclass(eq=False)
class ReachabilityGrid:
    """
    reachable[k, j] marks sdot cell j (centre j * dv) of column k as reachable.
    lo_extent / hi_extent hold the exact sdot range reached inside each cell.
    """
    n_s: int
    n_v: int
    v_max_grid: float
    s_end: float
    reachable: np.ndarray
    lo_extent: np.ndarray
    hi_extent: np.ndarray

    @property
    def dv(self) -> float:
        return self.v_max_grid / self.n_v

    def final_cells(self) -> np.ndarray:
        return np.flatnonzero(self.reachable[-1])

    def final_runs(self) -> List[Tuple[float, float]]:
        """Contiguous runs of reachable final cells as (sdot_lo, sdot_hi)."""
        cells = self.final_cells()
        runs: List[Tuple[float, float]] = []
        if cells.size == 0:
            return runs
        start = prev = int(cells[0])
        for j in list(cells[1:]) + [None]:
            if j is not None and j == prev + 1:
                prev = int(j)
                continue
            runs.append((float(self.lo_extent[-1, start]), float(self.hi_extent[-1, prev])))
            if j is not None:
                start = prev = int(j)
        return runs

    @property
    def is_contiguous(self) -> bool:
        return len(self.final_runs()) <= 1

    def final_interval(self) -> Optional[VelocityInterval]:
        runs = self.final_runs()
        if not runs:
            return None
        return VelocityInterval(max(runs[0][0], 0.0), max(runs[-1][1], runs[0][0], 0.0))

    def to_table(self) -> Tuple[List[str], np.ndarray]:
        """One row per reachable cell: s, sdot centre, lower and upper extent."""
        ks, js = np.nonzero(self.reachable)
        ds = self.s_end / self.n_s
        data = np.column_stack([ks * ds, js * self.dv, self.lo_extent[ks, js], self.hi_extent[ks, js]])
        return ["s", "sdot_cell", "sdot_lo", "sdot_hi"], data


def _grid_ceiling(pd: PathDynamics, start_hi: float, v_max: Optional[float], v_margin: float) -> float:
    finite = pd.ceiling[np.isfinite(pd.ceiling)]
    if v_max is not None:
        span = float(v_max)
    elif finite.size:
        span = v_margin * float(np.max(finite))
    else:
        raise ValueError("velocity ceiling is unbounded on this path; an explicit v_max is required")
    span = max(span, start_hi)
    if span <= 0.0:
        logger.debug("Velocity ceiling is zero everywhere, using a unit sdot span")
        span = 1.0
    return span


def _transition(pd: PathDynamics, s: float, ds: float, x_lo: float, x_hi: float) -> Optional[Tuple[float, float]]:
    """Range of squared velocity reachable one column ahead, alpha/beta taken at the cell midpoint."""
    start_lo = accel_limits(pd, s, math.sqrt(x_lo))
    start_hi = accel_limits(pd, s, math.sqrt(x_hi))
    half_lo = max(x_lo + start_lo.alpha * ds, 0.0) if math.isfinite(start_lo.alpha) else x_lo
    half_hi = max(x_hi + start_hi.beta * ds, 0.0) if math.isfinite(start_hi.beta) else x_hi
    mid_lo = accel_limits(pd, s + 0.5 * ds, math.sqrt(half_lo))
    mid_hi = accel_limits(pd, s + 0.5 * ds, math.sqrt(half_hi))
    if mid_lo.alpha > mid_lo.beta and mid_hi.alpha > mid_hi.beta:
        return None
    lower = x_lo + 2.0 * mid_lo.alpha * ds
    upper = x_hi + 2.0 * mid_hi.beta * ds
    if not (lower <= upper):
        return None
    return lower, upper


def reachable_final_set(
    pd: PathDynamics,
    start: VelocityInterval,
    n_s: int = 200,
    n_v: int = 200,
    v_max: Optional[float] = None,
    v_margin: float = V_MARGIN,
) -> ReachabilityGrid:
    """Forward sweep of reachable sdot cells from the start interval at s = 0 to s = s_end."""
    if n_s < MIN_CELLS or n_v < MIN_CELLS:
        raise ValueError(f"n_s and n_v must be >= {MIN_CELLS}")
    v_top = _grid_ceiling(pd, start.hi, v_max, v_margin)
    dv = v_top / n_v
    ds = pd.s_end / n_s
    reachable = np.zeros((n_s + 1, n_v + 1), dtype=bool)
    lo_ext = np.full((n_s + 1, n_v + 1), np.nan)
    hi_ext = np.full((n_s + 1, n_v + 1), np.nan)

    def mark(k: int, v_lo: float, v_hi: float) -> None:
        if v_lo > v_hi:
            return
        j_lo = min(int(math.floor(v_lo / dv + 0.5)), n_v)
        j_hi = min(int(math.floor(v_hi / dv + 0.5)), n_v)
        for j in range(j_lo, j_hi + 1):
            cell_lo = max(v_lo, (j - 0.5) * dv)
            cell_hi = min(v_hi, (j + 0.5) * dv) if j < n_v else v_hi
            if reachable[k, j]:
                lo_ext[k, j] = min(lo_ext[k, j], cell_lo)
                hi_ext[k, j] = max(hi_ext[k, j], cell_hi)
            else:
                reachable[k, j] = True
                lo_ext[k, j], hi_ext[k, j] = cell_lo, cell_hi

    if start.lo <= pd.ceiling_at(0.0):
        mark(0, start.lo, min(start.hi, pd.ceiling_at(0.0)))
    for k in range(n_s):
        s = k * ds
        ceiling_here = pd.ceiling_at(s)
        ceiling_next = pd.ceiling_at(min(s + ds, pd.s_end))
        for j in np.flatnonzero(reachable[k]):
            v_lo, v_hi = lo_ext[k, j], min(hi_ext[k, j], ceiling_here)
            if v_lo > v_hi:
                continue
            step = _transition(pd, s, ds, v_lo * v_lo, v_hi * v_hi)
            if step is None:
                continue
            x_lo, x_hi = max(step[0], 0.0), min(step[1], ceiling_next ** 2)
            if x_lo > x_hi or x_hi < 0.0:
                continue
            mark(k + 1, math.sqrt(x_lo), min(math.sqrt(x_hi), v_top))
        if not reachable[k + 1].any():
            logger.debug(f"Oracle: nothing reachable beyond s={s:.4f}")
            break

    grid = ReachabilityGrid(n_s, n_v, v_top, pd.s_end, reachable, lo_ext, hi_ext)
    if not grid.is_contiguous:
        logger.warning(f"Oracle: final reachable set splits into {len(grid.final_runs())} runs")
    return grid


@dataclass(frozen=True)
class MinTimeResult:
    feasible: bool
    duration: float


EARLIEST, FASTEST, SLOWEST = 0, 1, 2


def _cell_of(sdot: float, dv: float, n_v: int) -> int:
    return min(int(math.floor(sdot / dv + 0.5)), n_v)


def _step_time(ds: float, x: float, x_next):
    speed = math.sqrt(x) + np.sqrt(x_next)
    return np.where(speed > 0.0, 2.0 * ds / np.where(speed > 0.0, speed, 1.0), np.inf)


class _MinTimeStates:
    """(time, squared velocity) per sdot cell for each of the three slots."""

    def __init__(self, n_v: int):
        self.times = np.full((3, n_v + 1), np.inf)
        self.xs = np.full((3, n_v + 1), np.nan)

    def offer(self, slot: int, targets: np.ndarray, times: np.ndarray, xs: np.ndarray) -> None:
        current_t = self.times[slot, targets]
        current_x = self.xs[slot, targets]
        empty = ~np.isfinite(current_t)
        earlier = times < current_t
        if slot == EARLIEST:
            better = earlier
        elif slot == FASTEST:
            better = empty | (xs > current_x) | ((xs == current_x) & earlier)
        else:
            better = empty | (xs < current_x) | ((xs == current_x) & earlier)
        better &= np.isfinite(times)
        self.times[slot, targets[better]] = times[better]
        self.xs[slot, targets[better]] = xs[better]

    def candidates(self) -> List[Tuple[float, float]]:
        seen = set()
        for slot, j in zip(*np.nonzero(np.isfinite(self.times))):
            seen.add((float(self.times[slot, j]), float(self.xs[slot, j])))
        return sorted(seen)

    def any(self) -> bool:
        return bool(np.any(np.isfinite(self.times)))


def min_time_dp(
    pd: PathDynamics,
    sdot_beg: float,
    sdot_end: float,
    n_s: int = 200,
    n_v: int = 200,
    v_max: Optional[float] = None,
    v_margin: float = V_MARGIN,
) -> MinTimeResult:
    """
    Minimum traversal time over admissible cell-to-cell transitions.

    Every sdot cell keeps three representatives: its earliest arrival, its
    fastest state and its slowest state. Transitions land on the exact
    squared velocity of a full acceleration or full deceleration step,
    clipped to the target cell, so speed accumulates inside a cell instead
    of being rounded back to the cell centre. A step costs
    2 ds / (sdot + sdot').
    """
    if n_s < MIN_CELLS or n_v < MIN_CELLS:
        raise ValueError(f"n_s and n_v must be >= {MIN_CELLS}")
    v_top = _grid_ceiling(pd, max(sdot_beg, sdot_end), v_max, v_margin)
    dv = v_top / n_v
    ds = pd.s_end / n_s
    cells = np.arange(n_v + 1)
    bottom_sq = (np.maximum(cells - 0.5, 0.0) * dv) ** 2
    top_sq = ((cells + 0.5) * dv) ** 2
    if sdot_beg > pd.ceiling_at(0.0) + 1e-9:
        return MinTimeResult(False, math.inf)
    states = _MinTimeStates(n_v)
    states.offer(EARLIEST, np.array([_cell_of(sdot_beg, dv, n_v)]), np.array([0.0]), np.array([sdot_beg ** 2]))
    target_sq = sdot_end ** 2
    j_end = _cell_of(sdot_end, dv, n_v)

    for k in range(n_s):
        s = k * ds
        last = k == n_s - 1
        ceiling_next_sq = pd.ceiling_at(min(s + ds, pd.s_end)) ** 2
        nxt = _MinTimeStates(n_v)
        for t0, x in states.candidates():
            step = _transition(pd, s, ds, x, x)
            if step is None:
                continue
            lo, hi = max(step[0], 0.0), min(step[1], ceiling_next_sq)
            if lo > hi:
                continue
            if last:
                if lo - 1e-12 <= target_sq <= hi + 1e-12:
                    nxt.offer(EARLIEST, np.array([j_end]), np.array([t0 + _step_time(ds, x, target_sq)]),
                              np.array([target_sq]))
                continue
            targets = np.arange(_cell_of(math.sqrt(lo), dv, n_v), _cell_of(math.sqrt(hi), dv, n_v) + 1)
            fast = np.clip(top_sq[targets], lo, hi)
            slow = np.clip(bottom_sq[targets], lo, hi)
            fast_times = t0 + _step_time(ds, x, fast)
            nxt.offer(EARLIEST, targets, fast_times, fast)
            nxt.offer(FASTEST, targets, fast_times, fast)
            nxt.offer(SLOWEST, targets, t0 + _step_time(ds, x, slow), slow)
        states = nxt
        if not states.any():
            return MinTimeResult(False, math.inf)

    duration = float(np.min(states.times))
    if not math.isfinite(duration):
        return MinTimeResult(False, math.inf)
    return MinTimeResult(True, duration)


def agrees_with(
    interval: Optional[VelocityInterval],
    grid: ReachabilityGrid,
    tolerance_cells: int = 2,
    relative_tolerance: float = 0.02,
) -> Tuple[bool, float]:
    """
    Compares an interval of end velocities with the oracle's final run.

    Returns (agrees, largest endpoint gap). Endpoints agree within
    max(tolerance_cells * dv, relative_tolerance * |endpoint|); a split final
    set never agrees.
    """
    reference = grid.final_interval()
    if not grid.is_contiguous:
        return False, math.inf
    if interval is None or reference is None:
        return interval is None and reference is None, 0.0 if interval is reference else math.inf
    gaps = (abs(interval.lo - reference.lo), abs(interval.hi - reference.hi))
    limits = [
        max(tolerance_cells * grid.dv, relative_tolerance * abs(value))
        for value in (reference.lo, reference.hi)
    ]
    return all(gap <= limit for gap, limit in zip(gaps, limits)), max(gaps)

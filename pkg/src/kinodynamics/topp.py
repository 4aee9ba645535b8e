"""
Time-optimal path parameterization by numerical integration in the phase plane.

Profiles are integrated on the s-grid of a PathDynamics in the squared
velocity x = sdot**2 (d x / ds = 2 sddot), so every step is exact for a
constant sddot and a start from rest needs no special case.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import EndpointMismatchError, InfeasibleError
from src.kinodynamics.path import ConfigPath
from src.kinodynamics.phaseplane import PathDynamics
from src.kinodynamics.systems import SystemModel

logger = logging.getLogger(__name__)

DISCONTINUITY_THRESHOLD = 0.2
SINGULAR_OFFSET = 2
LC_GRACE_CELLS = 2
VELOCITY_TOLERANCE = 1e-6
SATURATION_TOLERANCE = 0.005

_RTOL = 1e-9
_ATOL = 1e-12


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.FORWARD else -1


class Termination(str, Enum):
    HIT_MVC = "hit_mvc"
    HIT_ZERO = "hit_zero"
    HIT_S_BEGIN = "hit_s_begin"
    HIT_S_END = "hit_s_end"
    HIT_PROFILE = "hit_profile"
    HIT_MVC_DIRECT = "hit_mvc_direct"


class SwitchKind(str, Enum):
    TANGENT = "tangent"
    SINGULAR = "singular"
    DISCONTINUOUS = "discontinuous"


# limiting_curve_flag values of the profile CSV
FLAG_INTEGRATED = 0
FLAG_BACKWARD = 1
FLAG_CLC = 2


@dataclass(eq=False)
class VelocityProfile:
    """
    Grid curve sdot(s) covering the consecutive grid indices k_start..k_end.

    s_values is always increasing, whatever the integration direction.
    sddot_values holds the path acceleration commanded at each sample.
    hit_profile is the position, in the stop list, of the profile that ended
    the integration (termination == hit_profile only).
    """
    s_values: np.ndarray
    sdot_values: np.ndarray
    direction: Direction
    termination: Termination
    k_start: int
    sddot_values: np.ndarray
    hit_profile: Optional[int] = None
    flags: Optional[np.ndarray] = None
    label: str = ""

    def __len__(self) -> int:
        return len(self.s_values)

    @property
    def k_end(self) -> int:
        return self.k_start + len(self.s_values) - 1

    @property
    def s_begin(self) -> float:
        return float(self.s_values[0])

    @property
    def s_finish(self) -> float:
        return float(self.s_values[-1])

    def covers(self, k: int) -> bool:
        return self.k_start <= k <= self.k_end

    def at_index(self, k: int) -> float:
        if not self.covers(k):
            return math.nan
        return float(self.sdot_values[k - self.k_start])

    def first(self) -> float:
        return float(self.sdot_values[0])

    def last(self) -> float:
        return float(self.sdot_values[-1])

    def endpoint(self) -> float:
        """Value where the integration stopped."""
        return self.last() if self.direction is Direction.FORWARD else self.first()

    def squared_on_grid(self, n_grid: int) -> np.ndarray:
        grid = np.full(n_grid + 1, np.nan)
        grid[self.k_start:self.k_end + 1] = self.sdot_values ** 2
        return grid

    def value_at(self, s: float) -> float:
        if s < self.s_values[0] - _ATOL or s > self.s_values[-1] + _ATOL:
            return math.nan
        return float(np.interp(s, self.s_values, self.sdot_values))

    def to_table(self) -> Tuple[List[str], np.ndarray]:
        flags = self.flags if self.flags is not None else np.zeros(len(self.s_values))
        return ["s", "sdot", "limiting_curve_flag"], np.column_stack([self.s_values, self.sdot_values, flags])


@dataclass(frozen=True)
class SwitchPoint:
    s: float
    sdot: float
    kind: SwitchKind
    index: int


@dataclass(eq=False)
class Trajectory:
    timestamps: np.ndarray
    configurations: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray

    @property
    def duration(self) -> float:
        return float(self.timestamps[-1])

    @property
    def dim(self) -> int:
        return int(self.configurations.shape[1])

    def to_table(self) -> Tuple[List[str], np.ndarray]:
        n = self.dim
        columns = ["t"]
        for prefix in ("q", "qd", "qdd"):
            columns += [f"{prefix}_{i + 1}" for i in range(n)]
        data = np.column_stack([self.timestamps, self.configurations, self.velocities, self.accelerations])
        return columns, data


@dataclass
class ClcResult:
    """Concatenated limiting curve with the LCs and switch points it came from."""
    profile: Optional[VelocityProfile]
    switch_points: List[SwitchPoint]
    curves: List[VelocityProfile] = field(default_factory=list)
    failed: bool = False
    reason: Optional[str] = None

    @property
    def empty(self) -> bool:
        return self.profile is None

    @property
    def reaches_begin(self) -> bool:
        return self.profile is not None and self.profile.k_start == 0

    def reaches_end(self, n_grid: int) -> bool:
        return self.profile is not None and self.profile.k_end == n_grid

    @property
    def stops(self) -> List[VelocityProfile]:
        return [] if self.profile is None else [self.profile]


def _exceeds(x: float, bound: float) -> bool:
    return x > bound * (1.0 + _RTOL) + _ATOL


def _hit_stop(stops: Sequence[np.ndarray], k: int, x: float) -> Optional[Tuple[int, float]]:
    best = None
    for i, grid in enumerate(stops):
        value = grid[k]
        if math.isnan(value):
            continue
        if x >= value - (_ATOL + _RTOL * value) and (best is None or value < best[1]):
            best = (i, float(value))
    return best



def _splice_trap(
    pd: PathDynamics, xs: List[float], accs: List[float], ks: List[int], d: int
) -> Optional[int]:
    """
    Handles a profile trapped on MVC_D at ks[-1]: looks ahead for the first
    grid point where the curve can be followed again, integrates from there
    in the opposite direction and splices that curve into the partial profile.
    Returns the index to resume from, or None when no splice exists.
    """
    n = pd.n_grid
    direct = pd.direct_sq
    k = ks[-1]
    j = k + d
    while 0 < j < n and math.isfinite(direct[j + d]):
        alpha, beta = pd.limits_at(j, float(direct[j]))
        slope = d * (direct[j + d] - direct[j]) / (2.0 * pd.ds)
        if not (alpha > slope if d > 0 else beta < slope):
            break
        j += d
    if not (0 <= j <= n) or not math.isfinite(direct[j]):
        return None

    back_k, back_x, back_a = [j], [float(direct[j])], []
    i, xb = j, float(direct[j])
    while True:
        alpha, beta = pd.limits_at(i, xb)
        used = alpha if d > 0 else beta
        nxt = i - d
        if d * (nxt - ks[0]) < 0:
            return None
        xb = xb - 2.0 * d * used * pd.ds
        if xb <= 0.0 or _exceeds(xb, pd.ceiling_sq[nxt]):
            return None
        if d * (k - nxt) >= 0:
            m = abs(nxt - ks[0])
            if xb >= xs[m] - _ATOL:
                del xs[m + 1:], accs[m + 1:], ks[m + 1:]
                accs[m] = used
                for t in range(len(back_k) - 1, -1, -1):
                    ks.append(back_k[t])
                    xs.append(back_x[t])
                    accs.append(back_a[t - 1] if t >= 1 else math.nan)
                logger.debug(f"MVC_D trap at k={k}: spliced at k={nxt}, resuming at k={j}")
                return j
        back_a.append(used)
        back_k.append(nxt)
        back_x.append(xb)
        i = nxt


def _make_profile(
    pd: PathDynamics,
    ks: List[int],
    xs: List[float],
    accs: List[float],
    direction: Direction,
    termination: Termination,
    hit_profile: Optional[int] = None,
    label: str = "",
) -> VelocityProfile:
    if direction is Direction.BACKWARD:
        ks, xs, accs = ks[::-1], xs[::-1], accs[::-1]
    sddot = np.asarray(accs, dtype=float)
    sddot[~np.isfinite(sddot)] = 0.0
    return VelocityProfile(
        s_values=pd.s_grid[ks[0]:ks[-1] + 1].copy(),
        sdot_values=np.sqrt(np.maximum(np.asarray(xs, dtype=float), 0.0)),
        direction=direction,
        termination=termination,
        k_start=int(ks[0]),
        sddot_values=sddot,
        hit_profile=hit_profile,
        label=label,
    )


def integrate_profile(
    pd: PathDynamics,
    s0: float,
    sdot0: float,
    direction: Direction,
    stop_profiles: Sequence[VelocityProfile] = (),
    grace_cells: int = 0,
    label: str = "",
) -> VelocityProfile:
    """
    Integrates sddot = beta (forward) or sddot = alpha (backward) from (s0, sdot0).

    Stops on the MVC, at sdot = 0, at either end of the path, on any stop
    profile, or on MVC_D when the curve cannot be followed. During the first
    grace_cells steps a crossing of the MVC is clipped instead of ending the
    profile, so curves started on the MVC survive their tangency.
    """
    direction = Direction(direction)
    if not (sdot0 >= 0.0 and math.isfinite(sdot0)):
        raise ValueError(f"sdot0 must be finite and >= 0, got {sdot0}")
    if s0 < -_ATOL or s0 > pd.s_end + _ATOL:
        raise ValueError(f"s0={s0} outside [0, {pd.s_end}]")
    d = direction.sign
    n = pd.n_grid
    k = pd.index_of(s0)
    x = sdot0 * sdot0
    stops = [p.squared_on_grid(n) for p in stop_profiles]
    ks, xs, accs = [k], [x], [math.nan]
    hit_index = None
    termination = None

    if _exceeds(x, pd.mvc_sq[k]) and grace_cells == 0:
        termination = Termination.HIT_MVC
    elif _exceeds(x, pd.direct_sq[k]):
        termination = Termination.HIT_MVC_DIRECT
    else:
        hit = _hit_stop(stops, k, x)
        if hit is not None:
            xs[0] = min(x, hit[1])
            hit_index, termination = hit[0], Termination.HIT_PROFILE
    on_direct = (
        math.isfinite(pd.direct_sq[k])
        and pd.direct_sq[k] <= pd.mvc_sq[k]
        and x >= pd.direct_sq[k] * (1.0 - _RTOL) - _ATOL
    )

    def advance(nxt: int, x_new: float, used: float) -> None:
        accs[-1] = used
        ks.append(nxt)
        xs.append(x_new)
        accs.append(math.nan)

    steps = 0
    while termination is None:
        nxt = k + d
        if nxt < 0:
            termination = Termination.HIT_S_BEGIN
            break
        if nxt > n:
            termination = Termination.HIT_S_END
            break
        alpha, beta = pd.limits_at(k, x)
        used = beta if d > 0 else alpha
        sliding = False
        if on_direct and math.isfinite(pd.direct_sq[nxt]):
            slope = d * (pd.direct_sq[nxt] - x) / (2.0 * pd.ds)
            slack = _RTOL * (1.0 + abs(slope))
            if alpha - slack <= slope <= beta + slack:
                sliding, used = True, slope
            elif not ((d > 0 and beta < slope) or (d < 0 and alpha > slope)):
                resume = _splice_trap(pd, xs, accs, ks, d)
                if resume is None:
                    termination = Termination.HIT_MVC_DIRECT
                    break
                k, x = resume, xs[-1]
                continue

        x_new = float(pd.direct_sq[nxt]) if sliding else x + 2.0 * d * used * pd.ds
        steps += 1
        if not math.isfinite(x_new):
            termination = Termination.HIT_MVC
            break
        if x_new <= 0.0:
            if 0 < nxt < n or x_new < -_ATOL:
                advance(nxt, 0.0, used)
                termination = Termination.HIT_ZERO
                break
            x_new = 0.0

        hit = _hit_stop(stops, nxt, x_new)
        if hit is not None and not _exceeds(hit[1], pd.ceiling_sq[nxt]):
            advance(nxt, hit[1], used)
            hit_index, termination = hit[0], Termination.HIT_PROFILE
            break

        if _exceeds(x_new, pd.direct_sq[nxt]) and pd.direct_sq[nxt] <= pd.mvc_sq[nxt]:
            x_new = float(pd.direct_sq[nxt])
            on_direct = True
        elif _exceeds(x_new, pd.mvc_sq[nxt]):
            x_new = float(pd.mvc_sq[nxt])
            if steps > grace_cells:
                advance(nxt, x_new, used)
                termination = Termination.HIT_MVC
                break
            on_direct = False
        else:
            on_direct = sliding
        advance(nxt, x_new, used)
        k, x = nxt, x_new

    if math.isnan(accs[-1]):
        alpha, beta = pd.limits_at(ks[-1], xs[-1])
        last = beta if d > 0 else alpha
        accs[-1] = last if math.isfinite(last) else (accs[-2] if len(accs) > 1 else 0.0)
    return _make_profile(pd, ks, xs, accs, direction, termination, hit_index, label)


def find_switch_points(
    pd: PathDynamics, discontinuity_threshold: float = DISCONTINUITY_THRESHOLD
) -> List[SwitchPoint]:
    """Discontinuous, singular and tangent points of the MVC, sorted by s."""
    mvc = pd.mvc
    n = pd.n_grid
    usable = np.isfinite(mvc) & (mvc > 0.0)
    found: Dict[int, SwitchPoint] = {}
    priority = {SwitchKind.DISCONTINUOUS: 0, SwitchKind.SINGULAR: 1, SwitchKind.TANGENT: 2}

    def add(index: int, kind: SwitchKind, s: Optional[float] = None) -> None:
        if not usable[index]:
            return
        current = found.get(index)
        if current is None or priority[kind] < priority[current.kind]:
            found[index] = SwitchPoint(
                s=float(pd.s_grid[index] if s is None else s), sdot=float(mvc[index]), kind=kind, index=index
            )

    jump_cells = set()
    for k in range(n):
        lo, hi = mvc[k], mvc[k + 1]
        if not (usable[k] or usable[k + 1]):
            continue
        if usable[k] and usable[k + 1] and abs(hi - lo) <= discontinuity_threshold * max(lo, hi):
            continue
        jump_cells.add(k)
        add(k if lo < hi else k + 1, SwitchKind.DISCONTINUOUS)

    for k in range(n):
        for row in (pd.upper_row[k], pd.lower_row[k]):
            if row < 0:
                continue
            a0, a1 = pd.a[row, k], pd.a[row, k + 1]
            entering_zero = pd.zero_mask[row, k + 1] and not pd.zero_mask[row, k]
            if a0 * a1 < 0.0 or entering_zero:
                add(k if abs(a0) <= abs(a1) else k + 1, SwitchKind.SINGULAR)

    with np.errstate(invalid="ignore", divide="ignore"):
        slope = np.gradient(np.where(usable, mvc, np.nan), pd.ds)
    field_gap = np.full(n + 1, np.nan)
    for k in range(n + 1):
        if not (usable[k] and math.isfinite(slope[k])) or (k - 1) in jump_cells or k in jump_cells:
            continue
        alpha, beta = pd.limits_at(k, float(pd.mvc_sq[k]))
        if math.isfinite(alpha) and math.isfinite(beta):
            field_gap[k] = 0.5 * (alpha + beta) - slope[k] * mvc[k]
    scale = 1e-9 * (1.0 + float(np.nanmax(np.abs(field_gap)))) if np.any(np.isfinite(field_gap)) else 0.0
    previous = None
    for k in range(n + 1):
        value = field_gap[k]
        if math.isnan(value):
            previous = None
            continue
        if abs(value) <= scale:
            continue
        if previous is not None and field_gap[previous] > 0.0 > value:
            if k == previous + 1:
                s_star = pd.s_grid[previous] + pd.ds * field_gap[previous] / (field_gap[previous] - value)
                add(pd.index_of(s_star), SwitchKind.TANGENT, float(s_star))
            else:
                add((previous + k) // 2, SwitchKind.TANGENT)
        previous = k

    points = sorted(found.values(), key=lambda p: p.s)
    logger.debug(f"{len(points)} switch points: " + ", ".join(f"{p.kind.value}@{p.s:.4f}" for p in points))
    return points


def compute_clc(
    pd: PathDynamics,
    switch_points: Optional[List[SwitchPoint]] = None,
    discontinuity_threshold: float = DISCONTINUITY_THRESHOLD,
    singular_offset: int = SINGULAR_OFFSET,
    grace_cells: int = LC_GRACE_CELLS,
) -> ClcResult:
    """Integrates the limiting curves from every switch point and keeps their pointwise minimum."""
    if switch_points is None:
        switch_points = find_switch_points(pd, discontinuity_threshold)
    n = pd.n_grid
    if np.any(pd.ceiling <= 0.0):
        first = int(np.argmax(pd.ceiling <= 0.0))
        logger.debug(f"Velocity ceiling is zero at s={pd.s_grid[first]:.4f}")
        return ClcResult(None, switch_points, failed=True, reason="hit_zero")
    if not switch_points:
        return ClcResult(None, switch_points)

    curves: List[VelocityProfile] = []
    for point in switch_points:
        offset = singular_offset if point.kind is SwitchKind.SINGULAR else 0
        k_back = max(point.index - offset, 0)
        k_fwd = min(point.index + offset, n)
        x0 = float(np.min(pd.ceiling_sq[k_back:k_fwd + 1]))
        sdot0 = math.sqrt(x0)
        back = integrate_profile(pd, pd.s_grid[k_back], sdot0, Direction.BACKWARD, grace_cells=grace_cells, label="lc")
        fwd = integrate_profile(pd, pd.s_grid[k_fwd], sdot0, Direction.FORWARD, grace_cells=grace_cells, label="lc")
        curves += [back, fwd]
        if Termination.HIT_ZERO in (back.termination, fwd.termination):
            logger.debug(f"Limiting curve from {point.kind.value} point s={point.s:.4f} hits sdot=0")
            return ClcResult(None, switch_points, curves, failed=True, reason="hit_zero")
        if k_fwd > k_back:
            width = k_fwd - k_back + 1
            curves.append(VelocityProfile(
                s_values=pd.s_grid[k_back:k_fwd + 1].copy(),
                sdot_values=np.full(width, sdot0),
                direction=Direction.FORWARD,
                termination=Termination.HIT_MVC,
                k_start=k_back,
                sddot_values=np.zeros(width),
                label="singular-gap",
            ))

    stacked = np.vstack([curve.squared_on_grid(n) for curve in curves])
    defined = ~np.isnan(stacked)
    covered = np.flatnonzero(np.any(defined, axis=0))
    k_start, k_end = int(covered[0]), int(covered[-1])
    window = np.where(defined, stacked, np.inf)[:, k_start:k_end + 1]
    source = np.argmin(window, axis=0)
    x = window[source, np.arange(window.shape[1])]
    holes = ~np.isfinite(x)
    x[holes] = pd.ceiling_sq[k_start:k_end + 1][holes]
    sddot = np.array([
        0.0 if holes[i] else curves[source[i]].sddot_values[k_start + i - curves[source[i]].k_start]
        for i in range(len(x))
    ])
    profile = VelocityProfile(
        s_values=pd.s_grid[k_start:k_end + 1].copy(),
        sdot_values=np.sqrt(x),
        direction=Direction.FORWARD,
        termination=Termination.HIT_S_END if k_end == n else Termination.HIT_MVC,
        k_start=k_start,
        sddot_values=sddot,
        flags=np.full(len(x), FLAG_CLC),
        label="clc",
    )
    logger.debug(f"CLC over s in [{profile.s_begin:.4f}, {profile.s_finish:.4f}] from {len(curves)} curves")
    return ClcResult(profile, switch_points, curves)


def _admissible_sddot(pd: PathDynamics, x: np.ndarray, sddot: np.ndarray) -> np.ndarray:
    """Clips each sample's sddot into [alpha, beta] at the merged squared velocity."""
    out = np.array(sddot, dtype=float)
    for k in range(len(out)):
        alpha, beta = pd.limits_at(k, float(x[k]))
        if alpha <= beta:
            out[k] = min(max(out[k], alpha), beta)
        else:
            # x sits on the MVC within tolerance
            out[k] = 0.5 * (alpha + beta)
    return out


def topp_profile(
    pd: PathDynamics,
    sdot_beg: float,
    sdot_end: float,
    clc: Optional[ClcResult] = None,
    velocity_tolerance: float = VELOCITY_TOLERANCE,
) -> VelocityProfile:
    """Time-optimal profile from (0, sdot_beg) to (s_end, sdot_end); raises InfeasibleError."""
    if sdot_beg < 0.0 or sdot_end < 0.0:
        raise ValueError("boundary path velocities must be >= 0")
    if clc is None:
        clc = compute_clc(pd)
    if clc.failed:
        raise InfeasibleError(f"A1/{clc.reason}", "a limiting curve reaches sdot=0, the path cannot be traversed")
    n = pd.n_grid
    tol = velocity_tolerance
    if sdot_beg > pd.ceiling[0] + tol * (1.0 + sdot_beg):
        raise InfeasibleError("start_above_mvc")
    if sdot_end > pd.ceiling[n] + tol * (1.0 + sdot_end):
        raise InfeasibleError("end_above_mvc")
    sdot_beg = min(sdot_beg, float(pd.ceiling[0]))
    sdot_end = min(sdot_end, float(pd.ceiling[n]))

    backward = integrate_profile(pd, pd.s_end, sdot_end, Direction.BACKWARD, clc.stops, label="backward")
    if backward.termination is Termination.HIT_ZERO:
        raise InfeasibleError("backward_hit_zero")
    forward = integrate_profile(pd, 0.0, sdot_beg, Direction.FORWARD, [backward] + clc.stops, label="forward")
    if forward.termination is Termination.HIT_ZERO:
        raise InfeasibleError("forward_hit_zero")

    sources = [forward, backward] + clc.stops
    stacked = np.vstack([p.squared_on_grid(n) for p in sources])
    defined = ~np.isnan(stacked)
    if not np.all(np.any(defined, axis=0)):
        gap = int(np.argmin(np.any(defined, axis=0)))
        raise InfeasibleError("gap", f"no velocity profile covers s={pd.s_grid[gap]:.4f}")
    stacked = np.where(defined, stacked, np.inf)
    source = np.argmin(stacked, axis=0)
    x = stacked[source, np.arange(n + 1)]
    sdot = np.sqrt(np.maximum(x, 0.0))
    if abs(sdot[0] - sdot_beg) > tol * (1.0 + sdot_beg):
        raise InfeasibleError("start_unreachable", f"profile starts at {sdot[0]:.6g}, requested {sdot_beg:.6g}")
    if abs(sdot[n] - sdot_end) > tol * (1.0 + sdot_end):
        raise InfeasibleError("end_unreachable", f"profile ends at {sdot[n]:.6g}, requested {sdot_end:.6g}")
    if np.any(sdot[1:n] <= 0.0):
        raise InfeasibleError("interior_zero")
    sddot = np.array([sources[source[k]].sddot_values[k - sources[source[k]].k_start] for k in range(n + 1)])
    sddot = _admissible_sddot(pd, x, sddot)
    flags = np.minimum(source, FLAG_CLC)
    return VelocityProfile(
        s_values=pd.s_grid.copy(),
        sdot_values=sdot,
        direction=Direction.FORWARD,
        termination=Termination.HIT_S_END,
        k_start=0,
        sddot_values=sddot,
        flags=flags,
        label="optimal",
    )


def profile_duration(profile: VelocityProfile) -> float:
    """Sum of 2 ds / (sdot_k + sdot_k+1); exact for constant sddot on each cell."""
    ds = np.diff(profile.s_values)
    speed = profile.sdot_values[:-1] + profile.sdot_values[1:]
    if np.any(speed <= 0.0):
        return math.inf
    return float(np.sum(2.0 * ds / speed))


def retime(
    path: ConfigPath,
    profile: VelocityProfile,
    v_beg: float,
    v_end: float,
    tolerance: float = VELOCITY_TOLERANCE,
) -> Trajectory:
    """Turns a path and a velocity profile into a time-stamped trajectory."""
    if abs(profile.s_finish - path.s_end) > 1e-9 or profile.k_start != 0:
        raise EndpointMismatchError("profile does not span the whole path")
    _, tangent_beg, _ = path.evaluate(0.0)
    _, tangent_end, _ = path.evaluate(path.s_end)
    sdot_beg = v_beg / float(np.linalg.norm(tangent_beg))
    sdot_end = v_end / float(np.linalg.norm(tangent_end))
    if abs(sdot_beg - profile.first()) > tolerance * (1.0 + sdot_beg):
        raise EndpointMismatchError(f"start velocity {sdot_beg:.6g} != profile {profile.first():.6g}")
    if abs(sdot_end - profile.last()) > tolerance * (1.0 + sdot_end):
        raise EndpointMismatchError(f"end velocity {sdot_end:.6g} != profile {profile.last():.6g}")
    sdot = profile.sdot_values
    if np.any(sdot[1:-1] <= 0.0):
        raise InfeasibleError("interior_zero", "profile stops inside the path")

    dt = 2.0 * np.diff(profile.s_values) / (sdot[:-1] + sdot[1:])
    timestamps = np.concatenate([[0.0], np.cumsum(dt)])
    q, q_s, q_ss = path.evaluate_many(profile.s_values)
    velocities = q_s * sdot[:, None]
    accelerations = q_s * profile.sddot_values[:, None] + q_ss * (sdot ** 2)[:, None]
    return Trajectory(timestamps, q, velocities, accelerations)


@dataclass(frozen=True)
class SaturationReport:
    samples: int
    saturated_fraction: float
    max_violation: float


def _relative_load(system: SystemModel, trajectory: Trajectory) -> np.ndarray:
    values, limits = system.state_constraints(
        trajectory.configurations, trajectory.velocities, trajectory.accelerations
    )
    limits = np.asarray(limits, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(limits > 0.0, np.abs(values) / limits, np.nan)


def replay_violation(system: SystemModel, trajectory: Trajectory) -> float:
    """Largest relative overshoot max(|value| / limit - 1) over all samples, 0 if none."""
    load = _relative_load(system, trajectory)
    if not np.any(np.isfinite(load)):
        return 0.0
    return max(float(np.nanmax(load)) - 1.0, 0.0)


def saturation_report(
    system: SystemModel, trajectory: Trajectory, tolerance: float = SATURATION_TOLERANCE
) -> SaturationReport:
    """Share of samples where at least one limit is active within the relative tolerance."""
    load = _relative_load(system, trajectory)
    active = np.any(np.nan_to_num(load, nan=0.0) >= 1.0 - tolerance, axis=1)
    return SaturationReport(
        samples=int(load.shape[0]),
        saturated_fraction=float(np.mean(active)),
        max_violation=replay_violation(system, trajectory),
    )

"""
Admissible velocity propagation.

Given a path and an interval of path velocities at one end, computes the
interval of velocities reachable at the other end. avp_forward propagates
from s = 0 to s = s_end; avp_backward answers the reverse question, which
the bi-directional planner needs for its goal tree. Both share one routine,
parameterized by the end the interval is attached to.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from src.kinodynamics.phaseplane import PathDynamics
from src.kinodynamics.topp import (
    LC_GRACE_CELLS,
    VELOCITY_TOLERANCE,
    ClcResult,
    Direction,
    Termination,
    VelocityProfile,
    compute_clc,
    integrate_profile,
)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.01


@dataclass(frozen=True)
class VelocityInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if self.lo < 0.0 or self.hi < self.lo:
            raise ValueError(f"invalid velocity interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: float) -> "VelocityInterval":
        return cls(value, value)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float, tolerance: float = 0.0) -> bool:
        return self.lo - tolerance <= value <= self.hi + tolerance

    def intersect(self, other: "VelocityInterval") -> Optional["VelocityInterval"]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if hi < lo:
            return None
        return VelocityInterval(lo, hi)

    def to_list(self) -> List[float]:
        return [self.lo, self.hi]


class AvpStatus(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"


class ClcCase(str, Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"
    A5 = "A5"


class PhiCase(str, Enum):
    B1 = "B1"
    B2 = "B2"
    B3A = "B3a"
    B3B = "B3b"
    B4 = "B4"


class PsiCase(str, Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"
    C5 = "C5"
    HIT_MVC = "hit_mvc"


class FailureTag(str, Enum):
    A1 = "A1"
    B1 = "B1"
    B4 = "B4"
    START_ABOVE_LIMIT = "start_above_limit"


@dataclass
class AvpDiagnostics:
    step_a: Optional[ClcCase] = None
    step_b: Optional[PhiCase] = None
    bisection: List[Tuple[float, bool]] = field(default_factory=list)
    phi: Optional[VelocityProfile] = None
    clc: Optional[VelocityProfile] = None
    psi: List[VelocityProfile] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stepA": None if self.step_a is None else self.step_a.value,
            "stepB": None if self.step_b is None else self.step_b.value,
            "bisection": [[value, verdict] for value, verdict in self.bisection],
        }


@dataclass
class AvpOutcome:
    status: AvpStatus
    interval: Optional[VelocityInterval] = None
    case_tag: Optional[FailureTag] = None
    diagnostics: AvpDiagnostics = field(default_factory=AvpDiagnostics)

    @property
    def success(self) -> bool:
        return self.status is AvpStatus.SUCCESS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "interval": None if self.interval is None else self.interval.to_list(),
            "case_tag": None if self.case_tag is None else self.case_tag.value,
            "trace": self.diagnostics.to_dict(),
        }


@dataclass
class ValidityContext:
    """Step-B artifacts needed to test candidate velocities at the far end."""
    pd: PathDynamics
    phi: VelocityProfile
    clc: ClcResult
    start: VelocityInterval
    max_star: float
    direction: Direction
    velocity_tolerance: float = VELOCITY_TOLERANCE
    grace_cells: int = LC_GRACE_CELLS

    @property
    def near_index(self) -> int:
        return 0 if self.direction is Direction.FORWARD else self.pd.n_grid

    @property
    def far_index(self) -> int:
        return self.pd.n_grid if self.direction is Direction.FORWARD else 0


def _clc_case(clc: ClcResult, n_grid: int) -> ClcCase:
    if clc.failed:
        return ClcCase.A1
    begin, end = clc.reaches_begin, clc.reaches_end(n_grid)
    if begin and end:
        return ClcCase.A5
    if end:
        return ClcCase.A4
    if begin:
        return ClcCase.A3
    return ClcCase.A2


def classify_final(ctx: ValidityContext, sdot_test: float) -> Tuple[bool, PsiCase, VelocityProfile]:
    """Integrates Psi from the far end at sdot_test and sorts the outcome into C1..C5."""
    pd = ctx.pd
    far = ctx.far_index
    back = Direction.BACKWARD if ctx.direction is Direction.FORWARD else Direction.FORWARD
    on_ceiling = sdot_test >= pd.ceiling[far] * (1.0 - 1e-9)
    psi = integrate_profile(
        pd, pd.s_grid[far], sdot_test, back, [ctx.phi] + ctx.clc.stops,
        grace_cells=ctx.grace_cells if on_ceiling else 0, label="psi",
    )
    tol = ctx.velocity_tolerance
    near_reached = (
        psi.termination is Termination.HIT_S_BEGIN and ctx.direction is Direction.FORWARD
    ) or (psi.termination is Termination.HIT_S_END and ctx.direction is Direction.BACKWARD)

    if psi.termination is Termination.HIT_ZERO:
        return False, PsiCase.C1, psi
    if near_reached:
        landing = psi.at_index(ctx.near_index)
        if landing < ctx.start.lo - tol * (1.0 + ctx.start.lo):
            return False, PsiCase.C2, psi
        if landing <= ctx.max_star + tol * (1.0 + ctx.max_star):
            return True, PsiCase.C3, psi
        return True, PsiCase.C4, psi
    if psi.termination is Termination.HIT_PROFILE:
        return True, (PsiCase.C4 if psi.hit_profile == 0 else PsiCase.C5), psi
    return False, PsiCase.HIT_MVC, psi


def is_valid_final(ctx: ValidityContext, sdot_test: float) -> bool:
    return classify_final(ctx, sdot_test)[0]


def _propagate(
    pd: PathDynamics,
    interval: VelocityInterval,
    epsilon: float,
    direction: Direction,
    clc: Optional[ClcResult],
    velocity_tolerance: float,
    grace_cells: int,
) -> AvpOutcome:
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    n = pd.n_grid
    near, far = (0, n) if direction is Direction.FORWARD else (n, 0)
    diagnostics = AvpDiagnostics()
    tol = velocity_tolerance

    if clc is None:
        clc = compute_clc(pd)
    diagnostics.step_a = _clc_case(clc, n)
    diagnostics.clc = clc.profile
    if clc.failed:
        return AvpOutcome(AvpStatus.FAILURE, case_tag=FailureTag.A1, diagnostics=diagnostics)

    star = float(pd.ceiling[near])
    if clc.profile is not None and clc.profile.covers(near):
        star = min(star, clc.profile.at_index(near))
    if interval.lo > star + tol * (1.0 + star):
        logger.debug(f"AVP {direction.value}: lower bound {interval.lo:.6g} above reachable {star:.6g}")
        return AvpOutcome(AvpStatus.FAILURE, case_tag=FailureTag.START_ABOVE_LIMIT, diagnostics=diagnostics)
    max_star = min(interval.hi, star)

    phi = integrate_profile(pd, pd.s_grid[near], max_star, direction, clc.stops, label="phi")
    diagnostics.phi = phi
    ctx = ValidityContext(pd, phi, clc, interval, max_star, direction, tol, grace_cells)
    far_reached = phi.covers(far) and phi.termination in (Termination.HIT_S_END, Termination.HIT_S_BEGIN)

    if phi.termination is Termination.HIT_ZERO:
        diagnostics.step_b = PhiCase.B1
        return AvpOutcome(AvpStatus.FAILURE, case_tag=FailureTag.B1, diagnostics=diagnostics)
    if far_reached:
        diagnostics.step_b = PhiCase.B2
        upper = phi.at_index(far)
    elif phi.termination is Termination.HIT_PROFILE and clc.profile is not None and clc.profile.covers(far):
        diagnostics.step_b = PhiCase.B3A
        upper = clc.profile.at_index(far)
    else:
        diagnostics.step_b = PhiCase.B3B if phi.termination is Termination.HIT_PROFILE else PhiCase.B4
        upper = float(pd.ceiling[far])
        if not math.isfinite(upper):
            return AvpOutcome(AvpStatus.FAILURE, case_tag=FailureTag.B4, diagnostics=diagnostics)
        valid, case, psi = classify_final(ctx, upper)
        diagnostics.psi.append(psi)
        diagnostics.bisection.append((upper, valid))
        if not valid:
            logger.debug(f"AVP {direction.value}: ceiling {upper:.6g} at the far end not reachable ({case.value})")
            return AvpOutcome(AvpStatus.FAILURE, case_tag=FailureTag.B4, diagnostics=diagnostics)

    valid, _, psi = classify_final(ctx, 0.0)
    diagnostics.psi.append(psi)
    diagnostics.bisection.append((0.0, valid))
    if valid:
        lower = 0.0
    else:
        invalid_v, valid_v = 0.0, upper
        while valid_v - invalid_v > epsilon:
            mid = 0.5 * (invalid_v + valid_v)
            verdict, _, psi = classify_final(ctx, mid)
            diagnostics.psi.append(psi)
            diagnostics.bisection.append((mid, verdict))
            if verdict:
                valid_v = mid
            else:
                invalid_v = mid
        lower = valid_v

    result = VelocityInterval(min(lower, upper), upper)
    logger.debug(
        f"AVP {direction.value}: [{interval.lo:.4g}, {interval.hi:.4g}] -> [{result.lo:.4g}, {result.hi:.4g}] "
        f"({diagnostics.step_a.value}/{diagnostics.step_b.value}, {len(diagnostics.bisection)} tests)"
    )
    return AvpOutcome(AvpStatus.SUCCESS, interval=result, diagnostics=diagnostics)


def avp_forward(
    pd: PathDynamics,
    start: VelocityInterval,
    epsilon: float = DEFAULT_EPSILON,
    clc: Optional[ClcResult] = None,
    velocity_tolerance: float = VELOCITY_TOLERANCE,
    grace_cells: int = LC_GRACE_CELLS,
) -> AvpOutcome:
    """Interval of path velocities reachable at s_end from any velocity of start at s = 0."""
    return _propagate(pd, start, epsilon, Direction.FORWARD, clc, velocity_tolerance, grace_cells)


def avp_backward(
    pd: PathDynamics,
    end: VelocityInterval,
    epsilon: float = DEFAULT_EPSILON,
    clc: Optional[ClcResult] = None,
    velocity_tolerance: float = VELOCITY_TOLERANCE,
    grace_cells: int = LC_GRACE_CELLS,
) -> AvpOutcome:
    """Interval of path velocities at s = 0 from which some velocity of end is reachable."""
    return _propagate(pd, end, epsilon, Direction.BACKWARD, clc, velocity_tolerance, grace_cells)

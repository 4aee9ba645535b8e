"""
C1 piecewise-cubic paths in configuration space.

A path is stored as a list of segments. Segment j covers
[breakpoints[j], breakpoints[j+1]] and holds, for every DOF, the four
coefficients of a cubic in the local parameter u = s - breakpoints[j]
(ascending degree).
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import (
    ContinuityError,
    DegeneratePathError,
    DimensionMismatchError,
    PathDomainError,
)

logger = logging.getLogger(__name__)

DOMAIN_TOLERANCE = 1e-12
POSITION_TOLERANCE = 1e-9
TANGENT_TOLERANCE = 1e-6
MIN_SEGMENT_LENGTH = 1e-12

PathPoint = Tuple[np.ndarray, np.ndarray, np.ndarray]


def _unit(vector: np.ndarray, what: str) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm < 1e-12:
        raise DegeneratePathError(f"{what} has zero norm")
    return vector / norm


def _shift(coefficients: np.ndarray, offset: float) -> np.ndarray:
    """Re-expands cubics p(u) around u = offset, i.e. returns p(offset + v)."""
    c0, c1, c2, c3 = (coefficients[..., i] for i in range(4))
    shifted = np.empty_like(coefficients)
    shifted[..., 0] = c0 + offset * (c1 + offset * (c2 + offset * c3))
    shifted[..., 1] = c1 + offset * (2.0 * c2 + 3.0 * c3 * offset)
    shifted[..., 2] = c2 + 3.0 * c3 * offset
    shifted[..., 3] = c3
    return shifted


@dataclass(frozen=True, eq=False)
class ConfigPath:
    breakpoints: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        breakpoints = np.array(self.breakpoints, dtype=float)
        coefficients = np.array(self.coefficients, dtype=float)
        if coefficients.ndim == 2:
            coefficients = coefficients[None, ...]
        if coefficients.ndim != 3 or coefficients.shape[2] > 4:
            raise DegeneratePathError(
                "coefficients must have shape (segments, dim, degree+1) with degree <= 3"
            )
        if coefficients.shape[2] < 4:
            pad = 4 - coefficients.shape[2]
            coefficients = np.concatenate(
                [coefficients, np.zeros(coefficients.shape[:2] + (pad,))], axis=2
            )
        if breakpoints.ndim != 1 or breakpoints.size != coefficients.shape[0] + 1:
            raise DegeneratePathError("expected one more breakpoint than segments")
        if breakpoints[0] != 0.0:
            raise DegeneratePathError("first breakpoint must be 0")
        if np.any(np.diff(breakpoints) <= 0.0):
            raise DegeneratePathError("breakpoints must be strictly increasing")
        breakpoints.setflags(write=False)
        coefficients.setflags(write=False)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def dim(self) -> int:
        return int(self.coefficients.shape[1])

    @property
    def s_end(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def n_segments(self) -> int:
        return int(self.coefficients.shape[0])

    def evaluate_many(self, s_values: Sequence[float]) -> PathPoint:
        """Vectorized evaluation; returns arrays of shape (len(s_values), dim)."""
        s = np.atleast_1d(np.asarray(s_values, dtype=float))
        if np.any(s < -DOMAIN_TOLERANCE) or np.any(s > self.s_end + DOMAIN_TOLERANCE):
            raise PathDomainError(f"s outside [0, {self.s_end}]")
        s = np.clip(s, 0.0, self.s_end)
        index = np.searchsorted(self.breakpoints, s, side="right") - 1
        index = np.clip(index, 0, self.n_segments - 1)
        u = (s - self.breakpoints[index])[:, None]
        c = self.coefficients[index]
        q = c[..., 0] + u * (c[..., 1] + u * (c[..., 2] + u * c[..., 3]))
        q_s = c[..., 1] + u * (2.0 * c[..., 2] + 3.0 * c[..., 3] * u)
        q_ss = 2.0 * c[..., 2] + 6.0 * c[..., 3] * u
        return q, q_s, q_ss

    def evaluate(self, s: float) -> PathPoint:
        q, q_s, q_ss = self.evaluate_many([s])
        return q[0], q_s[0], q_ss[0]

    def start(self) -> np.ndarray:
        return self.coefficients[0, :, 0].copy()

    def end(self) -> np.ndarray:
        return self.evaluate(self.s_end)[0]

    def unit_tangent(self, s: float) -> np.ndarray:
        return _unit(self.evaluate(s)[1], f"tangent at s={s:.6g}")

    def reverse(self) -> "ConfigPath":
        """Same geometric path traversed from the end to the start."""
        lengths = np.diff(self.breakpoints)
        reversed_segments = []
        for coefficients, length in zip(self.coefficients[::-1], lengths[::-1]):
            flipped = _shift(coefficients, float(length))
            flipped[:, 1] *= -1.0
            flipped[:, 3] *= -1.0
            reversed_segments.append(flipped)
        return ConfigPath(
            breakpoints=self.s_end - self.breakpoints[::-1],
            coefficients=np.stack(reversed_segments),
        )

    def subpath(self, s0: float, s1: float) -> "ConfigPath":
        """Restriction to [s0, s1], re-parameterized to start at 0."""
        if not (-DOMAIN_TOLERANCE <= s0 < s1 <= self.s_end + DOMAIN_TOLERANCE):
            raise PathDomainError(f"invalid sub-range [{s0}, {s1}] of [0, {self.s_end}]")
        s0 = max(s0, 0.0)
        s1 = min(s1, self.s_end)
        segments = []
        breakpoints = [0.0]
        for j in range(self.n_segments):
            lo = max(s0, self.breakpoints[j])
            hi = min(s1, self.breakpoints[j + 1])
            if hi - lo < MIN_SEGMENT_LENGTH:
                continue
            segments.append(_shift(self.coefficients[j], lo - self.breakpoints[j]))
            breakpoints.append(breakpoints[-1] + (hi - lo))
        if not segments:
            raise DegeneratePathError("sub-range shorter than the minimum segment length")
        return ConfigPath(breakpoints=np.array(breakpoints), coefficients=np.stack(segments))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "breakpoints": self.breakpoints.tolist(),
            "segments": self.coefficients.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConfigPath":
        path = cls(breakpoints=data["breakpoints"], coefficients=data["segments"])
        if "dim" in data and int(data["dim"]) != path.dim:
            raise DimensionMismatchError(f"declared dim {data['dim']} but segments have {path.dim}")
        return path


def eval_path(path: ConfigPath, s: float) -> PathPoint:
    """Position, first and second s-derivatives at s."""
    return path.evaluate(s)


def straight_path(q_from: Sequence[float], q_to: Sequence[float]) -> ConfigPath:
    q_from = np.asarray(q_from, dtype=float)
    q_to = np.asarray(q_to, dtype=float)
    chord = q_to - q_from
    length = float(np.linalg.norm(chord))
    if length < MIN_SEGMENT_LENGTH:
        raise DegeneratePathError("coincident endpoints")
    return hermite_segment(q_from, chord / length, q_to, chord / length, length)


def hermite_segment(
    q0: np.ndarray, d0: np.ndarray, q1: np.ndarray, d1: np.ndarray, length: float
) -> ConfigPath:
    """Single cubic on [0, length] with q(0)=q0, q_s(0)=d0, q(length)=q1, q_s(length)=d1."""
    q0, d0, q1, d1 = (np.asarray(v, dtype=float) for v in (q0, d0, q1, d1))
    if not (q0.shape == d0.shape == q1.shape == d1.shape):
        raise DimensionMismatchError("endpoint and tangent vectors must share one dimension")
    if length < MIN_SEGMENT_LENGTH:
        raise DegeneratePathError("segment length must be positive")
    h = float(length)
    c2 = (3.0 * (q1 - q0) / h - 2.0 * d0 - d1) / h
    c3 = (2.0 * (q0 - q1) / h + d0 + d1) / (h * h)
    coefficients = np.stack([q0, d0, c2, c3], axis=1)
    return ConfigPath(breakpoints=np.array([0.0, h]), coefficients=coefficients[None, ...])


def interpolate_c1(
    q_from: Sequence[float],
    u_from: Sequence[float],
    q_to: Sequence[float],
    u_to: Optional[Sequence[float]] = None,
) -> ConfigPath:
    """
    Cubic from q_from to q_to leaving along u_from and arriving along u_to.

    The parameter length is the chord length and both end tangents are unit
    vectors, so ||q_s|| = 1 at the endpoints. u_to defaults to the chord
    direction.
    """
    q_from = np.asarray(q_from, dtype=float)
    q_to = np.asarray(q_to, dtype=float)
    if q_from.shape != q_to.shape:
        raise DimensionMismatchError(f"{q_from.shape} vs {q_to.shape}")
    chord = q_to - q_from
    length = float(np.linalg.norm(chord))
    if length < MIN_SEGMENT_LENGTH:
        raise DegeneratePathError("coincident endpoints")
    start_tangent = _unit(np.asarray(u_from, dtype=float), "u_from")
    end_tangent = chord / length if u_to is None else _unit(np.asarray(u_to, dtype=float), "u_to")
    return hermite_segment(q_from, start_tangent, q_to, end_tangent, length)


def concatenate(a: ConfigPath, b: ConfigPath) -> ConfigPath:
    """Joins b after a; both positions and tangent directions must agree at the junction."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"cannot join a {a.dim}-DOF path with a {b.dim}-DOF path")
    a_end, a_tangent, _ = a.evaluate(a.s_end)
    b_start, b_tangent, _ = b.evaluate(0.0)
    gap = float(np.linalg.norm(a_end - b_start))
    if gap > POSITION_TOLERANCE:
        raise ContinuityError(f"position gap {gap:.3g} at junction")
    try:
        bend = float(np.linalg.norm(_unit(a_tangent, "end tangent") - _unit(b_tangent, "start tangent")))
    except DegeneratePathError as exc:
        raise ContinuityError(str(exc)) from exc
    if bend > TANGENT_TOLERANCE:
        raise ContinuityError(f"tangent mismatch {bend:.3g} at junction")
    return ConfigPath(
        breakpoints=np.concatenate([a.breakpoints, a.s_end + b.breakpoints[1:]]),
        coefficients=np.concatenate([a.coefficients, b.coefficients]),
    )


def concatenate_all(paths: Sequence[ConfigPath]) -> ConfigPath:
    if not paths:
        raise DegeneratePathError("nothing to concatenate")
    result = paths[0]
    for path in paths[1:]:
        result = concatenate(result, path)
    return result


def random_unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        v = rng.normal(size=dim)
        norm = np.linalg.norm(v)
        if norm > 1e-9:
            return v / norm


def random_c1_path(
    rng: np.random.Generator,
    bounds: np.ndarray,
    min_length: float = 0.2,
    max_length: float = 1.0,
) -> ConfigPath:
    """Seeded random single-cubic path with a random start tangent, starting inside bounds."""
    bounds = np.asarray(bounds, dtype=float)
    q_from = rng.uniform(bounds[:, 0], bounds[:, 1])
    direction = random_unit_vector(rng, bounds.shape[0])
    q_to = q_from + rng.uniform(min_length, max_length) * direction
    return interpolate_c1(q_from, random_unit_vector(rng, bounds.shape[0]), q_to)

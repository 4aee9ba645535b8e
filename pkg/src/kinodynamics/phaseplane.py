"""
Projection of system constraints onto a path and the (s, sdot) phase-plane
quantities derived from it: acceleration bounds alpha/beta, the maximum
velocity curve (MVC) and the direct-velocity-bound curve MVC_D.

All grids are sampled at N+1 equally spaced values of s; between samples the
constraint coefficients are interpolated linearly.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import DimensionMismatchError, SystemEvaluationError
from src.kinodynamics.path import ConfigPath
from src.kinodynamics.systems import SystemModel

logger = logging.getLogger(__name__)

ZERO_INERTIA_THRESHOLD = 1e-10
MIN_GRID = 10

Terms = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class AccelBounds:
    alpha: float
    beta: float

    @property
    def admissible(self) -> bool:
        return self.alpha <= self.beta


def _row_terms(a: np.ndarray, b: np.ndarray, c: np.ndarray, zero: np.ndarray):
    """Per-row bound sddot <= p - q * x (a > 0) or sddot >= p - q * x (a < 0), x = sdot**2."""
    safe_a = np.where(zero, 1.0, a)
    p = np.where(zero, 0.0, -c / safe_a)
    q = np.where(zero, 0.0, b / safe_a)
    positive = (a > 0) & ~zero
    negative = (a < 0) & ~zero
    return p, q, positive, negative


def _mvc_columns(a: np.ndarray, b: np.ndarray, c: np.ndarray, zero: np.ndarray):
    """
    Squared MVC for every column of the (M, K) coefficient arrays.

    Returns (x_mvc, upper_row, lower_row) where the two row indices identify
    the opposite-sign pair whose crossing defines the curve (-1 when none).
    """
    p, q, positive, negative = _row_terms(a, b, c, zero)
    n_rows, n_cols = a.shape
    pair = positive[:, None, :] & negative[None, :, :]
    gap = p[:, None, :] - p[None, :, :]
    closing = q[:, None, :] - q[None, :, :]
    scale = 1e-12 * (1.0 + np.abs(p[:, None, :]) + np.abs(p[None, :, :]))
    inconsistent = np.any(pair & (gap < -scale), axis=(0, 1))

    with np.errstate(divide="ignore", invalid="ignore"):
        roots = np.where(pair & (closing > 0), np.maximum(gap, 0.0) / closing, np.inf)
    flat = roots.reshape(n_rows * n_rows, n_cols)
    best = np.argmin(flat, axis=0)
    x_pair = flat[best, np.arange(n_cols)]
    upper_row = np.where(np.isfinite(x_pair), best // n_rows, -1)
    lower_row = np.where(np.isfinite(x_pair), best % n_rows, -1)

    # zero-inertia rows reduce to b * x + c <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        x_zero_rows = np.where(zero & (b > 0), -c / np.where(b > 0, b, 1.0), np.inf)
    blocked = np.any(zero & (b <= 0) & (c > 0), axis=0) | np.any(x_zero_rows < 0, axis=0)
    x_zero = np.min(x_zero_rows, axis=0) if n_rows else np.full(n_cols, np.inf)

    x_mvc = np.minimum(x_pair, x_zero)
    x_mvc = np.where(inconsistent | blocked, 0.0, x_mvc)
    return np.maximum(x_mvc, 0.0), upper_row, lower_row


def _direct_columns(b_v: np.ndarray, f_v: np.ndarray) -> np.ndarray:
    """Squared MVC_D from rows sdot**2 * b_v + f_v <= 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        x_rows = np.where(b_v > 1e-15, -f_v / np.where(b_v > 1e-15, b_v, 1.0), np.where(f_v > 0, 0.0, np.inf))
    return np.maximum(np.min(x_rows, axis=0), 0.0)


class PathDynamics:
    """Constraint coefficients a_i(s), b_i(s), c_i(s) on the s-grid, with MVC and MVC_D."""

    def __init__(
        self,
        s_end: float,
        a: np.ndarray,
        b: np.ndarray,
        c: np.ndarray,
        direct_b: Optional[np.ndarray] = None,
        direct_f: Optional[np.ndarray] = None,
        mvc_direct: Optional[np.ndarray] = None,
        zero_inertia_threshold: float = ZERO_INERTIA_THRESHOLD,
    ):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        c = np.atleast_2d(np.asarray(c, dtype=float))
        if not (a.shape == b.shape == c.shape):
            raise DimensionMismatchError(f"coefficient shapes differ: {a.shape}, {b.shape}, {c.shape}")
        if a.shape[1] < MIN_GRID + 1:
            raise ValueError(f"grid must have at least {MIN_GRID} intervals")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise SystemEvaluationError("non-finite constraint coefficients")
        self.s_end = float(s_end)
        self.n_grid = a.shape[1] - 1
        self.ds = self.s_end / self.n_grid
        self.s_grid = np.linspace(0.0, self.s_end, self.n_grid + 1)
        self.a, self.b, self.c = a, b, c
        self.zero_inertia_threshold = zero_inertia_threshold
        self.row_scale = np.max(np.abs(a), axis=1)
        self.zero_mask = self._zero_at(a)

        x_mvc, self.upper_row, self.lower_row = _mvc_columns(a, b, c, self.zero_mask)
        self.mvc = np.sqrt(x_mvc)

        self.direct_b = None if direct_b is None else np.atleast_2d(np.asarray(direct_b, dtype=float))
        self.direct_f = None if direct_f is None else np.atleast_2d(np.asarray(direct_f, dtype=float))
        if self.direct_b is not None:
            self.mvc_direct: Optional[np.ndarray] = np.sqrt(_direct_columns(self.direct_b, self.direct_f))
        elif mvc_direct is not None:
            self.mvc_direct = np.asarray(mvc_direct, dtype=float).copy()
        else:
            self.mvc_direct = None

        self.mvc_sq = self.mvc ** 2
        self.direct_sq = (
            np.full(self.n_grid + 1, np.inf) if self.mvc_direct is None else self.mvc_direct ** 2
        )
        self.ceiling = np.minimum(self.mvc, np.sqrt(self.direct_sq))
        self.ceiling_sq = np.minimum(self.mvc_sq, self.direct_sq)

        p, q, positive, negative = _row_terms(a, b, c, self.zero_mask)
        self._beta_terms: List[Terms] = []
        self._alpha_terms: List[Terms] = []
        for k in range(self.n_grid + 1):
            self._beta_terms.append(tuple((float(p[i, k]), float(q[i, k])) for i in np.flatnonzero(positive[:, k])))
            self._alpha_terms.append(tuple((float(p[i, k]), float(q[i, k])) for i in np.flatnonzero(negative[:, k])))

    @classmethod
    def from_coefficients(
        cls,
        s_end: float,
        a: Sequence,
        b: Sequence,
        c: Sequence,
        mvc_direct: Optional[Sequence[float]] = None,
        zero_inertia_threshold: float = ZERO_INERTIA_THRESHOLD,
    ) -> "PathDynamics":
        """Synthetic phase-plane data straight from coefficient arrays of shape (M, N+1)."""
        return cls(
            s_end, a, b, c,
            mvc_direct=None if mvc_direct is None else np.asarray(mvc_direct, dtype=float),
            zero_inertia_threshold=zero_inertia_threshold,
        )

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]

    @property
    def has_direct_bounds(self) -> bool:
        return self.mvc_direct is not None

    def index_of(self, s: float) -> int:
        return int(min(max(round(s / self.ds), 0), self.n_grid))

    def limits_at(self, k: int, x: float) -> Tuple[float, float]:
        """(alpha, beta) at grid index k for squared velocity x."""
        beta = math.inf
        for p, q in self._beta_terms[k]:
            value = p - q * x
            if value < beta:
                beta = value
        alpha = -math.inf
        for p, q in self._alpha_terms[k]:
            value = p - q * x
            if value > alpha:
                alpha = value
        return alpha, beta

    def coefficients_at(self, s: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        position = min(max(s / self.ds, 0.0), float(self.n_grid))
        k = min(int(position), self.n_grid - 1)
        w = position - k
        return (
            self.a[:, k] * (1.0 - w) + self.a[:, k + 1] * w,
            self.b[:, k] * (1.0 - w) + self.b[:, k + 1] * w,
            self.c[:, k] * (1.0 - w) + self.c[:, k + 1] * w,
        )

    def _zero_at(self, a: np.ndarray) -> np.ndarray:
        # rows with a identically zero never enter sddot
        scale = self.row_scale if a.ndim == 1 else self.row_scale[:, None]
        return (np.abs(a) < self.zero_inertia_threshold * scale) | (scale == 0.0)

    def direct_at(self, s: float) -> float:
        if self.mvc_direct is None:
            return math.inf
        if self.direct_b is not None:
            position = min(max(s / self.ds, 0.0), float(self.n_grid))
            k = min(int(position), self.n_grid - 1)
            w = position - k
            b_v = self.direct_b[:, k] * (1.0 - w) + self.direct_b[:, k + 1] * w
            f_v = self.direct_f[:, k] * (1.0 - w) + self.direct_f[:, k + 1] * w
            return float(np.sqrt(_direct_columns(b_v[:, None], f_v[:, None])[0]))
        k_low = min(int(s / self.ds), self.n_grid - 1)
        if not (np.isfinite(self.direct_sq[k_low]) and np.isfinite(self.direct_sq[k_low + 1])):
            return math.inf
        return float(np.sqrt(np.interp(s, self.s_grid, self.direct_sq)))

    def ceiling_at(self, s: float) -> float:
        return min(compute_mvc(self, s), self.direct_at(s))

    def debug_table(self) -> Tuple[List[str], np.ndarray]:
        """Columns s, mvc, mvc_direct, a_i..., b_i..., c_i... for the CSV dump."""
        direct = self.mvc_direct if self.mvc_direct is not None else np.full(self.n_grid + 1, np.inf)
        columns = ["s", "mvc", "mvc_direct"]
        for prefix in ("a", "b", "c"):
            columns += [f"{prefix}_{i + 1}" for i in range(self.n_rows)]
        data = np.column_stack([self.s_grid, self.mvc, direct, self.a.T, self.b.T, self.c.T])
        return columns, data


def project_constraints(
    system: SystemModel,
    path: ConfigPath,
    n_grid: int = 1000,
    zero_inertia_threshold: float = ZERO_INERTIA_THRESHOLD,
) -> PathDynamics:
    """Samples a = A q_s, b = A q_ss + q_s^T B q_s, c = f on N+1 grid points."""
    if n_grid < MIN_GRID:
        raise ValueError(f"n_grid must be >= {MIN_GRID}, got {n_grid}")
    if system.dim != path.dim:
        raise DimensionMismatchError(f"system has {system.dim} DOF, path has {path.dim}")
    s_grid = np.linspace(0.0, path.s_end, n_grid + 1)
    q, q_s, q_ss = path.evaluate_many(s_grid)
    try:
        a, b, c = system.constraint_rows(q, q_s, q_ss)
    except (FloatingPointError, ValueError) as exc:
        raise SystemEvaluationError(f"{system.name} failed on the path: {exc}") from exc
    direct_b = direct_f = None
    if system.has_velocity_bounds:
        direct_b, direct_f = system.velocity_rows(q, q_s)
    pd = PathDynamics(
        path.s_end, a, b, c,
        direct_b=direct_b, direct_f=direct_f,
        zero_inertia_threshold=zero_inertia_threshold,
    )
    logger.debug(
        f"Projected {system.name} on a path of length {path.s_end:.4f}: "
        f"{pd.n_rows} rows, N={n_grid}, min MVC={float(np.min(pd.mvc)):.4g}"
    )
    return pd


def accel_limits(pd: PathDynamics, s: float, sdot: float) -> AccelBounds:
    """alpha = max over a_i < 0 rows, beta = min over a_i > 0 rows, at (s, sdot)."""
    a, b, c = pd.coefficients_at(s)
    zero = pd._zero_at(a)
    p, q, positive, negative = _row_terms(a, b, c, zero)
    x = sdot * sdot
    values = p - q * x
    beta = float(np.min(values[positive])) if np.any(positive) else math.inf
    alpha = float(np.max(values[negative])) if np.any(negative) else -math.inf
    return AccelBounds(alpha=alpha, beta=beta)


def compute_mvc(pd: PathDynamics, s: float) -> float:
    """Smallest sdot >= 0 where alpha meets beta; 0 if inconsistent at rest, inf if never."""
    a, b, c = pd.coefficients_at(s)
    x, _, _ = _mvc_columns(a[:, None], b[:, None], c[:, None], pd._zero_at(a)[:, None])
    return float(np.sqrt(x[0]))


def compute_mvc_direct(system: SystemModel, path: ConfigPath, s: float) -> float:
    """Largest sdot with sdot**2 * (q_s^T B_v q_s) + f_v <= 0 for every direct row."""
    if not system.has_velocity_bounds:
        return math.inf
    q, q_s, _ = path.evaluate(s)
    b_v, f_v = system.velocity_rows(q, q_s)
    return float(np.sqrt(_direct_columns(np.atleast_1d(b_v)[:, None], np.atleast_1d(f_v)[:, None])[0]))


def dump_csv(pd: PathDynamics, file_path, precision: int = 17) -> None:
    """Writes the debug table (s, mvc, mvc_direct, a_i, b_i, c_i) as CSV."""
    columns, data = pd.debug_table()
    np.savetxt(file_path, data, delimiter=",", header=",".join(columns), comments="", fmt=f"%.{precision}g")
    logger.debug(f"Phase-plane dump written to {file_path}")

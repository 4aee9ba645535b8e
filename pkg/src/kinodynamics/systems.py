"""
Dynamic system models producing second-order constraint rows along a path.

Every model maps a path point (q, q_s, q_ss) to rows (a_i, b_i, c_i) such
that the constraint a_i * sddot + b_i * sdot**2 + c_i <= 0 holds exactly when
the underlying joint-space constraint holds. Inputs may be single vectors of
shape (n,) or stacks of shape (K, n); outputs follow with shape (M,) or (M, K).
"""
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from src.core.errors import DimensionMismatchError, ScenarioError

logger = logging.getLogger(__name__)

Rows = Tuple[np.ndarray, np.ndarray, np.ndarray]


class DoublePendulumParams(BaseModel):
    """Planar 2R arm, angles measured from the downward vertical, theta2 relative to link 1."""
    l1: float = Field(0.2, gt=0)
    l2: float = Field(0.2, gt=0)
    m1: float = Field(8.0, gt=0)
    m2: float = Field(8.0, gt=0)
    g: float = Field(9.8, gt=0)
    tau_max: Tuple[float, float] = (11.0, 7.0)
    com_ratio: float = Field(0.5, gt=0, le=1)
    inertia: Optional[Tuple[float, float]] = None

    @field_validator("tau_max")
    @classmethod
    def _positive_limits(cls, value):
        if min(value) <= 0:
            raise ValueError("torque limits must be positive")
        return value

    @property
    def link_inertia(self) -> Tuple[float, float]:
        if self.inertia is not None:
            return self.inertia
        return (self.m1 * self.l1 ** 2 / 12.0, self.m2 * self.l2 ** 2 / 12.0)


class AccelerationBoxParams(BaseModel):
    """Per-joint acceleration box accel_min <= qdd <= accel_max (possibly inconsistent)."""
    accel_min: List[float]
    accel_max: List[float]
    vel_max: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_lengths(self):
        if len(self.accel_min) != len(self.accel_max):
            raise ValueError("accel_min and accel_max must have the same length")
        if self.vel_max is not None:
            if len(self.vel_max) != len(self.accel_max):
                raise ValueError("vel_max must have one entry per joint")
            if min(self.vel_max) <= 0:
                raise ValueError("velocity bounds must be positive")
        return self


class DoubleIntegratorParams(BaseModel):
    accel_max: List[float]
    vel_max: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_positive(self):
        if min(self.accel_max) <= 0:
            raise ValueError("accel_max entries must be positive")
        if self.vel_max is not None:
            if len(self.vel_max) != len(self.accel_max):
                raise ValueError("vel_max must have one entry per joint")
            if min(self.vel_max) <= 0:
                raise ValueError("vel_max entries must be positive")
        return self


def _as_stack(*arrays: Any) -> Tuple[bool, List[np.ndarray]]:
    single = np.ndim(arrays[0]) == 1
    return single, [np.atleast_2d(np.asarray(a, dtype=float)) for a in arrays]


def _finish(single: bool, *arrays: np.ndarray):
    if single:
        return tuple(a[..., 0] for a in arrays)
    return arrays


# ---------------------------------------------------------------------------
# Double pendulum
# ---------------------------------------------------------------------------

def _pendulum_terms(params: DoublePendulumParams, q: np.ndarray):
    """Mass matrix entries, Coriolis factor and gravity vector, broadcast over rows of q."""
    theta1, theta2 = q[:, 0], q[:, 1]
    r1 = params.com_ratio * params.l1
    r2 = params.com_ratio * params.l2
    i1, i2 = params.link_inertia
    cos2 = np.cos(theta2)
    m11 = i1 + i2 + params.m1 * r1 ** 2 + params.m2 * (params.l1 ** 2 + r2 ** 2 + 2.0 * params.l1 * r2 * cos2)
    m12 = i2 + params.m2 * (r2 ** 2 + params.l1 * r2 * cos2)
    m22 = np.full_like(theta1, i2 + params.m2 * r2 ** 2)
    h = params.m2 * params.l1 * r2 * np.sin(theta2)
    g1 = params.g * (params.m1 * r1 + params.m2 * params.l1) * np.sin(theta1) + params.g * params.m2 * r2 * np.sin(theta1 + theta2)
    g2 = params.g * params.m2 * r2 * np.sin(theta1 + theta2)
    return (m11, m12, m22), h, np.stack([g1, g2])


def _coriolis(h: np.ndarray, qd: np.ndarray) -> np.ndarray:
    return np.stack([
        -h * qd[:, 1] * (2.0 * qd[:, 0] + qd[:, 1]),
        h * qd[:, 0] ** 2,
    ])


def pendulum_mass_matrix(params: DoublePendulumParams, q) -> np.ndarray:
    (m11, m12, m22), _, _ = _pendulum_terms(params, np.atleast_2d(np.asarray(q, dtype=float)))
    return np.array([[m11[0], m12[0]], [m12[0], m22[0]]])


def pendulum_gravity(params: DoublePendulumParams, q) -> np.ndarray:
    _, _, gravity = _pendulum_terms(params, np.atleast_2d(np.asarray(q, dtype=float)))
    return gravity[:, 0]


def pendulum_energy(params: DoublePendulumParams, q, qd) -> Tuple[float, float]:
    """(kinetic, potential) energy; potential is zero with both links horizontal."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    kinetic = 0.5 * float(qd @ pendulum_mass_matrix(params, q) @ qd)
    r1 = params.com_ratio * params.l1
    r2 = params.com_ratio * params.l2
    potential = -params.g * (
        params.m1 * r1 * np.cos(q[0])
        + params.m2 * (params.l1 * np.cos(q[0]) + r2 * np.cos(q[0] + q[1]))
    )
    return kinetic, float(potential)


def pendulum_inverse_dynamics(params: DoublePendulumParams, q, qd, qdd) -> np.ndarray:
    """tau = M(q) qdd + C(q, qd) qd + g(q)."""
    single, (q, qd, qdd) = _as_stack(q, qd, qdd)
    (m11, m12, m22), h, gravity = _pendulum_terms(params, q)
    coriolis = _coriolis(h, qd)
    tau = np.stack([
        m11 * qdd[:, 0] + m12 * qdd[:, 1],
        m12 * qdd[:, 0] + m22 * qdd[:, 1],
    ]) + coriolis + gravity
    return tau[:, 0] if single else tau.T


def pendulum_constraint_rows(params: DoublePendulumParams, q, q_s, q_ss) -> Rows:
    """Rows for tau_i <= tau_max_i (first two) and -tau_i <= tau_max_i (last two)."""
    single, (q, q_s, q_ss) = _as_stack(q, q_s, q_ss)
    (m11, m12, m22), h, gravity = _pendulum_terms(params, q)
    a = np.stack([m11 * q_s[:, 0] + m12 * q_s[:, 1], m12 * q_s[:, 0] + m22 * q_s[:, 1]])
    b = np.stack([m11 * q_ss[:, 0] + m12 * q_ss[:, 1], m12 * q_ss[:, 0] + m22 * q_ss[:, 1]])
    b = b + _coriolis(h, q_s)
    tau_max = np.asarray(params.tau_max, dtype=float)[:, None]
    rows_a = np.concatenate([a, -a])
    rows_b = np.concatenate([b, -b])
    rows_c = np.concatenate([gravity - tau_max, -gravity - tau_max])
    return _finish(single, rows_a, rows_b, rows_c)


# ---------------------------------------------------------------------------
# Acceleration boxes and the double integrator
# ---------------------------------------------------------------------------

def box_constraint_rows(params: AccelerationBoxParams, q, q_s, q_ss) -> Rows:
    single, (q, q_s, q_ss) = _as_stack(q, q_s, q_ss)
    upper = np.asarray(params.accel_max, dtype=float)[:, None]
    lower = np.asarray(params.accel_min, dtype=float)[:, None]
    if q_s.shape[1] != upper.shape[0]:
        raise DimensionMismatchError(f"system has {upper.shape[0]} joints, path has {q_s.shape[1]}")
    rows_a = np.concatenate([q_s.T, -q_s.T])
    rows_b = np.concatenate([q_ss.T, -q_ss.T])
    rows_c = np.concatenate([
        np.broadcast_to(-upper, q_s.T.shape),
        np.broadcast_to(lower, q_s.T.shape),
    ])
    return _finish(single, rows_a, rows_b, rows_c)


def integrator_constraint_rows(params: DoubleIntegratorParams, q, q_s, q_ss) -> Rows:
    """Rows +qdd_j - accel_max_j <= 0 for every joint, then -qdd_j - accel_max_j <= 0."""
    box = AccelerationBoxParams(accel_min=[-v for v in params.accel_max], accel_max=params.accel_max)
    return box_constraint_rows(box, q, q_s, q_ss)


def joint_velocity_rows(vel_max: List[float], q_s) -> Tuple[np.ndarray, np.ndarray]:
    """Direct bounds qd_j**2 <= vel_max_j**2 as sdot**2 * b_v + f_v <= 0."""
    single, (q_s,) = _as_stack(q_s)
    limits = np.asarray(vel_max, dtype=float)[:, None]
    b_v = q_s.T ** 2
    f_v = np.broadcast_to(-(limits ** 2), b_v.shape)
    return _finish(single, b_v, np.array(f_v))


# ---------------------------------------------------------------------------
# System contract
# ---------------------------------------------------------------------------

class SystemModel(ABC):
    """Stateless constraint model: rows depend only on (q, q_s, q_ss)."""

    name: str = "system"

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def constraint_rows(self, q, q_s, q_ss) -> Rows:
        ...

    @property
    def has_velocity_bounds(self) -> bool:
        return False

    def velocity_rows(self, q, q_s) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        return None

    @abstractmethod
    def state_constraints(self, q, qd, qdd) -> Tuple[np.ndarray, np.ndarray]:
        """(values, limits) such that the state is admissible iff |values| <= limits."""

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.name, "params": self.params.model_dump()}


class DoublePendulum(SystemModel):
    name = "double_pendulum"

    def __init__(self, params: Optional[DoublePendulumParams] = None):
        self.params = params or DoublePendulumParams()

    @property
    def dim(self) -> int:
        return 2

    def inverse_dynamics(self, q, qd, qdd) -> np.ndarray:
        return pendulum_inverse_dynamics(self.params, q, qd, qdd)

    def constraint_rows(self, q, q_s, q_ss) -> Rows:
        return pendulum_constraint_rows(self.params, q, q_s, q_ss)

    def state_constraints(self, q, qd, qdd) -> Tuple[np.ndarray, np.ndarray]:
        tau = self.inverse_dynamics(q, qd, qdd)
        return tau, np.broadcast_to(np.asarray(self.params.tau_max, dtype=float), np.shape(tau))

    def with_torque_limits(self, tau_max: Tuple[float, float]) -> "DoublePendulum":
        return DoublePendulum(self.params.model_copy(update={"tau_max": tuple(tau_max)}))


class AccelerationBox(SystemModel):
    name = "acceleration_box"

    def __init__(self, params: AccelerationBoxParams):
        self.params = params

    @property
    def dim(self) -> int:
        return len(self.params.accel_max)

    def constraint_rows(self, q, q_s, q_ss) -> Rows:
        return box_constraint_rows(self.params, q, q_s, q_ss)

    @property
    def has_velocity_bounds(self) -> bool:
        return self.params.vel_max is not None

    def velocity_rows(self, q, q_s):
        if self.params.vel_max is None:
            return None
        return joint_velocity_rows(self.params.vel_max, q_s)

    def state_constraints(self, q, qd, qdd) -> Tuple[np.ndarray, np.ndarray]:
        qdd = np.asarray(qdd, dtype=float)
        upper = np.asarray(self.params.accel_max, dtype=float)
        lower = np.asarray(self.params.accel_min, dtype=float)
        centre = 0.5 * (upper + lower)
        half_width = 0.5 * (upper - lower)
        values = [qdd - centre]
        limits = [np.broadcast_to(half_width, qdd.shape)]
        if self.params.vel_max is not None:
            qd = np.asarray(qd, dtype=float)
            values.append(qd)
            limits.append(np.broadcast_to(np.asarray(self.params.vel_max, dtype=float), qd.shape))
        return np.concatenate(values, axis=-1), np.concatenate(limits, axis=-1)


class DoubleIntegrator(AccelerationBox):
    name = "double_integrator"

    def __init__(self, params: DoubleIntegratorParams):
        super().__init__(
            AccelerationBoxParams(
                accel_min=[-v for v in params.accel_max],
                accel_max=list(params.accel_max),
                vel_max=params.vel_max,
            )
        )
        self.integrator_params = params

    def constraint_rows(self, q, q_s, q_ss) -> Rows:
        return integrator_constraint_rows(self.integrator_params, q, q_s, q_ss)

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.name, "params": self.integrator_params.model_dump()}


_SYSTEMS = {
    DoublePendulum.name: (DoublePendulum, DoublePendulumParams),
    DoubleIntegrator.name: (DoubleIntegrator, DoubleIntegratorParams),
    AccelerationBox.name: (AccelerationBox, AccelerationBoxParams),
}


def build_system(spec: Dict[str, Any]) -> SystemModel:
    """Instantiates a system from a scenario block {type, params}."""
    kind = spec.get("type")
    if kind not in _SYSTEMS:
        raise ScenarioError(f"unknown system type {kind!r} (expected one of {sorted(_SYSTEMS)})")
    system_cls, params_cls = _SYSTEMS[kind]
    try:
        params = params_cls(**(spec.get("params") or {}))
    except ValueError as exc:
        raise ScenarioError(f"invalid parameters for {kind}: {exc}") from exc
    logger.debug(f"Built system {kind} with {params.model_dump()}")
    return system_cls(params)

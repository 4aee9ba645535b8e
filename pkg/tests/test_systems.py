"""Tests for the system models and their constraint rows."""
import numpy as np
import pytest

from src.core.errors import ScenarioError
from src.kinodynamics.path import hermite_segment
from src.kinodynamics.systems import (
    AccelerationBox,
    DoubleIntegrator,
    DoublePendulum,
    DoublePendulumParams,
    build_system,
    pendulum_energy,
    pendulum_gravity,
    pendulum_inverse_dynamics,
    pendulum_mass_matrix,
)


# =============================================================================
# Double pendulum dynamics
# =============================================================================


class TestPendulumDynamics:
    def test_quasi_static_first_joint(self) -> None:
        tau = pendulum_inverse_dynamics(DoublePendulumParams(), [np.pi / 2, np.pi], [0, 0], [0, 0])
        assert abs(tau[0]) == pytest.approx(15.68, abs=1e-6)

    def test_quasi_static_second_joint(self) -> None:
        tau = pendulum_inverse_dynamics(DoublePendulumParams(), [0.0, np.pi / 2], [0, 0], [0, 0])
        assert abs(tau[1]) == pytest.approx(7.84, abs=1e-6)

    def test_mass_matrix_symmetric_positive_definite(self, rng) -> None:
        params = DoublePendulumParams()
        for q in rng.uniform(-np.pi, np.pi, size=(20, 2)):
            m = pendulum_mass_matrix(params, q)
            np.testing.assert_allclose(m, m.T)
            assert np.all(np.linalg.eigvalsh(m) > 0.0)

    def test_gravity_is_potential_gradient(self, rng) -> None:
        params = DoublePendulumParams()
        h = 1e-6
        for q in rng.uniform(-np.pi, np.pi, size=(5, 2)):
            grad = np.zeros(2)
            for j in range(2):
                dq = np.zeros(2)
                dq[j] = h
                up = pendulum_energy(params, q + dq, np.zeros(2))[1]
                down = pendulum_energy(params, q - dq, np.zeros(2))[1]
                grad[j] = (up - down) / (2 * h)
            np.testing.assert_allclose(pendulum_gravity(params, q), grad, rtol=1e-5, atol=1e-7)

    def test_power_balance(self, rng) -> None:
        params = DoublePendulumParams()
        q, qd, qdd = rng.uniform(-1, 1, size=(3, 2))
        tau = pendulum_inverse_dynamics(params, q, qd, qdd)
        dt = 1e-6
        kinetic = lambda t: pendulum_energy(params, q + qd * t + 0.5 * qdd * t ** 2, qd + qdd * t)[0]
        dk_dt = (kinetic(dt) - kinetic(-dt)) / (2 * dt)
        power = qd @ (tau - pendulum_gravity(params, q))
        assert power == pytest.approx(dk_dt, rel=1e-4, abs=1e-8)

    def test_batched_inverse_dynamics(self, rng) -> None:
        params = DoublePendulumParams()
        q, qd, qdd = rng.uniform(-1, 1, size=(3, 4, 2))
        batch = pendulum_inverse_dynamics(params, q, qd, qdd)
        assert batch.shape == (4, 2)
        np.testing.assert_allclose(batch[2], pendulum_inverse_dynamics(params, q[2], qd[2], qdd[2]))


# =============================================================================
# Constraint rows
# =============================================================================


class TestConstraintRows:
    def test_pendulum_rows_match_inverse_dynamics(self, pendulum) -> None:
        path = hermite_segment([0.1, -0.3], [0.8, 0.6], [0.9, 0.4], [0.2, 1.0], 1.0)
        tau_max = np.array(pendulum.params.tau_max)
        for s in np.linspace(0.0, 1.0, 5):
            q, q_s, q_ss = path.evaluate(s)
            a, b, c = pendulum.constraint_rows(q, q_s, q_ss)
            for sddot, sdot in [(1.0, 0.0), (0.0, 1.0), (2.0, 3.0)]:
                tau = pendulum.inverse_dynamics(q, q_s * sdot, q_s * sddot + q_ss * sdot ** 2)
                residual = a * sddot + b * sdot ** 2 + c
                np.testing.assert_allclose(residual[:2], tau - tau_max, atol=1e-9)
                np.testing.assert_allclose(residual[2:], -tau - tau_max, atol=1e-9)

    def test_pendulum_degenerate_tangent(self, pendulum) -> None:
        q = np.array([0.4, 0.2])
        a, b, c = pendulum.constraint_rows(q, np.zeros(2), np.zeros(2))
        gravity = pendulum_gravity(pendulum.params, q)
        np.testing.assert_allclose(a, 0.0)
        np.testing.assert_allclose(b, 0.0)
        np.testing.assert_allclose(c[:2], gravity - np.array(pendulum.params.tau_max))

    def test_integrator_rows_on_straight_path(self, integrator) -> None:
        a, b, c = integrator.constraint_rows([0.3], [1.0], [0.0])
        np.testing.assert_allclose(a, [1.0, -1.0])
        np.testing.assert_allclose(b, [0.0, 0.0])
        np.testing.assert_allclose(c, [-1.0, -1.0])

    def test_integrator_rows_on_parabola(self, integrator) -> None:
        s = 0.4
        a, b, c = integrator.constraint_rows([s ** 2], [2 * s], [2.0])
        np.testing.assert_allclose(a, [2 * s, -2 * s])
        np.testing.assert_allclose(b, [2.0, -2.0])
        np.testing.assert_allclose(c, [-1.0, -1.0])


# =============================================================================
# Replay constraints and factory
# =============================================================================


class TestStateConstraints:
    def test_box_state_constraints(self, bounded_integrator) -> None:
        values, limits = bounded_integrator.state_constraints(
            np.zeros((2, 1)), np.array([[0.4], [0.6]]), np.array([[0.9], [-1.2]])
        )
        admissible = np.all(np.abs(values) <= limits, axis=1)
        assert admissible.tolist() == [True, False]

    def test_asymmetric_box_is_centred(self) -> None:
        system = build_system({"type": "acceleration_box", "params": {"accel_min": [-2.0], "accel_max": [-0.5]}})
        values, limits = system.state_constraints(np.zeros((3, 1)), np.zeros((3, 1)), np.array([[-1.0], [0.0], [-2.5]]))
        assert (np.abs(values) <= limits)[:, 0].tolist() == [True, False, False]

    def test_pendulum_torque_limits(self, pendulum) -> None:
        values, limits = pendulum.state_constraints(np.array([[np.pi / 2, np.pi]]), np.zeros((1, 2)), np.zeros((1, 2)))
        assert np.abs(values[0, 0]) > limits[0, 0]

    def test_with_torque_limits(self, pendulum) -> None:
        looser = pendulum.with_torque_limits((20.0, 10.0))
        assert looser.params.tau_max == (20.0, 10.0)
        assert pendulum.params.tau_max == (11.0, 7.0)


class TestBuildSystem:
    def test_builds_each_type(self) -> None:
        assert isinstance(build_system({"type": "double_pendulum"}), DoublePendulum)
        assert isinstance(build_system({"type": "double_integrator", "params": {"accel_max": [1.0]}}), DoubleIntegrator)
        box = build_system({"type": "acceleration_box", "params": {"accel_min": [1.0], "accel_max": [-1.0]}})
        assert isinstance(box, AccelerationBox)
        assert box.dim == 1

    def test_unknown_type(self) -> None:
        with pytest.raises(ScenarioError, match="unknown system type"):
            build_system({"type": "quadrotor"})

    def test_invalid_parameters(self) -> None:
        with pytest.raises(ScenarioError, match="invalid parameters"):
            build_system({"type": "double_pendulum", "params": {"tau_max": [-1.0, 7.0]}})

    def test_to_dict_round_trip(self) -> None:
        system = build_system({"type": "double_integrator", "params": {"accel_max": [1.0, 2.0]}})
        rebuilt = build_system(system.to_dict())
        assert rebuilt.to_dict() == system.to_dict()

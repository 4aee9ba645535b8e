"""Tests for piecewise-cubic configuration paths."""
import numpy as np
import pytest

from src.core.errors import ContinuityError, DegeneratePathError, DimensionMismatchError, PathDomainError
from src.kinodynamics.path import (
    ConfigPath,
    concatenate,
    concatenate_all,
    eval_path,
    hermite_segment,
    interpolate_c1,
    random_c1_path,
    random_unit_vector,
    straight_path,
)


# =============================================================================
# Evaluation
# =============================================================================


class TestEvalPath:
    def test_straight_segment(self) -> None:
        d = np.array([0.6, 0.8])
        path = straight_path([1.0, 2.0], [1.0 + d[0], 2.0 + d[1]])
        q, q_s, q_ss = eval_path(path, 0.3)
        np.testing.assert_allclose(q, [1.0 + 0.3 * d[0], 2.0 + 0.3 * d[1]])
        np.testing.assert_allclose(q_s, d)
        np.testing.assert_allclose(q_ss, [0.0, 0.0], atol=1e-12)

    def test_cubic_endpoint_conditions(self) -> None:
        path = hermite_segment([0.0], [1.0], [1.0], [1.0], 1.0)
        q, q_s, q_ss = eval_path(path, 0.0)
        assert q[0] == pytest.approx(0.0)
        assert q_s[0] == pytest.approx(1.0)
        assert q_ss[0] == pytest.approx(0.0)
        q, q_s, _ = eval_path(path, 1.0)
        assert q[0] == pytest.approx(1.0)
        assert q_s[0] == pytest.approx(1.0)

    def test_cubic_midpoint_by_symmetry(self) -> None:
        path = hermite_segment([0.0], [0.0], [1.0], [0.0], 1.0)
        q, q_s, q_ss = eval_path(path, 0.5)
        # q = 3 s^2 - 2 s^3
        assert q[0] == pytest.approx(0.5)
        assert q_s[0] == pytest.approx(1.5)
        assert q_ss[0] == pytest.approx(0.0, abs=1e-12)

    def test_out_of_range_raises(self) -> None:
        path = straight_path([0.0], [1.0])
        with pytest.raises(PathDomainError, match="outside"):
            eval_path(path, 1.5)
        with pytest.raises(PathDomainError):
            eval_path(path, -0.1)

    def test_evaluate_many_matches_single(self) -> None:
        path = hermite_segment([0.0, 1.0], [1.0, 0.0], [1.0, 0.0], [0.0, -1.0], 1.5)
        s = np.linspace(0.0, 1.5, 7)
        q, q_s, q_ss = path.evaluate_many(s)
        assert q.shape == (7, 2)
        for i, value in enumerate(s):
            single = path.evaluate(value)
            np.testing.assert_allclose(q[i], single[0])
            np.testing.assert_allclose(q_s[i], single[1])
            np.testing.assert_allclose(q_ss[i], single[2])

    def test_invalid_breakpoints(self) -> None:
        with pytest.raises(DegeneratePathError, match="strictly increasing"):
            ConfigPath(breakpoints=[0.0, 1.0, 1.0], coefficients=np.zeros((2, 1, 4)))


# =============================================================================
# Interpolation
# =============================================================================


class TestInterpolateC1:
    def test_collinear_tangent_gives_straight_line(self) -> None:
        path = interpolate_c1([0.0, 0.0], [1.0, 0.0], [1.0, 0.0])
        np.testing.assert_allclose(path.coefficients[0, :, 2:], 0.0, atol=1e-12)
        assert path.s_end == pytest.approx(1.0)

    def test_bent_boundary_conditions(self) -> None:
        path = interpolate_c1([0.0, 0.0], [0.0, 1.0], [1.0, 0.0])
        np.testing.assert_allclose(path.unit_tangent(0.0), [0.0, 1.0], atol=1e-9)
        np.testing.assert_allclose(path.unit_tangent(path.s_end), [1.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(path.end(), [1.0, 0.0], atol=1e-9)

    def test_random_start_tangent_is_honored(self, rng) -> None:
        for _ in range(20):
            q_from = rng.uniform(-1, 1, 2)
            q_to = rng.uniform(-1, 1, 2)
            u_from = random_unit_vector(rng, 2)
            path = interpolate_c1(q_from, u_from, q_to)
            _, q_s, _ = path.evaluate(0.0)
            assert np.linalg.norm(q_s / np.linalg.norm(q_s) - u_from) < 1e-9
            np.testing.assert_allclose(path.start(), q_from)
            np.testing.assert_allclose(path.end(), q_to, atol=1e-9)

    def test_length_is_chord(self) -> None:
        path = interpolate_c1([0.0, 0.0], [0.0, 1.0], [3.0, 4.0])
        assert path.s_end == pytest.approx(5.0)

    def test_coincident_endpoints_raise(self) -> None:
        with pytest.raises(DegeneratePathError, match="coincident"):
            interpolate_c1([0.5, 0.5], [1.0, 0.0], [0.5, 0.5])

    def test_dimension_mismatch(self) -> None:
        with pytest.raises(DimensionMismatchError):
            interpolate_c1([0.0, 0.0], [1.0, 0.0], [1.0, 0.0, 0.0])


# =============================================================================
# Concatenation
# =============================================================================


class TestConcatenate:
    def test_two_collinear_segments(self) -> None:
        joined = concatenate(straight_path([0.0], [1.0]), straight_path([1.0], [2.0]))
        assert joined.s_end == pytest.approx(2.0)
        for s in (0.2, 1.0, 1.7):
            assert joined.evaluate(s)[1][0] == pytest.approx(1.0)

    def test_reversed_tangent_raises(self) -> None:
        a = straight_path([0.0], [1.0])
        with pytest.raises(ContinuityError, match="tangent"):
            concatenate(a, straight_path([1.0], [0.0]))

    def test_position_gap_raises(self) -> None:
        with pytest.raises(ContinuityError, match="position"):
            concatenate(straight_path([0.0], [1.0]), straight_path([1.5], [2.0]))

    def test_chain_of_extensions_is_c1(self, rng) -> None:
        q = np.zeros(2)
        tangent = random_unit_vector(rng, 2)
        pieces = []
        for _ in range(5):
            q_next = q + rng.uniform(-0.5, 0.5, 2)
            piece = interpolate_c1(q, tangent, q_next)
            pieces.append(piece)
            q, tangent = q_next, piece.unit_tangent(piece.s_end)
        path = concatenate_all(pieces)
        h = 1e-6
        for s_star in path.breakpoints[1:-1]:
            left = path.evaluate(s_star - h)[1]
            right = path.evaluate(s_star + h)[1]
            assert np.linalg.norm(left - right) < 1e-4

    def test_empty_chain_raises(self) -> None:
        with pytest.raises(DegeneratePathError):
            concatenate_all([])


# =============================================================================
# Reversal, restriction and serialization
# =============================================================================


class TestPathTransforms:
    def test_reverse_swaps_endpoints(self) -> None:
        path = interpolate_c1([0.0, 0.0], [0.0, 1.0], [1.0, 0.5])
        back = path.reverse()
        np.testing.assert_allclose(back.start(), path.end(), atol=1e-12)
        np.testing.assert_allclose(back.end(), path.start(), atol=1e-12)
        np.testing.assert_allclose(back.evaluate(0.3)[0], path.evaluate(path.s_end - 0.3)[0], atol=1e-12)
        np.testing.assert_allclose(back.evaluate(0.3)[1], -path.evaluate(path.s_end - 0.3)[1], atol=1e-12)

    def test_subpath_matches_original(self) -> None:
        first = interpolate_c1([0.0, 0.0], [0.0, 1.0], [1.0, 0.5])
        second = interpolate_c1(first.end(), first.unit_tangent(first.s_end), [2.0, 0.0])
        path = concatenate(first, second)
        s0, s1 = 0.4, path.s_end - 0.2
        piece = path.subpath(s0, s1)
        assert piece.s_end == pytest.approx(s1 - s0)
        for u in np.linspace(0.0, piece.s_end, 9):
            np.testing.assert_allclose(piece.evaluate(u)[0], path.evaluate(s0 + u)[0], atol=1e-12)
            np.testing.assert_allclose(piece.evaluate(u)[1], path.evaluate(s0 + u)[1], atol=1e-12)

    def test_subpath_invalid_range(self) -> None:
        with pytest.raises(PathDomainError):
            straight_path([0.0], [1.0]).subpath(0.8, 0.2)

    def test_dict_round_trip_preserves_evaluation(self) -> None:
        path = interpolate_c1([0.0, 0.0], [0.0, 1.0], [1.0, 0.5])
        restored = ConfigPath.from_dict(path.to_dict())
        np.testing.assert_allclose(restored.evaluate(0.7)[0], path.evaluate(0.7)[0])

    def test_declared_dimension_checked(self) -> None:
        data = straight_path([0.0], [1.0]).to_dict()
        data["dim"] = 2
        with pytest.raises(DimensionMismatchError):
            ConfigPath.from_dict(data)

    def test_random_path_is_seeded(self) -> None:
        bounds = np.array([[-1.0, 1.0], [-1.0, 1.0]])
        a = random_c1_path(np.random.default_rng(7), bounds)
        b = random_c1_path(np.random.default_rng(7), bounds)
        np.testing.assert_array_equal(a.coefficients, b.coefficients)
        assert 0.2 <= a.s_end <= 1.0

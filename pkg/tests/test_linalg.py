"""Unit and property tests for the dense linear-algebra kernels."""

import numpy as np
import pytest

from lipbound.errors import (
    DimensionMismatch,
    NonPositiveScaling,
    NotConverged,
    NotPositiveDefinite,
)
from lipbound.linalg import (
    cholesky,
    default_shift,
    gamma_matrix,
    power_iteration,
    psd_check,
    row_abs_sums,
    scaled_row_sums,
    spectral_norm,
    spectral_upper_bound,
)


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + 0.1 * np.eye(n)


class TestCholesky:
    def test_identity(self):
        L = cholesky(np.eye(2))
        np.testing.assert_array_equal(L, np.eye(2))

    def test_diagonal_square_roots(self):
        L = cholesky(np.diag([4.0, 9.0]))
        np.testing.assert_array_equal(L, np.diag([2.0, 3.0]))

    def test_singular_boundary_case_rejected(self):
        # hand elimination: second pivot is 0.25 - 0.25 = 0
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.array([[1.0, -0.5], [-0.5, 0.25]]))

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            cholesky(np.ones((2, 3)))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_reconstruction_on_random_spd(self):
        rng = np.random.default_rng(42)
        for n in (1, 2, 3, 5, 8, 20, 50):
            S = random_spd(rng, n)
            L = cholesky(S)
            assert np.all(np.diag(L) > 0)
            assert np.all(np.triu(L, 1) == 0)
            err = np.max(np.abs(L @ L.T - S))
            assert err <= 1e-10 * (1.0 + np.max(np.abs(S)))


class TestGammaMatrix:
    def test_scalar(self):
        G = gamma_matrix(np.array([[2.0]]), np.eye(1))
        np.testing.assert_array_equal(G, [[4.0]])

    def test_scalar_inverse(self):
        G = gamma_matrix(np.eye(1), cholesky(np.array([[4.0]])))
        np.testing.assert_allclose(G, [[0.25]])

    def test_row_vector(self):
        G = gamma_matrix(np.array([[1.0, 1.0]]), np.eye(2))
        np.testing.assert_allclose(G, [[2.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            gamma_matrix(np.ones((2, 3)), np.eye(2))

    def test_symmetric_and_psd_on_random_inputs(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            m, n = rng.integers(1, 9, size=2)
            W = rng.standard_normal((m, n))
            L = cholesky(random_spd(rng, int(n)))
            G = gamma_matrix(W, L)
            np.testing.assert_array_equal(G, G.T)
            assert psd_check(G)


class TestPowerIteration:
    def test_dominant_diagonal(self):
        sigma, residual = power_iteration(np.diag([3.0, 1.0]))
        assert abs(sigma - 3.0) <= 1e-9
        assert residual <= 1e-9

    def test_two_by_two(self):
        # eigenvalues {1, 3} by characteristic polynomial
        sigma, _ = power_iteration(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert abs(sigma - 3.0) <= 1e-9

    def test_zero_matrix(self):
        sigma, residual = power_iteration(np.zeros((3, 3)))
        assert sigma == 0.0 and residual == 0.0

    def test_restart_when_start_vector_in_kernel(self):
        # all-ones is in the kernel; eigenvalues are {0, 2}
        sigma, _ = power_iteration(np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert abs(sigma - 2.0) <= 1e-9

    def test_not_converged_carries_estimate(self):
        with pytest.raises(NotConverged) as exc_info:
            power_iteration(np.diag([3.0, 1.0]), max_iter=1)
        assert exc_info.value.sigma > 0
        assert np.isfinite(exc_info.value.residual)

    def test_tol_must_be_positive(self):
        with pytest.raises(ValueError):
            power_iteration(np.eye(2), tol=0.0)

    def test_against_dense_eigensolver_small_dims(self):
        rng = np.random.default_rng(3)
        for n in range(1, 7):
            for _ in range(10):
                A = rng.standard_normal((n, n))
                S = A @ A.T
                sigma, _ = power_iteration(S)
                top = float(np.linalg.eigvalsh(S)[-1])
                assert abs(sigma - top) <= 1e-6 * max(top, 1.0)


class TestRowSums:
    def test_simple(self):
        np.testing.assert_array_equal(
            row_abs_sums(np.array([[2.0, 1.0], [1.0, 2.0]])), [3.0, 3.0]
        )

    def test_zero(self):
        np.testing.assert_array_equal(row_abs_sums(np.zeros((3, 3))), np.zeros(3))

    def test_absolute_values(self):
        np.testing.assert_array_equal(
            row_abs_sums(np.array([[1.0, -2.0], [3.0, 0.0]])), [3.0, 3.0]
        )

    def test_scaled_with_unit_scaling_matches(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            n = int(rng.integers(1, 8))
            G = rng.standard_normal((n, n))
            np.testing.assert_array_equal(
                scaled_row_sums(G, np.ones(n)), row_abs_sums(G)
            )

    def test_scaled_hand_case(self):
        G = np.array([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(scaled_row_sums(G, np.array([1.0, 2.0])), [4.0, 2.5])

    def test_scaled_diagonal_independent_of_q(self):
        G = np.diag([3.0, 5.0])
        for q in ([1.0, 1.0], [0.2, 7.0]):
            np.testing.assert_allclose(scaled_row_sums(G, np.array(q)), [3.0, 5.0])

    def test_scaled_rejects_nonpositive(self):
        with pytest.raises(NonPositiveScaling):
            scaled_row_sums(np.eye(2), np.array([1.0, 0.0]))


class TestPsdCheck:
    def test_identity_no_shift(self):
        assert psd_check(np.eye(3), shift=0.0)

    def test_singular_psd_passes_default_shift(self):
        # det = 9 - 9 = 0: exactly singular PSD
        assert psd_check(np.array([[0.25, -3.0], [-3.0, 36.0]]))

    def test_indefinite_fails(self):
        # eigenvalues {3, -1}
        assert not psd_check(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_default_shift_scaling(self):
        assert default_shift(np.diag([0.0, 99.0])) == 1e-8 * 100.0


class TestSpectralUpperBound:
    def test_tight_on_constant_row_sums(self):
        assert spectral_upper_bound(np.array([[2.0, 1.0], [1.0, 2.0]])) == 3.0

    def test_diagonal(self):
        assert spectral_upper_bound(np.diag([5.0, 1.0])) == 5.0

    def test_permutation(self):
        assert spectral_upper_bound(np.array([[0.0, 1.0], [1.0, 0.0]])) == 1.0

    def test_dominates_power_iteration(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(1, 10))
            G = random_spd(rng, n)
            sigma, _ = power_iteration(G)
            assert spectral_upper_bound(G) >= sigma * (1.0 - 1e-12)


class TestSpectralNorm:
    def test_rectangular(self):
        rng = np.random.default_rng(9)
        for shape in ((3, 5), (5, 3), (1, 4), (4, 4)):
            W = rng.standard_normal(shape)
            expect = float(np.linalg.svd(W, compute_uv=False)[0])
            assert abs(spectral_norm(W) - expect) <= 1e-8 * max(expect, 1.0)

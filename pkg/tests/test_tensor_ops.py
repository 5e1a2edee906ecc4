"""Tests for the structured linear-algebra primitives.

The Toeplitz constructors are checked against an independent oracle that
assembles the stacked shift operators P = [I S S^2 ...] explicitly and
multiplies out P (I kron a); the reshape/decompose pair is checked against
outer-product and SVD oracles and round trips.
"""

import numpy as np
import pytest

from kopid.tensor_ops import (
    NotKopVectorError,
    decompose_kop,
    kron_vec,
    rank_one_ratio,
    reshape_kop,
    toeplitz_mat,
    toeplitz_vec,
)


def shift_matrix(m: int) -> np.ndarray:
    """Down-shift operator: (S a)_1 = 0, (S a)_i = a_{i-1}."""
    S = np.zeros((m, m))
    S[1:, :-1] = np.eye(m - 1)
    return S


def stacked_shift_toeplitz(a: np.ndarray, n: int) -> np.ndarray:
    """Oracle: P (I_n kron a) with P assembled from explicit shift powers."""
    m = a.size
    S = shift_matrix(m)
    P = np.hstack([np.linalg.matrix_power(S, k) for k in range(n)])
    return P @ np.kron(np.eye(n), a.reshape(-1, 1))


def stacked_shift_toeplitz_mat(A: np.ndarray, n: int) -> np.ndarray:
    m = A.shape[0]
    S = shift_matrix(m)
    P = np.hstack([np.linalg.matrix_power(S, k) for k in range(n)])
    return P @ np.kron(np.eye(n), A)


class TestToeplitzVec:
    def test_small_example(self):
        expected = np.array([[1.0, 0.0], [2.0, 1.0], [3.0, 2.0]])
        np.testing.assert_array_equal(toeplitz_vec([1.0, 2.0, 3.0], 2), expected)

    def test_single_element(self):
        np.testing.assert_array_equal(toeplitz_vec([5.0], 1), [[5.0]])

    def test_matches_shift_oracle(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal(7)
        np.testing.assert_array_equal(toeplitz_vec(a, 3), stacked_shift_toeplitz(a, 3))

    def test_shift_oracle_many_shapes(self):
        """Exact equality with P (I kron a) across random integer vectors."""
        rng = np.random.default_rng(11)
        for _ in range(50):
            m = int(rng.integers(1, 51))
            n = int(rng.integers(1, m + 1))
            a = rng.integers(-5, 6, size=m).astype(float)
            np.testing.assert_array_equal(toeplitz_vec(a, n), stacked_shift_toeplitz(a, n))

    def test_strictly_banded(self):
        T = toeplitz_vec(np.arange(1.0, 7.0), 4)
        assert np.all(T[np.triu_indices_from(T, k=1)] == 0.0)

    def test_more_columns_than_rows(self):
        # delays past the signal length give all-zero columns, matching the
        # stacked-shift oracle (S^k = 0 for k >= m)
        a = np.array([1.0, 2.0])
        got = toeplitz_vec(a, 4)
        np.testing.assert_array_equal(got, stacked_shift_toeplitz(a, 4))
        np.testing.assert_array_equal(got[:, 2:], 0.0)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            toeplitz_vec([1.0, 2.0], 0)
        with pytest.raises(ValueError):
            toeplitz_vec([], 1)


class TestToeplitzMat:
    def test_single_column_reduces_to_vector_case(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal(6)
        np.testing.assert_array_equal(toeplitz_mat(a[:, None], 3), toeplitz_vec(a, 3))

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((6, 2))
        got = toeplitz_mat(A, 3)
        assert got.shape == (6, 6)
        np.testing.assert_array_equal(got, stacked_shift_toeplitz_mat(A, 3))

    def test_dense_oracle_many_shapes(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            m = int(rng.integers(1, 25))
            p = int(rng.integers(1, 5))
            n = int(rng.integers(1, m + 1))
            A = rng.standard_normal((m, p))
            np.testing.assert_array_equal(toeplitz_mat(A, n), stacked_shift_toeplitz_mat(A, n))

    def test_kronecker_collapse_identity(self):
        """T(F, n) (g kron c) = T(F c, n) g: the collapse behind the kernel identity."""
        rng = np.random.default_rng(17)
        for _ in range(20):
            m, p, n = 12, 3, 5
            F = rng.standard_normal((m, p))
            g = rng.standard_normal(n)
            c = rng.standard_normal(p)
            lhs = toeplitz_mat(F, n) @ np.kron(g, c)
            rhs = toeplitz_vec(F @ c, n) @ g
            np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


class TestKron:
    def test_definition(self):
        np.testing.assert_array_equal(kron_vec([1.0, 2.0], [3.0, 4.0]), [3.0, 4.0, 6.0, 8.0])

    def test_unit_vector(self):
        b = np.array([2.0, -1.0, 0.5])
        out = kron_vec([1.0, 0.0], b)
        np.testing.assert_array_equal(out[:3], b)
        np.testing.assert_array_equal(out[3:], 0.0)

    def test_bilinear_property(self):
        """(A kron B)(C kron D) = AC kron BD on random blocks."""
        rng = np.random.default_rng(19)
        for _ in range(20):
            A, B, C, D = (rng.standard_normal((2, 2)) for _ in range(4))
            lhs = np.kron(A, B) @ np.kron(C, D)
            rhs = np.kron(A @ C, B @ D)
            np.testing.assert_allclose(lhs, rhs, atol=1e-13)

    def test_vectorization_identity(self):
        rng = np.random.default_rng(23)
        a = rng.standard_normal(4)
        b = rng.standard_normal(3)
        # column-major vec of b a^T
        np.testing.assert_allclose(np.outer(b, a).flatten(order="F"), kron_vec(a, b))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            kron_vec([], [1.0])


class TestReshape:
    def test_small_example(self):
        M = reshape_kop(np.array([3.0, 4.0, 6.0, 8.0]), 2, 2)
        np.testing.assert_array_equal(M, [[3.0, 6.0], [4.0, 8.0]])

    def test_kron_reshapes_to_outer_product(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            g = rng.standard_normal(6)
            c = rng.standard_normal(4)
            M = reshape_kop(np.kron(g, c), 6, 4)
            np.testing.assert_array_equal(M, np.outer(c, g))

    def test_generic_vector_is_not_rank_one(self):
        rng = np.random.default_rng(31)
        theta = rng.standard_normal(9)
        s = np.linalg.svd(reshape_kop(theta, 3, 3), compute_uv=False)
        assert s[1] > 1e-3

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            reshape_kop(np.ones(5), 2, 2)


class TestDecompose:
    def test_hand_worked_example(self):
        fac = decompose_kop(np.array([3.0, 4.0, 6.0, 8.0]), 2, 2)
        np.testing.assert_allclose(fac.g, np.array([1.0, 2.0]) / np.sqrt(5.0), atol=1e-14)
        np.testing.assert_allclose(fac.c, np.sqrt(5.0) * np.array([3.0, 4.0]), atol=1e-13)

    def test_sign_flip_absorbed(self):
        rng = np.random.default_rng(37)
        g = rng.standard_normal(5)
        c = rng.standard_normal(3)
        fac = decompose_kop(np.kron(g, c), 5, 3)
        fac_flipped = decompose_kop(np.kron(-g, -c), 5, 3)
        np.testing.assert_allclose(fac.g, fac_flipped.g, atol=1e-12)
        np.testing.assert_allclose(fac.c, fac_flipped.c, atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            g = rng.standard_normal(7)
            c = rng.standard_normal(4)
            theta = np.kron(g, c)
            fac = decompose_kop(theta, 7, 4)
            assert abs(np.linalg.norm(fac.g) - 1.0) < 1e-12
            np.testing.assert_allclose(fac.kron(), theta, rtol=0, atol=1e-12 * np.abs(theta).max())

    def test_scale_invariance(self):
        """decompose(kron(alpha g, c / alpha)) does not depend on alpha."""
        rng = np.random.default_rng(43)
        g = rng.standard_normal(6)
        c = rng.standard_normal(3)
        ref = decompose_kop(np.kron(g, c), 6, 3)
        for alpha in (0.01, -3.0, 250.0):
            fac = decompose_kop(np.kron(alpha * g, c / alpha), 6, 3)
            np.testing.assert_allclose(fac.g, ref.g, atol=1e-10)
            np.testing.assert_allclose(fac.c, ref.c, rtol=1e-10, atol=1e-12)

    def test_gauge_convention(self):
        rng = np.random.default_rng(47)
        for _ in range(20):
            g = rng.standard_normal(8)
            c = rng.standard_normal(3)
            fac = decompose_kop(np.kron(g, c), 8, 3)
            lead = fac.g[np.abs(fac.g) > 1e-8][0]
            assert lead > 0.0

    def test_non_kop_vector_rejected(self):
        rng = np.random.default_rng(53)
        theta = rng.standard_normal(12)
        with pytest.raises(NotKopVectorError) as excinfo:
            decompose_kop(theta, 4, 3)
        assert excinfo.value.rank_ratio > 1e-8

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            decompose_kop(np.zeros(6), 3, 2)

    def test_widened_tolerance_accepts_noisy_kop(self):
        rng = np.random.default_rng(59)
        g = rng.standard_normal(6)
        c = rng.standard_normal(3)
        theta = np.kron(g, c) + 1e-6 * rng.standard_normal(18)
        with pytest.raises(NotKopVectorError):
            decompose_kop(theta, 6, 3)
        fac = decompose_kop(theta, 6, 3, tol=1e-3)
        np.testing.assert_allclose(np.abs(fac.g @ (g / np.linalg.norm(g))), 1.0, atol=1e-4)


class TestRankOneRatio:
    def test_exact_rank_one(self):
        M = np.outer([1.0, 2.0], [3.0, 4.0, 5.0])
        assert rank_one_ratio(M) < 1e-15

    def test_identity_matrix(self):
        assert rank_one_ratio(np.eye(3)) == pytest.approx(1.0)

"""Tests for the stable spline and KOP kernels."""

import numpy as np
import pytest

from kopid.kernels import kop_kernel, stable_spline, stable_spline_cholesky


class TestStableSpline:
    def test_two_by_two(self):
        np.testing.assert_allclose(
            stable_spline(0.5, 2), [[0.5, 0.25], [0.25, 0.25]], atol=1e-15
        )

    def test_beta_zero_is_zero_matrix(self):
        np.testing.assert_array_equal(stable_spline(0.0, 3), np.zeros((3, 3)))

    def test_positive_definite(self):
        K = stable_spline(0.9, 30)
        eig = np.linalg.eigvalsh(K)
        assert np.all(eig >= 0.0)
        assert eig.min() > 0.0

    def test_symmetric_with_decaying_diagonal(self):
        K = stable_spline(0.7, 10)
        np.testing.assert_array_equal(K, K.T)
        assert np.all(np.diff(np.diag(K)) < 0.0)
        np.testing.assert_allclose(np.diag(K), 0.7 ** np.arange(1, 11))

    def test_invalid_beta(self):
        for beta in (-0.1, 1.0, 1.5):
            with pytest.raises(ValueError):
                stable_spline(beta, 4)


class TestStableSplineCholesky:
    def test_factor_reproduces_kernel(self):
        for beta in (0.05, 0.5, 0.95):
            for n in (1, 2, 8, 30):
                L = stable_spline_cholesky(beta, n)
                np.testing.assert_allclose(L @ L.T, stable_spline(beta, n), atol=1e-14)
                assert np.all(np.triu(L, k=1) == 0.0)

    def test_survives_betas_that_break_numerical_cholesky(self):
        # K itself has condition ~ beta^-n here; the closed form is exact.
        beta, n = 0.05, 30
        L = stable_spline_cholesky(beta, n)
        np.testing.assert_allclose(L @ L.T, stable_spline(beta, n), atol=1e-15)

    def test_beta_zero(self):
        np.testing.assert_array_equal(stable_spline_cholesky(0.0, 4), np.zeros((4, 4)))


class TestKopKernel:
    def test_scalar_c_reduces_to_stable_spline(self):
        np.testing.assert_array_equal(kop_kernel(0.6, [1.0], 5), stable_spline(0.6, 5))

    def test_explicit_expansion(self):
        expected = np.array(
            [
                [0.5, 1.0, 0.25, 0.5],
                [1.0, 2.0, 0.5, 1.0],
                [0.25, 0.5, 0.25, 0.5],
                [0.5, 1.0, 0.5, 1.0],
            ]
        )
        np.testing.assert_allclose(kop_kernel(0.5, [1.0, 2.0], 2), expected, atol=1e-15)

    def test_rank_equals_n(self):
        H = kop_kernel(0.8, [1.0, -1.0, 2.0], 5)
        s = np.linalg.svd(H, compute_uv=False)
        assert s[5] / s[0] < 1e-12
        assert s[4] / s[0] > 1e-12

    def test_psd_on_random_probes(self):
        rng = np.random.default_rng(61)
        H = kop_kernel(0.85, rng.standard_normal(3), 6)
        bound = 1e-12 * np.linalg.norm(H, 2)
        for _ in range(50):
            x = rng.standard_normal(18)
            assert x @ H @ x >= -bound * (x @ x)

    def test_eigenvalues_are_scaled_spline_spectrum(self):
        c = np.array([0.3, -1.2, 0.7])
        K = stable_spline(0.75, 4)
        H = kop_kernel(0.75, c, 4)
        expected = np.sort(np.concatenate([np.linalg.eigvalsh(K) * (c @ c), np.zeros(4 * 2)]))
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(H)), expected, atol=1e-12)

    def test_every_kop_vector_lies_in_the_row_space(self):
        # H ((K^-1 g) kron c / (c.c)) = g kron c, so kron(g, c) is always
        # reachable despite the rank deficiency
        rng = np.random.default_rng(63)
        c = rng.standard_normal(3)
        H = kop_kernel(0.7, c, 4)
        for _ in range(10):
            g = rng.standard_normal(4)
            target = np.kron(g, c)
            x, *_ = np.linalg.lstsq(H, target, rcond=None)
            np.testing.assert_allclose(H @ x, target, atol=1e-10)

    def test_sign_and_scale_of_c(self):
        c = np.array([0.5, 2.0])
        np.testing.assert_array_equal(kop_kernel(0.4, c, 3), kop_kernel(0.4, -c, 3))
        np.testing.assert_allclose(
            kop_kernel(0.4, 3.0 * c, 3), 9.0 * kop_kernel(0.4, c, 3), atol=1e-13
        )

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            kop_kernel(1.0, [1.0], 3)
        with pytest.raises(ValueError):
            kop_kernel(0.5, [], 3)

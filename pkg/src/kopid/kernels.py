"""Covariance kernels for impulse-response and overparameterized priors.

The first-order stable spline (TC) kernel ``K[i, j] = beta^max(i, j)``
encodes exponentially decaying, smooth impulse responses.  The KOP kernel
``K kron c c^T`` extends it to the Kronecker-overparameterized vector and is
deliberately rank deficient (rank n), which forces posterior means to be
exact Kronecker products.  No separate amplitude hyperparameter is used:
with the impulse response pinned to unit norm, the scale lives in ``c``.
"""

from __future__ import annotations

import numpy as np


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    return beta


def stable_spline(beta: float, n: int) -> np.ndarray:
    """First-order stable spline kernel K[i, j] = beta^max(i, j), 1-based.

    Symmetric PSD; strictly positive definite for beta in (0, 1); the zero
    matrix for beta = 0.
    """
    beta = _check_beta(beta)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    idx = np.arange(1, n + 1)
    return beta ** np.maximum.outer(idx, idx)


def stable_spline_cholesky(beta: float, n: int) -> np.ndarray:
    """Lower-triangular L with L L^T equal to the stable spline kernel.

    Closed form: with rho = sqrt(beta), K factors as D T D where D =
    diag(rho^i) and T is the AR(1) correlation matrix with parameter rho,
    whose Cholesky factor is known analytically.  Computing L this way stays
    exact for beta values where a numerical Cholesky of K would break down
    (K's condition number grows like beta^-n).
    """
    beta = _check_beta(beta)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    idx = np.arange(1, n + 1)
    rho = np.sqrt(beta)
    L = np.zeros((n, n))
    L[:, 0] = rho ** (idx - 1)
    scale = np.sqrt(1.0 - beta)
    for j in range(2, n + 1):
        L[j - 1 :, j - 1] = rho ** (idx[j - 1 :] - j) * scale
    return (rho**idx)[:, None] * L


def kop_kernel(beta: float, c: np.ndarray, n: int) -> np.ndarray:
    """Kronecker-overparameterized kernel H = K_beta kron (c c^T).

    Args:
        beta: Stable spline decay hyperparameter in [0, 1).
        c: Coefficient vector of length p (sign-insensitive: c and -c give
            the same kernel).
        n: Impulse-response length.

    Returns:
        Symmetric PSD array of shape (n*p, n*p) with rank n for nonzero c
        and beta in (0, 1).
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("c must be a nonempty 1-D vector")
    K = stable_spline(beta, n)
    return np.kron(K, np.outer(c, c))

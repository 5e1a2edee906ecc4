"""Structured linear algebra for overparameterized Hammerstein models.

Lower-triangular banded Toeplitz operators realize discrete convolution by a
finite impulse response; their matrix extension stacks shifted copies of a
basis-evaluation matrix.  A Kronecker-overparameterized (KOP) vector is one
expressible as ``kron(g, c)``; its column-major reshape into a p-by-n matrix
is rank one, which is what makes the exact decomposition back into ``(g, c)``
possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Entries of g smaller than this fraction of ||g|| are ignored when fixing
# the leading sign (guards against a near-zero leading sample).
SIGN_TOLERANCE = 1e-8

# Default admissible ratio sigma_2/sigma_1 for the rank-one test.
RANK_ONE_TOLERANCE = 1e-8


class NotKopVectorError(ValueError):
    """Raised when a vector fails the rank-one (KOP) test.

    Attributes:
        rank_ratio: The offending second-to-first singular value ratio.
    """

    def __init__(self, rank_ratio: float, tol: float):
        self.rank_ratio = rank_ratio
        super().__init__(
            f"reshaped vector is not rank one: sigma2/sigma1 = "
            f"{rank_ratio:.3e} exceeds tolerance {tol:.3e}"
        )


@dataclass(frozen=True)
class KopFactorization:
    """Unique factorization theta = kron(g, c) in the normalized gauge.

    ``g`` has unit 2-norm and its first non-negligible entry is positive;
    the overall scale of the product lives in ``c``.
    """

    g: np.ndarray
    c: np.ndarray

    def kron(self) -> np.ndarray:
        """Reassemble the overparameterized vector kron(g, c)."""
        return np.kron(self.g, self.c)


def toeplitz_vec(a: np.ndarray, n: int) -> np.ndarray:
    """Build the m-by-n causal Toeplitz (convolution) matrix of ``a``.

    Column j holds ``a`` delayed by j-1 samples, truncated to m rows and
    zero-padded at the top, so entry (i, j) is ``a[i-j]`` when the index is
    valid and zero otherwise (strictly lower-triangular band).

    Args:
        a: Source vector of length m.
        n: Number of columns (delays 0 .. n-1).

    Returns:
        Array of shape (m, n).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("a must be a nonempty 1-D vector")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    m = a.size
    T = np.zeros((m, n))
    for j in range(min(n, m)):
        T[j:, j] = a[: m - j]
    return T


def toeplitz_mat(A: np.ndarray, n: int) -> np.ndarray:
    """Block extension of :func:`toeplitz_vec` to an m-by-p matrix.

    Block j (of width p) is ``A`` shifted down by j-1 rows with zero fill,
    i.e. the realization of P (I_n kron A) for the stacked shift operators.

    Args:
        A: Source matrix of shape (m, p).
        n: Number of blocks.

    Returns:
        Array of shape (m, n*p).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("A must be a nonempty 2-D matrix")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    m, p = A.shape
    T = np.zeros((m, n * p))
    for j in range(min(n, m)):
        T[j:, j * p : (j + 1) * p] = A[: m - j, :]
    return T


def kron_vec(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two vectors: block i equals ``a[i] * b``.

    Thin wrapper kept for symmetry with :func:`reshape_kop`; satisfies
    ``vec(b a^T) = kron(a, b)`` under column-major vectorization.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("vectors must be nonempty")
    return np.kron(a, b)


def reshape_kop(theta: np.ndarray, n: int, p: int) -> np.ndarray:
    """Reshape a length-n*p vector into the p-by-n matrix M[i, j] = theta[j*p + i].

    For a KOP vector theta = kron(g, c) the result is exactly the rank-one
    outer product ``c g^T``.

    Args:
        theta: Vector of length n*p.
        n: Length of the impulse-response factor.
        p: Length of the coefficient factor.

    Returns:
        Array of shape (p, n).
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size != n * p:
        raise ValueError(
            f"theta must be a vector of length n*p = {n * p}, got shape {theta.shape}"
        )
    return theta.reshape(n, p).T


def rank_one_ratio(M: np.ndarray) -> float:
    """Return sigma_2 / sigma_1 of ``M`` (0.0 for matrices with one row/column)."""
    s = np.linalg.svd(M, compute_uv=False)
    if s.size < 2 or s[0] == 0.0:
        return 0.0 if s.size and s[0] > 0.0 else np.inf
    return float(s[1] / s[0])


def decompose_kop(
    theta: np.ndarray, n: int, p: int, tol: float = RANK_ONE_TOLERANCE
) -> KopFactorization:
    """Recover the unique normalized factors (g, c) of a KOP vector.

    The reshape ``M = c g^T`` is checked for rank one (sigma2/sigma1 <= tol);
    the factors are then read off a single row and column of M.  For
    robustness near zeros we take the row of largest norm and, within it,
    the column of largest magnitude.  The returned ``g`` has unit norm with
    its first non-negligible entry positive; ``c`` absorbs the scale, so
    ``kron(g, c)`` reproduces ``theta`` exactly.

    Raises:
        NotKopVectorError: If the rank-one test fails.
        ValueError: If ``theta`` is (numerically) zero or malformed.
    """
    M = reshape_kop(theta, n, p)
    row_norms = np.linalg.norm(M, axis=1)
    if not np.any(row_norms > 0.0):
        raise ValueError("cannot decompose the zero vector")
    ratio = rank_one_ratio(M)
    if not ratio <= tol:
        raise NotKopVectorError(ratio, tol)

    i = int(np.argmax(row_norms))
    g_row = M[i, :]
    j = int(np.argmax(np.abs(g_row)))
    c_col = M[:, j]

    g_norm = row_norms[i]
    sign = _leading_sign(g_row)
    g = g_row / g_norm * sign
    c = c_col * (g_norm / g_row[j]) * sign
    return KopFactorization(g=g, c=c)


def _leading_sign(g: np.ndarray) -> float:
    """Sign of the first entry of ``g`` exceeding the magnitude tolerance."""
    thresh = SIGN_TOLERANCE * np.linalg.norm(g)
    idx = np.flatnonzero(np.abs(g) > thresh)
    if idx.size == 0:
        return 1.0
    return float(np.sign(g[idx[0]]))

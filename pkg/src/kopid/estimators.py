"""Identification algorithms for Hammerstein systems.

Two estimators of the overparameterized vector theta = kron(g, c):

* ``ls_op``: plain least squares followed by a rank-one SVD truncation of
  the reshaped estimate.  Consistent, but the truncation discards mass in
  the trailing singular values (the estimate is generically not an exact
  Kronecker product) and the unregularized solve has high variance when
  n*p is large relative to N.

* ``kop_estimate``: Gaussian-process regression with the rank-deficient KOP
  kernel as prior covariance.  Hyperparameters (decay beta, coefficients c,
  noise variance sigma2) are picked by maximizing the marginal likelihood
  of the output; the posterior mean is then an exact Kronecker product by
  construction, so the decomposition into (g, c) is lossless.

The marginal likelihood is evaluated in an equivalent n-dimensional form:
with W the convolution matrix of the nonlinearity output, the output
covariance collapses to W K W^T + sigma2 I, and factoring K = L L^T reduces
every solve to an n-by-n core (O(N n^2) per evaluation instead of O(N^3)).
The direct dense form is retained for the equivalence test suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, qr, solve_triangular

from . import optimizer
from .hammerstein import LegendreBasis, basis_matrix
from .kernels import kop_kernel, stable_spline_cholesky
from .tensor_ops import (
    KopFactorization,
    NotKopVectorError,
    _leading_sign,
    decompose_kop,
    rank_one_ratio,
    reshape_kop,
    toeplitz_mat,
    toeplitz_vec,
)

# Rank threshold for the pivoted-QR least-squares solve.
_QR_RANK_TOL = 1e-12

# Above this many matrix entries the LS solve falls back to normal equations.
_QR_ELEMENT_LIMIT = 50_000_000


class IllPosedError(ValueError):
    """Least-squares problem is rank deficient.

    Attributes:
        cond: Estimated condition number of the regressor matrix.
    """

    def __init__(self, message: str, cond: float):
        self.cond = cond
        super().__init__(f"{message} (condition estimate {cond:.3e})")


class DegenerateEstimateError(ValueError):
    """The estimate carries no rank-one direction (e.g. zero data)."""


@dataclass
class Hyperparameters:
    """KOP kernel hyperparameters and noise variance."""

    beta: float
    c: np.ndarray
    sigma2: float

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.sigma2 <= 0.0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        self.c = np.asarray(self.c, dtype=float)


@dataclass
class EstimateReport:
    """Result of one identification run.

    ``theta_hat`` is the estimator's overparameterized vector: the raw
    least-squares solution for ls_op (generally not a Kronecker product),
    the posterior mean for the KOP method (an exact Kronecker product).
    ``g_hat`` is in the normalized gauge; ``c_hat`` carries the scale.
    """

    method: str
    g_hat: np.ndarray
    c_hat: np.ndarray
    theta_hat: np.ndarray
    hyper: Hyperparameters | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = self.diagnostics
        return {
            "method": self.method,
            "g_hat": self.g_hat.tolist(),
            "c_hat": self.c_hat.tolist(),
            "beta": None if self.hyper is None else self.hyper.beta,
            "sigma2": None if self.hyper is None else self.hyper.sigma2,
            "nll": d.get("nll"),
            "iterations": d.get("iterations"),
            "rank_ratio": d.get("rank_ratio"),
            "timings": {"total_s": d.get("elapsed_s")},
        }


@dataclass
class MarginalLikelihoodFit:
    """Outcome of the empirical-Bayes hyperparameter search."""

    hyper: Hyperparameters
    nll: float
    iterations: int
    nfev: int
    converged: bool
    sigma2_init: float


def _chol_with_jitter(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with escalating diagonal jitter.

    Starts with no jitter and escalates from 1e-12 to 1e-6 times the mean
    diagonal before giving up.
    """
    n = A.shape[0]
    scale = np.trace(A) / n
    for level in [0.0] + [10.0**e for e in range(-12, -5)]:
        try:
            return np.linalg.cholesky(A + (level * scale) * np.eye(n) if level else A)
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("matrix is not positive definite even after jitter")


# ---------------------------------------------------------------------------
# Least-squares overparameterization (LS-OP)
# ---------------------------------------------------------------------------


def _solve_least_squares(y: np.ndarray, Phi: np.ndarray, solver: str) -> tuple[np.ndarray, float]:
    """Solve min ||y - Phi theta|| with rank checking; returns (theta, cond)."""
    if Phi.shape[0] < Phi.shape[1]:
        raise IllPosedError(
            f"underdetermined problem: {Phi.shape[0]} samples for {Phi.shape[1]} parameters",
            np.inf,
        )
    if solver == "auto":
        solver = "qr" if Phi.size <= _QR_ELEMENT_LIMIT else "normal"
    if solver == "qr":
        Q, R, piv = qr(Phi, mode="economic", pivoting=True)
        rdiag = np.abs(np.diag(R))
        if rdiag[0] == 0.0 or rdiag[-1] <= rdiag[0] * _QR_RANK_TOL:
            cond = np.inf if rdiag[-1] == 0.0 else rdiag[0] / rdiag[-1]
            raise IllPosedError("regressor matrix is rank deficient", cond)
        z = solve_triangular(R, Q.T @ y, lower=False)
        theta = np.empty_like(z)
        theta[piv] = z
        return theta, float(rdiag[0] / rdiag[-1])
    if solver == "normal":
        G = Phi.T @ Phi
        try:
            L = np.linalg.cholesky(G)
        except np.linalg.LinAlgError as err:
            raise IllPosedError(
                "normal equations are singular", float(np.linalg.cond(G))
            ) from err
        theta = cho_solve((L, True), Phi.T @ y)
        dl = np.diag(L)
        return theta, float((dl.max() / dl.min()) ** 2)
    raise ValueError(f"unknown solver {solver!r}")


def ls_op(
    y: np.ndarray, Phi: np.ndarray, n: int, p: int, solver: str = "auto"
) -> EstimateReport:
    """Least-squares overparameterization with rank-one truncation.

    Solves for theta, reshapes it to p-by-n and truncates to the closest
    rank-one matrix (Frobenius norm) via the SVD; the singular vectors give
    (g, c) in the normalized gauge.  ``diagnostics["rank_ratio"]`` records
    sigma2/sigma1 of the reshape, the mass the truncation discards.

    Args:
        y: Output vector of length N.
        Phi: Regressor matrix of shape (N, n*p).
        n: Impulse-response length.
        p: Basis-coefficient count.
        solver: "qr" (pivoted QR), "normal" (Cholesky on the normal
            equations), or "auto" to pick by problem size.

    Raises:
        IllPosedError: If Phi is rank deficient.
        DegenerateEstimateError: If the estimate is zero (no direction).
    """
    y = np.asarray(y, dtype=float)
    Phi = np.asarray(Phi, dtype=float)
    if Phi.shape != (y.size, n * p):
        raise ValueError(f"Phi must have shape {(y.size, n * p)}, got {Phi.shape}")
    t0 = time.perf_counter()
    theta, cond = _solve_least_squares(y, Phi, solver)

    M = reshape_kop(theta, n, p)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        raise DegenerateEstimateError(
            "least-squares estimate is zero; it has no rank-one direction"
        )
    sign = _leading_sign(Vt[0])
    g_hat = Vt[0] * sign
    c_hat = s[0] * U[:, 0] * sign
    return EstimateReport(
        method="lsop",
        g_hat=g_hat,
        c_hat=c_hat,
        theta_hat=theta,
        diagnostics={
            "rank_ratio": float(s[1] / s[0]) if s.size > 1 else 0.0,
            "cond": cond,
            "residual_var": float(np.var(y - Phi @ theta)),
            "elapsed_s": time.perf_counter() - t0,
        },
    )


# ---------------------------------------------------------------------------
# Marginal likelihood and posterior mean
# ---------------------------------------------------------------------------


def _gspace_factors(
    y: np.ndarray, W: np.ndarray, beta: float, sigma2: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Shared core for the collapsed-form computations.

    With U = W L (L the kernel Cholesky factor) and A = U^T U + sigma2 I,
    returns (L, U, alpha, cholA) where alpha solves A alpha = U^T y.  Both
    the marginal likelihood and the posterior means are cheap functions of
    these factors; notably K W^T Sigma_y^-1 y = L alpha with no division by
    sigma2, which keeps the small-noise regime stable.
    """
    n = W.shape[1]
    L = stable_spline_cholesky(beta, n)
    U = W @ L
    A = U.T @ U + sigma2 * np.eye(n)
    cholA = _chol_with_jitter(A)
    alpha = cho_solve((cholA, True), U.T @ y)
    return L, U, alpha, cholA


def _nll_collapsed(y: np.ndarray, W: np.ndarray, beta: float, sigma2: float) -> float:
    """log det Sigma_y + y^T Sigma_y^-1 y with Sigma_y = W K W^T + sigma2 I.

    Uses the determinant and matrix-inversion lemmas to reduce to the n-by-n
    core; the quadratic form is accumulated as ||resid||^2/sigma2 +
    ||alpha||^2, a sum of non-negative terms free of cancellation.
    """
    N, n = W.shape
    _, U, alpha, cholA = _gspace_factors(y, W, beta, sigma2)
    resid = y - U @ alpha
    quad = float(resid @ resid) / sigma2 + float(alpha @ alpha)
    logdet = (N - n) * np.log(sigma2) + 2.0 * float(np.sum(np.log(np.diag(cholA))))
    return logdet + quad


def _nll_dense(
    y: np.ndarray, F: np.ndarray, n: int, beta: float, c: np.ndarray, sigma2: float
) -> float:
    """Direct N-by-N evaluation through the overparameterized model."""
    Phi = toeplitz_mat(F, n)
    H = kop_kernel(beta, c, n)
    Sigma = Phi @ H @ Phi.T + sigma2 * np.eye(y.size)
    cholS = _chol_with_jitter(Sigma)
    z = solve_triangular(cholS, y, lower=True)
    return 2.0 * float(np.sum(np.log(np.diag(cholS)))) + float(z @ z)


def neg_log_marginal(
    y: np.ndarray,
    F: np.ndarray,
    n: int,
    hyper: Hyperparameters,
    form: str = "w",
) -> float:
    """Negative log marginal likelihood of the output (up to constants).

    Args:
        y: Output vector of length N.
        F: Basis evaluation matrix of shape (N, p).
        n: Impulse-response length.
        hyper: Kernel hyperparameters and noise variance.
        form: "w" for the collapsed O(N n^2) evaluation (default); "phi"
            for the direct dense evaluation, kept for the equivalence tests.
    """
    y = np.asarray(y, dtype=float)
    F = np.asarray(F, dtype=float)
    if form == "w":
        W = toeplitz_vec(F @ hyper.c, n)
        return _nll_collapsed(y, W, hyper.beta, hyper.sigma2)
    if form == "phi":
        return _nll_dense(y, F, n, hyper.beta, hyper.c, hyper.sigma2)
    raise ValueError(f"unknown form {form!r}")


def g_space_estimate(y: np.ndarray, W: np.ndarray, beta: float, sigma2: float) -> np.ndarray:
    """Posterior mean of the impulse response under the stable spline prior.

    Computes K W^T (W K W^T + sigma2 I)^-1 y through the collapsed factors;
    identical to the ridge form (sigma2 K^-1 + W^T W)^-1 W^T y but without
    ever forming K^-1.  The result is unnormalized (no gauge fixing).
    """
    y = np.asarray(y, dtype=float)
    W = np.asarray(W, dtype=float)
    if sigma2 <= 0.0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    L, _, alpha, _ = _gspace_factors(y, W, beta, sigma2)
    return L @ alpha


# ---------------------------------------------------------------------------
# Empirical-Bayes hyperparameter search
# ---------------------------------------------------------------------------

_BETA_MAX = 1.0 - 1e-12


def _unpack(x: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Map unconstrained search coordinates to (beta, sigma2, c)."""
    with np.errstate(over="ignore"):  # saturating is the intended behavior
        beta = min(float(1.0 / (1.0 + np.exp(-x[0]))), _BETA_MAX)
        sigma2 = float(np.exp(x[1]))
    return beta, sigma2, x[2:].copy()


def _pack(beta: float, sigma2: float, c: np.ndarray) -> np.ndarray:
    beta = min(max(beta, 1e-12), _BETA_MAX)
    return np.concatenate([[np.log(beta / (1.0 - beta)), np.log(sigma2)], c])


def _make_objective(y: np.ndarray, F: np.ndarray, n: int, p: int):
    """Transformed marginal-likelihood objective over (logit beta, log sigma2, c)."""

    def objective(x: np.ndarray) -> float:
        beta, sigma2, c = _unpack(x)
        if not np.isfinite(sigma2) or sigma2 <= 0.0:
            return np.inf
        try:
            W = toeplitz_vec(F @ c, n)
            return _nll_collapsed(y, W, beta, sigma2)
        except np.linalg.LinAlgError:
            return np.inf

    return objective


def fit_hyperparameters(
    y: np.ndarray,
    u: np.ndarray,
    basis: LegendreBasis,
    n: int,
    seed: int | np.random.Generator | None = None,
    restarts: int = 1,
    init: Hyperparameters | None = None,
    max_iter: int | None = None,
    x_tol: float = 1e-4,
    f_tol: float = 1e-4,
) -> MarginalLikelihoodFit:
    """Pick (beta, c, sigma2) by minimizing the negative log marginal likelihood.

    The simplex search runs in transformed coordinates (logistic for beta,
    log for sigma2, c unconstrained).  Default initialization: beta = 0.5,
    c uniform on [0, 1], sigma2 from the sample variance of the
    least-squares residuals (falling back to the output variance when the
    least-squares problem is rank deficient).  ``init`` overrides the whole
    starting point; ``restarts`` redraws c and keeps the best optimum.

    Non-convergence is not an error: the best point found is returned with
    ``converged=False``.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    if y.size == 0 or y.size != u.size:
        raise ValueError("y and u must be nonempty and of equal length")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    F = basis_matrix(u, basis)
    p = basis.p
    objective = _make_objective(y, F, n, p)

    if init is not None:
        sigma2_init = init.sigma2
        starts = [_pack(init.beta, init.sigma2, init.c)]
    else:
        sigma2_init = _initial_noise_variance(y, F, n, p)
        starts = [
            _pack(0.5, sigma2_init, rng.uniform(0.0, 1.0, size=p))
            for _ in range(restarts)
        ]

    best: optimizer.NelderMeadResult | None = None
    total_iters = 0
    total_nfev = 0
    for x0 in starts:
        result = optimizer.minimize(
            objective, x0, max_iter=max_iter, x_tol=x_tol, f_tol=f_tol
        )
        total_iters += result.iterations
        total_nfev += result.nfev
        if best is None or result.fun < best.fun:
            best = result

    beta, sigma2, c = _unpack(best.x)
    return MarginalLikelihoodFit(
        hyper=Hyperparameters(beta=beta, c=c, sigma2=sigma2),
        nll=best.fun,
        iterations=total_iters,
        nfev=total_nfev,
        converged=best.converged,
        sigma2_init=sigma2_init,
    )


def _initial_noise_variance(y: np.ndarray, F: np.ndarray, n: int, p: int) -> float:
    """Sample variance of the least-squares residuals (output variance fallback)."""
    Phi = toeplitz_mat(F, n)
    try:
        theta, _ = _solve_least_squares(y, Phi, "auto")
        var = float(np.var(y - Phi @ theta))
    except IllPosedError:
        var = float(np.var(y))
    if not np.isfinite(var) or var <= 0.0:
        var = max(float(np.var(y)), 1.0)
    return max(var, 1e-30)


# ---------------------------------------------------------------------------
# KOP kernel-based estimation
# ---------------------------------------------------------------------------


def kop_estimate(
    y: np.ndarray,
    u: np.ndarray,
    basis: LegendreBasis,
    n: int,
    seed: int | np.random.Generator | None = None,
    restarts: int = 1,
    max_iter: int | None = None,
) -> EstimateReport:
    """Kernel-based estimate of the Hammerstein system.

    Fits hyperparameters by marginal likelihood, forms the posterior mean of
    the overparameterized vector through its factored expression (the
    g-space posterior mean Kronecker the fitted coefficients), and splits it
    into the normalized (g, c) pair.  The posterior mean is an exact
    Kronecker product, so the split is lossless; a rank-one failure here
    would indicate an internal bug and raises RuntimeError.
    """
    t0 = time.perf_counter()
    fit = fit_hyperparameters(
        y, u, basis, n, seed=seed, restarts=restarts, max_iter=max_iter
    )
    hyper = fit.hyper
    F = basis_matrix(np.asarray(u, dtype=float), basis)
    W = toeplitz_vec(F @ hyper.c, n)
    g_raw = g_space_estimate(y, W, hyper.beta, hyper.sigma2)
    theta = np.kron(g_raw, hyper.c)
    try:
        fac: KopFactorization = decompose_kop(theta, n, basis.p)
    except NotKopVectorError as err:  # pragma: no cover - impossible by construction
        raise RuntimeError(
            "internal consistency failure: posterior mean is not a Kronecker product"
        ) from err
    return EstimateReport(
        method="kop",
        g_hat=fac.g,
        c_hat=fac.c,
        theta_hat=theta,
        hyper=hyper,
        diagnostics={
            "nll": fit.nll,
            "iterations": fit.iterations,
            "nfev": fit.nfev,
            "converged": fit.converged,
            "rank_ratio": rank_one_ratio(reshape_kop(theta, n, basis.p)),
            "sigma2_init": fit.sigma2_init,
            "elapsed_s": time.perf_counter() - t0,
        },
    )

"""Derivative-free Nelder-Mead simplex minimizer.

Classic simplex method with reflection 1, expansion 2, contraction 0.5 and
shrink 0.5, the coefficients used by the common fminsearch-style solvers.
The initial simplex perturbs each coordinate of the start point by 5% (or by
0.00025 where the coordinate is zero).  Termination requires both the
simplex diameter (max-norm spread of the vertices around the best one) and
the objective spread to fall under their tolerances, or the iteration cap.

The implementation is fully deterministic: identical objective, start point
and options reproduce the identical iterate sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_REFLECT = 1.0
_EXPAND = 2.0
_CONTRACT = 0.5
_SHRINK = 0.5

_NONZERO_STEP = 0.05
_ZERO_STEP = 0.00025


@dataclass
class NelderMeadResult:
    """Outcome of a simplex minimization run.

    Attributes:
        x: Best point found.
        fun: Objective value at ``x``.
        iterations: Number of simplex iterations performed.
        nfev: Number of objective evaluations.
        converged: True if both tolerance criteria were met before the cap.
        f_trace: Best objective value after each iteration (non-increasing).
    """

    x: np.ndarray
    fun: float
    iterations: int
    nfev: int
    converged: bool
    f_trace: np.ndarray


def initial_simplex(x0: np.ndarray) -> np.ndarray:
    """Default (d+1)-vertex start simplex around ``x0``, one row per vertex."""
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    sim = np.tile(x0, (d + 1, 1))
    for i in range(d):
        if x0[i] != 0.0:
            sim[i + 1, i] = x0[i] * (1.0 + _NONZERO_STEP)
        else:
            sim[i + 1, i] = _ZERO_STEP
    return sim


def minimize(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    max_iter: int | None = None,
    x_tol: float = 1e-4,
    f_tol: float = 1e-4,
    simplex: np.ndarray | None = None,
) -> NelderMeadResult:
    """Minimize ``f`` from ``x0`` with the Nelder-Mead simplex method.

    Non-finite objective values are treated as +inf so the simplex simply
    retreats from them; a non-finite value at the start point itself is an
    error.  ``simplex`` overrides the default initial simplex (shape
    (d+1, d), first row taken as the reference vertex).

    Raises:
        ValueError: If ``f(x0)`` is not finite or the simplex is malformed.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    if d == 0:
        raise ValueError("x0 must have at least one coordinate")
    if max_iter is None:
        max_iter = 200 * d

    nfev = 0

    def fval(x: np.ndarray) -> float:
        nonlocal nfev
        nfev += 1
        v = f(x)
        return float(v) if np.isfinite(v) else np.inf

    if simplex is None:
        sim = initial_simplex(x0)
    else:
        sim = np.array(simplex, dtype=float)
        if sim.shape != (d + 1, d):
            raise ValueError(f"simplex must have shape {(d + 1, d)}, got {sim.shape}")
    f0 = fval(sim[0])
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the start point")
    fsim = np.array([f0] + [fval(sim[k]) for k in range(1, d + 1)])

    order = np.argsort(fsim, kind="stable")
    sim, fsim = sim[order], fsim[order]

    iterations = 0
    converged = False
    trace = []
    while iterations < max_iter:
        diameter = np.max(np.abs(sim[1:] - sim[0])) if d > 0 else 0.0
        spread = np.max(np.abs(fsim[1:] - fsim[0]))
        if diameter < x_tol and spread < f_tol:
            converged = True
            break
        iterations += 1

        centroid = np.mean(sim[:-1], axis=0)
        xr = centroid + _REFLECT * (centroid - sim[-1])
        fr = fval(xr)

        if fr < fsim[0]:
            xe = centroid + _EXPAND * (centroid - sim[-1])
            fe = fval(xe)
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        else:
            if fr < fsim[-1]:  # outside contraction
                xc = centroid + _CONTRACT * (centroid - sim[-1])
                fc = fval(xc)
                if fc <= fr:
                    sim[-1], fsim[-1] = xc, fc
                else:
                    _shrink(sim, fsim, fval)
            else:  # inside contraction
                xc = centroid - _CONTRACT * (centroid - sim[-1])
                fc = fval(xc)
                if fc < fsim[-1]:
                    sim[-1], fsim[-1] = xc, fc
                else:
                    _shrink(sim, fsim, fval)

        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        trace.append(fsim[0])

    return NelderMeadResult(
        x=sim[0].copy(),
        fun=float(fsim[0]),
        iterations=iterations,
        nfev=nfev,
        converged=converged,
        f_trace=np.asarray(trace),
    )


def _shrink(sim: np.ndarray, fsim: np.ndarray, fval) -> None:
    for k in range(1, sim.shape[0]):
        sim[k] = sim[0] + _SHRINK * (sim[k] - sim[0])
        fsim[k] = fval(sim[k])

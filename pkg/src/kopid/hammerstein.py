"""Hammerstein system representation, simulation, and random sampling.

A Hammerstein system is a static nonlinearity followed by a strictly causal
stable LTI block.  The nonlinearity is a linear combination of Legendre
polynomials with unknown coefficients ``c``; the linear block is summarized
by the first ``n`` samples of its impulse response ``g``, fixed to the
normalized gauge (unit 2-norm, positive leading sign) to remove the scaling
ambiguity between the two blocks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .tensor_ops import _leading_sign, toeplitz_vec

MAX_LEGENDRE_DEGREE = 10


def _legendre_coefficients(i: int) -> np.ndarray:
    """Coefficients of P_i in ascending powers, exact in float.

    Derived from the Rodrigues form P_i(u) = (2^i i!)^-1 d^i/du^i (u^2-1)^i
    with integer arithmetic; the denominators are powers of two, so the
    float conversion is exact for i <= 10.
    """
    coeffs = [0] * (i + 1)
    for k in range((i + 1) // 2, i + 1):
        # d^i/du^i u^(2k) = (2k)!/(2k-i)! u^(2k-i)
        num = math.comb(i, k) * (-1) ** (i - k) * math.factorial(2 * k)
        coeffs[2 * k - i] = num // math.factorial(2 * k - i)
    denom = 2**i * math.factorial(i)
    return np.array([_ratio_to_float(cn, denom) for cn in coeffs])


def _ratio_to_float(num: int, denom: int) -> float:
    g = math.gcd(num, denom) if num else denom
    return (num // g) / (denom // g)


_LEGENDRE_TABLE = [_legendre_coefficients(i) for i in range(MAX_LEGENDRE_DEGREE + 1)]


def legendre_eval(i: int, u) -> np.ndarray | float:
    """Evaluate the Legendre polynomial P_i at u (scalar or array).

    Degrees 0..10 are supported from the precomputed coefficient table.
    """
    if not 0 <= i <= MAX_LEGENDRE_DEGREE:
        raise ValueError(f"degree must be in [0, {MAX_LEGENDRE_DEGREE}], got {i}")
    coeffs = _LEGENDRE_TABLE[i]
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for ck in coeffs[::-1]:  # Horner, ascending table evaluated high-to-low
        out = out * u + ck
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LegendreBasis:
    """Polynomial basis P_0 .. P_{p-1} for the static nonlinearity."""

    p: int

    def __post_init__(self):
        if not 1 <= self.p <= MAX_LEGENDRE_DEGREE + 1:
            raise ValueError(f"p must be in [1, {MAX_LEGENDRE_DEGREE + 1}], got {self.p}")

    def __call__(self, u, c: np.ndarray) -> np.ndarray:
        """Evaluate f(u) = sum_i c[i] P_i(u)."""
        c = np.asarray(c, dtype=float)
        if c.size != self.p:
            raise ValueError(f"expected {self.p} coefficients, got {c.size}")
        return basis_matrix(np.atleast_1d(np.asarray(u, dtype=float)), self) @ c


def basis_matrix(u: np.ndarray, basis: LegendreBasis) -> np.ndarray:
    """Stack basis evaluations: F[t, i] = P_i(u[t]), shape (N, p)."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("u must be a nonempty 1-D vector")
    return np.column_stack([legendre_eval(i, u) for i in range(basis.p)])


@dataclass(frozen=True)
class HammersteinSystem:
    """Ground-truth system: impulse response g and nonlinearity coefficients c.

    ``g`` is stored in the normalized gauge.  ``poles``/``zeros`` and
    ``tail_energy`` (fraction of impulse-response energy beyond lag n,
    measured on a long simulation) are diagnostics filled in by
    :func:`random_system`; they are None for hand-built systems.
    """

    g: np.ndarray
    c: np.ndarray
    poles: np.ndarray | None = None
    zeros: np.ndarray | None = None
    tail_energy: float | None = None

    @property
    def n(self) -> int:
        return self.g.size

    @property
    def p(self) -> int:
        return self.c.size

    def nonlinearity(self, u) -> np.ndarray:
        return LegendreBasis(self.p)(u, self.c)


@dataclass(frozen=True)
class DatasetRecord:
    """One simulated experiment: inputs u_0..u_{N-1}, outputs y_1..y_N."""

    u: np.ndarray
    y: np.ndarray
    sigma2: float
    snr: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.u.size


def noiseless_output(system: HammersteinSystem, u: np.ndarray) -> np.ndarray:
    """Noise-free response: convolution of f(u) with g, null initial conditions."""
    basis = LegendreBasis(system.p)
    w = basis_matrix(u, basis) @ system.c
    return toeplitz_vec(w, system.n) @ system.g


def simulate(
    system: HammersteinSystem,
    u: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    snr: float | None = None,
) -> DatasetRecord:
    """Simulate y = conv(g, f(u)) + e with e ~ N(0, sigma^2 I).

    Output index t pairs with inputs up to u_{t-1} (one-sample delay); the
    same seeded generator reproduces y bit-for-bit.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    u = np.asarray(u, dtype=float)
    y0 = noiseless_output(system, u)
    y = y0 + sigma * rng.standard_normal(u.size) if sigma > 0 else y0.copy()
    return DatasetRecord(u=u, y=y, sigma2=sigma**2, snr=snr)


def snr_to_sigma2(system: HammersteinSystem, u: np.ndarray, snr: float) -> float:
    """Noise variance giving the requested signal-to-noise ratio.

    Defined as Var(noiseless output) / snr with the empirical (population)
    variance.
    """
    if snr <= 0:
        raise ValueError(f"snr must be > 0, got {snr}")
    var = float(np.var(noiseless_output(system, np.asarray(u, dtype=float))))
    if var == 0.0:
        raise ValueError("noiseless output has zero variance; SNR is undefined")
    return var / snr


_RESAMPLE_LIMIT = 10


def random_system(
    rng: np.random.Generator,
    n: int,
    p: int,
    tail_horizon: int = 10,
) -> HammersteinSystem:
    """Draw a random Hammerstein system.

    The linear block is an output-error transfer function with 2 conjugate
    pole pairs and 2 conjugate zero pairs, radii uniform in [0.5, 0.95] and
    angles uniform in [0, pi]; a one-sample delay on the (monic-normalized)
    numerator enforces strict causality.  The impulse response is computed
    by recursive filtering over ``tail_horizon * n`` samples, truncated to
    ``n`` taps and normalized to the unit-norm positive-leading-sign gauge.
    Nonlinearity coefficients are uniform in [-1, 1].
    """
    if n < 1 or p < 1:
        raise ValueError("n and p must be >= 1")
    for _ in range(_RESAMPLE_LIMIT):
        radii = rng.uniform(0.5, 0.95, size=4)
        angles = rng.uniform(0.0, np.pi, size=4)
        poles = radii[:2] * np.exp(1j * angles[:2])
        zeros = radii[2:] * np.exp(1j * angles[2:])
        a = _conjugate_pair_poly(poles)
        b = np.concatenate([[0.0], _conjugate_pair_poly(zeros)])  # one-step delay

        impulse = np.zeros(max(tail_horizon * n, n + 1))
        impulse[0] = 1.0
        response = lfilter(b, a, impulse)
        g_raw = response[1 : n + 1]  # taps at lags 1..n
        norm = np.linalg.norm(g_raw)
        if norm < 1e-12:
            continue
        c = rng.uniform(-1.0, 1.0, size=p)
        g = g_raw / norm * _leading_sign(g_raw)
        total = float(np.sum(response[1:] ** 2))
        tail = float(np.sum(response[n + 1 :] ** 2)) / total
        return HammersteinSystem(
            g=g,
            c=c,
            poles=np.concatenate([poles, poles.conj()]),
            zeros=np.concatenate([zeros, zeros.conj()]),
            tail_energy=tail,
        )
    raise RuntimeError("failed to draw a non-degenerate linear block")


def _conjugate_pair_poly(roots: np.ndarray) -> np.ndarray:
    """Monic real polynomial with the given roots and their conjugates."""
    poly = np.array([1.0])
    for r in roots:
        quad = np.array([1.0, -2.0 * r.real, abs(r) ** 2])
        poly = np.convolve(poly, quad)
    return poly


def save_dataset(record: DatasetRecord, path: str | Path, meta: dict | None = None) -> None:
    """Write the dataset as CSV (header t,u,y) plus a JSON metadata sidecar.

    Row t holds the input sample u_{t-1} and the output sample y_t, so the
    input column leads the output column by one step.
    """
    path = Path(path)
    lines = ["t,u,y"]
    for t in range(record.N):
        lines.append(f"{t + 1},{float(record.u[t])!r},{float(record.y[t])!r}")
    path.write_text("\n".join(lines) + "\n")

    sidecar = dict(record.meta)
    if meta:
        sidecar.update(meta)
    sidecar.setdefault("sigma2", record.sigma2)
    if record.snr is not None:
        sidecar.setdefault("snr", record.snr)
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    )


def load_dataset(path: str | Path) -> DatasetRecord:
    """Read a dataset written by :func:`save_dataset`."""
    path = Path(path)
    rows = [line for line in path.read_text().splitlines() if line and not line.startswith("#")]
    if not rows or rows[0] != "t,u,y":
        raise ValueError(f"{path} does not look like a t,u,y dataset")
    data = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return DatasetRecord(
        u=data[:, 1],
        y=data[:, 2],
        sigma2=float(meta.get("sigma2", float("nan"))),
        snr=meta.get("snr"),
        meta=meta,
    )

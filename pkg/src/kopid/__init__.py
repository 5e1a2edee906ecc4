"""Hammerstein system identification with Kronecker-overparameterized kernels.

The toolkit covers the full loop: simulating Hammerstein systems (Legendre
polynomial nonlinearity into a stable linear block), identifying them with
either the classical least-squares overparameterization estimator or the
regularized KOP kernel estimator, and benchmarking both over seeded Monte
Carlo studies.
"""

from .benchmark import ExperimentConfig, RunResult, fit_f, fit_g, run_benchmark
from .estimators import (
    DegenerateEstimateError,
    EstimateReport,
    Hyperparameters,
    IllPosedError,
    MarginalLikelihoodFit,
    fit_hyperparameters,
    g_space_estimate,
    kop_estimate,
    ls_op,
    neg_log_marginal,
)
from .hammerstein import (
    DatasetRecord,
    HammersteinSystem,
    LegendreBasis,
    basis_matrix,
    legendre_eval,
    load_dataset,
    noiseless_output,
    random_system,
    save_dataset,
    simulate,
    snr_to_sigma2,
)
from .kernels import kop_kernel, stable_spline, stable_spline_cholesky
from .optimizer import NelderMeadResult, minimize
from .tensor_ops import (
    KopFactorization,
    NotKopVectorError,
    decompose_kop,
    kron_vec,
    rank_one_ratio,
    reshape_kop,
    toeplitz_mat,
    toeplitz_vec,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetRecord",
    "DegenerateEstimateError",
    "EstimateReport",
    "ExperimentConfig",
    "HammersteinSystem",
    "Hyperparameters",
    "IllPosedError",
    "KopFactorization",
    "LegendreBasis",
    "MarginalLikelihoodFit",
    "NelderMeadResult",
    "NotKopVectorError",
    "RunResult",
    "basis_matrix",
    "decompose_kop",
    "fit_f",
    "fit_g",
    "fit_hyperparameters",
    "g_space_estimate",
    "kop_estimate",
    "kop_kernel",
    "kron_vec",
    "legendre_eval",
    "load_dataset",
    "ls_op",
    "minimize",
    "neg_log_marginal",
    "noiseless_output",
    "random_system",
    "rank_one_ratio",
    "reshape_kop",
    "run_benchmark",
    "save_dataset",
    "simulate",
    "snr_to_sigma2",
    "stable_spline",
    "stable_spline_cholesky",
    "toeplitz_mat",
    "toeplitz_vec",
]

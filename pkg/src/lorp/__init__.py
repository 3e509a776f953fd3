"""Loss-rank model selection for linear regressors.

A regressor is judged by how unlikely its fit is: count (or measure)
the fictitious datasets it would have fit at least as well as the one
observed, take the log, and prefer the candidate with the smallest
such loss rank.  The log-volume has a closed form for any linear
regressor given by a hat matrix, so selection reduces to eigenvalues
plus a one-dimensional regularizer search.
"""

from .baselines import (
    aic_bic,
    bms_fit,
    bms_neg_log_evidence,
    bms_optimal_alpha,
    d_eff_mackay,
    d_eff_trace,
    logdet_penalty_series,
)
from .core import (
    LossRankResult,
    PenaltyKind,
    SelectionOutcome,
    SpectralCache,
    ellipsoid_volume,
    log_unit_ball_volume,
    loss_rank,
    loss_rank_at_alpha,
    optimize_alpha,
    select_model,
    spectral_cache,
)
from .data import Dataset, gen_synthetic, load_csv, write_csv
from .exceptions import LorpError
from .oracle import (
    BoxDomain,
    LossFunction,
    exact_rank,
    grid_rank,
    hat_matrix_loss,
    mc_volume,
    mc_volume_ratio,
    quadratic_form_loss,
)
from .projective import kl_bernoulli, projective_loss_rank, select_projective
from .regressors import (
    HatMatrix,
    RegressorSpec,
    gaussian_kernel_matrix,
    knn_matrix,
    knn_prime_matrix,
    lbfr_matrix,
    polynomial_design,
    polynomial_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "aic_bic",
    "bms_fit",
    "bms_neg_log_evidence",
    "bms_optimal_alpha",
    "d_eff_mackay",
    "d_eff_trace",
    "logdet_penalty_series",
    "LossRankResult",
    "PenaltyKind",
    "SelectionOutcome",
    "SpectralCache",
    "ellipsoid_volume",
    "log_unit_ball_volume",
    "loss_rank",
    "loss_rank_at_alpha",
    "optimize_alpha",
    "select_model",
    "spectral_cache",
    "Dataset",
    "gen_synthetic",
    "load_csv",
    "write_csv",
    "LorpError",
    "BoxDomain",
    "LossFunction",
    "exact_rank",
    "grid_rank",
    "hat_matrix_loss",
    "mc_volume",
    "mc_volume_ratio",
    "quadratic_form_loss",
    "kl_bernoulli",
    "projective_loss_rank",
    "select_projective",
    "HatMatrix",
    "RegressorSpec",
    "gaussian_kernel_matrix",
    "knn_matrix",
    "knn_prime_matrix",
    "lbfr_matrix",
    "polynomial_design",
    "polynomial_matrix",
]

"""Reference criteria to set the loss-rank scores against.

AIC/BIC with the ML variance plugged in, the Gaussian-prior Bayesian
evidence for basis regressions, and two effective-dimension readings
(trace of the hat matrix; the evidence-framework d - alpha tr A^-1).
None of these is needed to run selection; they exist so reports can show
where the criteria agree and where the classical ones break down.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import (
    DEFAULT_GRID_POINTS,
    DEFAULT_REL_TOL,
    AlphaOptimum,
    minimize_log_grid,
)
from .exceptions import (
    DegenerateDataError,
    DivergentSeriesError,
    InvalidInputError,
    NumericalFailureError,
    PerfectFitError,
)
from .regressors import FeatureMatrix, HatMatrix, as_hat_array


def aic_bic(rss: float, d: float, n: int) -> tuple[float, float]:
    """Akaike and Bayesian criteria with the ML noise variance rss/n.

    Up to shared constants: aic = (n/2) log(rss/n) + d and
    bic = (n/2) log(rss/n) + (d/2) log n.  d may be fractional (an
    effective dimension).  rss <= 0 means both are unbounded below.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if d < 0:
        raise InvalidInputError(f"d must be >= 0, got {d}")
    if not np.isfinite(rss) or rss <= 0:
        raise PerfectFitError(f"rss = {rss}: criteria are -infinity")
    nll = 0.5 * n * math.log(rss / n)
    return nll + d, nll + 0.5 * d * math.log(n)


class PriorKind(str, enum.Enum):
    """Weight-prior covariance shape in the Gaussian evidence."""

    IDENTITY = "identity"  # C = I_d
    GRAM = "gram"  # C = B = Phi' Phi

    def matrix(self, gram: np.ndarray) -> np.ndarray:
        if self is PriorKind.IDENTITY:
            return np.eye(gram.shape[0])
        return gram


AUTO = "auto"


@dataclass(frozen=True)
class BMSResult:
    """Negative log evidence of a basis regression, with fit details."""

    value: float
    alpha: float
    beta: float
    beta_one_shot: float | None
    iterations: int
    y_s_y: float
    logdet_s: float
    weights: np.ndarray


def _evidence_terms(
    phi: np.ndarray, y: np.ndarray, alpha: float, beta: float, prior: PriorKind
) -> tuple[float, float, np.ndarray]:
    """(y'Sy, log det S, posterior mean weights) for S = I - beta Phi A^-1 Phi'."""
    n, d = phi.shape
    y_sq = float(y @ y)
    if d == 0:
        return y_sq, 0.0, np.empty(0)
    gram = phi.T @ phi
    a = alpha * prior.matrix(gram) + beta * gram
    a = 0.5 * (a + a.T)
    try:
        cho = scipy.linalg.cho_factor(a)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"singular A = alpha C + beta B: {exc}") from exc
    phi_t_y = phi.T @ y
    solved = scipy.linalg.cho_solve(cho, phi_t_y)
    weights = beta * solved
    y_s_y = y_sq - beta * float(phi_t_y @ solved)
    # determinant lemma: det(I - beta Phi A^-1 Phi') = det(A - beta B)/det A
    # and A - beta B = alpha C exactly
    logdet_a = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
    if prior is PriorKind.IDENTITY:
        logdet_c = 0.0
    else:
        sign, logdet_c = np.linalg.slogdet(gram)
        if sign <= 0:
            raise NumericalFailureError("gram prior with singular B")
    logdet_s = d * math.log(alpha) + logdet_c - logdet_a
    return y_s_y, logdet_s, weights


def bms_fit(
    phi: FeatureMatrix | np.ndarray,
    y,
    alpha: float,
    beta: float | str = AUTO,
    prior: PriorKind | str = PriorKind.IDENTITY,
    max_iter: int = 100,
    rel_tol: float = 1e-10,
) -> BMSResult:
    """Negative log evidence -log P(y) of the Gaussian basis regression.

    With a fixed noise precision beta this is
    (beta/2) y'Sy - (1/2) log det S - (n/2) log(beta/2pi).  beta="auto"
    instead iterates the self-consistency beta = n/(y'Sy) (S depends on
    beta) to relative rel_tol, at most max_iter rounds, and evaluates
    the profiled form (n/2) log(y'Sy) - (1/2) log det S
    - (n/2) log(n/(2 pi e)); the first update is kept as beta_one_shot.
    The plain update slows to a crawl when the fit is tight (contraction
    factor near 1), so each round applies a Steffensen extrapolation on
    top of it.
    """
    arr = phi.phi if isinstance(phi, FeatureMatrix) else np.asarray(phi, dtype=float)
    if arr.ndim != 2:
        raise InvalidInputError(f"design matrix must be 2-d, got shape {arr.shape}")
    yv = np.asarray(y, dtype=float).ravel()
    n = yv.size
    if arr.shape[0] != n:
        raise InvalidInputError(f"design has {arr.shape[0]} rows, y has {n}")
    if not (np.all(np.isfinite(arr)) and np.all(np.isfinite(yv))):
        raise InvalidInputError("non-finite design or response")
    if not (np.isfinite(alpha) and alpha > 0):
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    prior = PriorKind(prior)

    if beta != AUTO:
        beta_f = float(beta)
        if not (np.isfinite(beta_f) and beta_f > 0):
            raise InvalidInputError(f"beta must be positive or 'auto', got {beta}")
        y_s_y, logdet_s, w = _evidence_terms(arr, yv, alpha, beta_f, prior)
        value = 0.5 * beta_f * y_s_y - 0.5 * logdet_s - 0.5 * n * math.log(beta_f / (2.0 * math.pi))
        return BMSResult(value, alpha, beta_f, None, 0, y_s_y, logdet_s, w)

    y_sq = float(yv @ yv)
    if y_sq <= 0:
        raise DegenerateDataError("y = 0: evidence noise scale undefined")

    def plain_update(beta_cur: float) -> float:
        y_s_y_cur, _, _ = _evidence_terms(arr, yv, alpha, beta_cur, prior)
        if y_s_y_cur <= 0:
            raise PerfectFitError("y'Sy reached 0: beta diverges (perfect fit)")
        return n / y_s_y_cur

    beta_t = n / y_sq
    beta_one = None
    for it in range(1, max_iter + 1):
        b1 = plain_update(beta_t)
        if beta_one is None:
            beta_one = b1
        if abs(b1 - beta_t) <= rel_tol * abs(b1):
            y_s_y, logdet_s, w = _evidence_terms(arr, yv, alpha, b1, prior)
            if y_s_y <= 0:
                raise PerfectFitError("y'Sy reached 0: beta diverges (perfect fit)")
            value = 0.5 * n * math.log(y_s_y) - 0.5 * logdet_s - 0.5 * n * math.log(n / (2.0 * math.pi * math.e))
            return BMSResult(value, alpha, b1, beta_one, it, y_s_y, logdet_s, w)
        b2 = plain_update(b1)
        denom = b2 - 2.0 * b1 + beta_t
        beta_t = beta_t - (b1 - beta_t) ** 2 / denom if denom != 0.0 else b2
        if not (np.isfinite(beta_t) and beta_t > 0):
            beta_t = b2
    raise NumericalFailureError(f"beta fixed point did not converge in {max_iter} iterations")


def bms_neg_log_evidence(
    phi: FeatureMatrix | np.ndarray,
    y,
    alpha: float,
    beta: float | str = AUTO,
    prior: PriorKind | str = PriorKind.IDENTITY,
) -> float:
    """Scalar -log P(y); see bms_fit for the two beta modes."""
    return bms_fit(phi, y, alpha, beta=beta, prior=prior).value


def bms_optimal_alpha(
    phi: FeatureMatrix | np.ndarray,
    y,
    beta: float | str = AUTO,
    prior: PriorKind | str = PriorKind.IDENTITY,
    alpha_lo: float = 1e-8,
    alpha_hi: float = 1e6,
    rel_tol: float = DEFAULT_REL_TOL,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> AlphaOptimum:
    """Minimise the negative log evidence over the prior scale alpha."""
    return minimize_log_grid(
        lambda a: bms_neg_log_evidence(phi, y, a, beta=beta, prior=prior),
        alpha_lo,
        alpha_hi,
        rel_tol=rel_tol,
        grid_points=grid_points,
    )


def d_eff_trace(m: HatMatrix | np.ndarray) -> float:
    """Trace of the hat matrix as an effective parameter count."""
    return float(np.trace(as_hat_array(m)))


def d_eff_mackay(alpha: float, a_matrix: np.ndarray, d: int) -> float:
    """Evidence-framework effective dimension d - alpha * tr A^-1.

    A = alpha I + beta B from the identity-prior evidence.  Equals
    tr(beta Phi A^-1 Phi') for every alpha, and the weight-based reading
    alpha |w|^2 exactly at the evidence-stationary alpha.
    """
    if not (np.isfinite(alpha) and alpha >= 0):
        raise InvalidInputError(f"alpha must be finite and >= 0, got {alpha}")
    a = np.asarray(a_matrix, dtype=float)
    if a.shape != (d, d):
        raise InvalidInputError(f"A must be {d} x {d}, got {a.shape}")
    if d == 0:
        return 0.0
    a = 0.5 * (a + a.T)
    try:
        cho = scipy.linalg.cho_factor(a)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"singular A: {exc}") from exc
    trace_inv = float(np.trace(scipy.linalg.cho_solve(cho, np.eye(d))))
    return d - alpha * trace_inv


def logdet_penalty_series(m: HatMatrix | np.ndarray, order: int) -> float:
    """Partial sum of -1/2 log det S_0 = sum_s tr(M^s)/s.

    Valid (convergent) only when the spectral radius of M is below 1;
    otherwise raises.  order is the number of leading terms kept.
    """
    marr = as_hat_array(m)
    if order < 1:
        raise InvalidInputError(f"order must be >= 1, got {order}")
    radius = float(np.max(np.abs(np.linalg.eigvals(marr))))
    if radius >= 1.0:
        raise DivergentSeriesError(f"spectral radius {radius:.6g} >= 1: series diverges")
    total = 0.0
    power = np.eye(marr.shape[0])
    for s in range(1, order + 1):
        power = power @ marr
        total += float(np.trace(power)) / s
    return total

"""Closed-form loss ranks for projection regressors.

When the hat matrix is an orthogonal projection P (basis-function least
squares), S_a = (I-P) + alpha-penalty has the explicit spectrum
{alpha (d times), 1+alpha (n-d times)}, and minimising LR over alpha can
be done in closed form:

    rho       = 1 - y'Py / y'y          (relative residual)
    alpha*    = rho d / ((1-rho) n - d)
    LR(alpha*) = (n/2) log y'y - (n/2) KL(d/n || 1-rho)

valid when 1 - rho > d/n, i.e. the fit explains more than a random
d-dimensional direction would.  Selection then maximises the Bernoulli
divergence KL(d/n || 1-rho), which is minimising LR with the shared
(n/2) log y'y term dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import loss_rank
from .exceptions import (
    DegenerateDataError,
    InfiniteDivergenceError,
    InvalidInputError,
    LorpError,
    NotAProjectionError,
    OutsideValidityError,
    PerfectFitError,
    SelectionError,
)
from .regressors import HatMatrix, as_hat_array

DEFAULT_RHO_FLOOR = 1e-12
DEFAULT_IDEMPOTENCE_TOL = 1e-8


def kl_bernoulli(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), nats.

    0 log 0 = 0 by convention; q on the boundary is only allowed when p
    sits on the same boundary (otherwise the divergence is infinite).
    """
    if not (0.0 <= p <= 1.0):
        raise InvalidInputError(f"p must be in [0, 1], got {p}")
    if not (0.0 <= q <= 1.0):
        raise InvalidInputError(f"q must be in [0, 1], got {q}")
    if q == 0.0 and p > 0.0:
        raise InfiniteDivergenceError("KL(p || 0) is infinite for p > 0")
    if q == 1.0 and p < 1.0:
        raise InfiniteDivergenceError("KL(p || 1) is infinite for p < 1")
    total = 0.0
    if p > 0.0:
        total += p * math.log(p / q)
    if p < 1.0:
        total += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return total


@dataclass(frozen=True)
class ProjectiveResult:
    """Closed-form score of one projection candidate.

    ``lr_check`` re-evaluates LR(alpha) from its explicit alpha-form at
    alpha_min; it must agree with ``lr`` to round-off and is kept as a
    self-check.
    """

    d: float
    rho: float
    alpha_min: float
    kl: float
    lr: float
    lr_check: float


def projective_loss_rank(
    p_matrix: HatMatrix | np.ndarray,
    y,
    rho_floor: float = DEFAULT_RHO_FLOOR,
    idempotence_tol: float = DEFAULT_IDEMPOTENCE_TOL,
) -> ProjectiveResult:
    """Closed-form optimised loss rank of an orthogonal projection.

    Raises NotAProjectionError unless P is idempotent and symmetric to
    within idempotence_tol (the spectrum formula needs both), a
    PerfectFitError when rho < rho_floor (LR is unbounded below there),
    and OutsideValidityError when 1 - rho <= d/n (no interior minimum).
    """
    p = as_hat_array(p_matrix)
    n = p.shape[0]
    if np.linalg.norm(p @ p - p) > idempotence_tol:
        raise NotAProjectionError("matrix is not idempotent within tolerance")
    if np.linalg.norm(p - p.T) > idempotence_tol:
        raise NotAProjectionError("projection is not symmetric (oblique projections unsupported)")
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] != n:
        raise InvalidInputError(f"y has length {yv.shape[0]}, expected {n}")
    if not np.all(np.isfinite(yv)):
        raise InvalidInputError("y contains non-finite values")
    y_sq = float(yv @ yv)
    if y_sq <= 0.0:
        raise DegenerateDataError("y = 0 observed: every projection fits it exactly")

    d = float(np.trace(p))
    rho = 1.0 - float(yv @ (p @ yv)) / y_sq
    rho = min(rho, 1.0)
    if rho < rho_floor:
        raise PerfectFitError(f"relative residual {rho:.3g} below floor: LR unbounded below")
    if 1.0 - rho <= d / n:
        raise OutsideValidityError(
            f"no interior alpha minimum: 1 - rho = {1.0 - rho:.4g} <= d/n = {d / n:.4g}"
        )

    alpha_min = rho * d / ((1.0 - rho) * n - d)
    kl = kl_bernoulli(d / n, 1.0 - rho)
    lr = 0.5 * n * math.log(y_sq) - 0.5 * n * kl
    lr_check = (
        0.5 * n * math.log(y_sq)
        + 0.5 * n * math.log(rho + alpha_min)
        - 0.5 * d * math.log(alpha_min)
        - 0.5 * (n - d) * math.log1p(alpha_min)
    )
    return ProjectiveResult(d=d, rho=rho, alpha_min=alpha_min, kl=kl, lr=lr, lr_check=lr_check)


@dataclass(frozen=True)
class ProjectiveCandidate:
    """Score record for one member of a mixed candidate pool."""

    method: str  # "closed_form" or "numeric"
    lr: float | None
    kl: float | None
    alpha: float | None
    failure: str | None


@dataclass(frozen=True)
class ProjectiveSelection:
    winner: int
    candidates: list[ProjectiveCandidate]


def select_projective(
    candidates: Sequence[HatMatrix | np.ndarray],
    y,
    rho_floor: float = DEFAULT_RHO_FLOOR,
    **numeric_options,
) -> ProjectiveSelection:
    """Pick the candidate with minimal LR, closed form where it applies.

    Projections inside the validity region are scored by the KL form
    (maximising KL is exactly minimising lr there); anything else -- a
    non-projection, a perfect fit, or a fit outside validity -- falls
    back to the numeric alpha optimiser, and all candidates compete on
    lr.  Both scores are reported where defined.
    """
    if len(candidates) == 0:
        raise InvalidInputError("empty candidate list")
    records: list[ProjectiveCandidate] = []
    for cand in candidates:
        try:
            res = projective_loss_rank(cand, y, rho_floor=rho_floor)
            records.append(
                ProjectiveCandidate("closed_form", lr=res.lr, kl=res.kl, alpha=res.alpha_min, failure=None)
            )
            continue
        except (NotAProjectionError, OutsideValidityError, PerfectFitError) as exc:
            reason = f"{type(exc).__name__}: {exc}"
        except LorpError as exc:
            records.append(ProjectiveCandidate("closed_form", None, None, None, f"{type(exc).__name__}: {exc}"))
            continue
        try:
            res_num = loss_rank(cand, y, **numeric_options)
            records.append(
                ProjectiveCandidate("numeric", lr=res_num.lr, kl=None, alpha=res_num.alpha_star, failure=None)
            )
        except LorpError as exc:
            records.append(
                ProjectiveCandidate("numeric", None, None, None, f"{reason}; then {type(exc).__name__}: {exc}")
            )
    winner = -1
    best = math.inf
    for i, rec in enumerate(records):
        if rec.lr is not None and rec.lr < best:
            winner, best = i, rec.lr
    if winner < 0:
        raise SelectionError("all candidates failed")
    return ProjectiveSelection(winner=winner, candidates=records)

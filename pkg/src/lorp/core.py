"""Loss-rank scores for linear smoothers.

A regressor with hat matrix M assigns the observed response vector y the
quadratic loss |y - M y|^2.  Its loss rank is the log-volume of response
vectors that fit at least as well,

    LR(alpha) = (n/2) log(y' S_a y) - (1/2) log det S_a   [+ log v_n],

where S_a = (I-M)'(I-M) + alpha*I penalises the response norm (or
alpha*M'M the estimate norm) to keep the volume finite, and v_n is the
unit-ball volume, dropped by default since it is shared by all candidates
of equal n.  Model selection picks the candidate with minimal LR at its
own optimised alpha.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .exceptions import (
    DegenerateDataError,
    FilterInapplicableError,
    InvalidInputError,
    LorpError,
    NumericalFailureError,
    SelectionError,
    SingularityError,
)
from .regressors import HatMatrix, as_hat_array

DEFAULT_ALPHA_LO = 1e-8
DEFAULT_ALPHA_HI = 1e6
DEFAULT_REL_TOL = 1e-6
DEFAULT_GRID_POINTS = 128

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class PenaltyKind(str, enum.Enum):
    """Which squared norm the alpha-regulariser adds to the loss."""

    RESPONSE = "response"  # S_a = S_0 + alpha * I
    ESTIMATE = "estimate"  # S_a = S_0 + alpha * M'M


def log_unit_ball_volume(n: int) -> float:
    """log of the Euclidean unit-ball volume v_n = pi^(n/2) / (n/2)!."""
    if n < 0:
        raise InvalidInputError(f"dimension must be >= 0, got {n}")
    return 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)


def build_s0(m: HatMatrix | np.ndarray, penalty: PenaltyKind | str = PenaltyKind.RESPONSE) -> np.ndarray:
    """Unpenalised loss matrix S_0 = (I-M)'(I-M), symmetrised.

    The alpha-dependent part of S_a (I for the response penalty, M'M for
    the estimate penalty) is attached later by spectral_cache; S_0 itself
    is the same for both.
    """
    marr = as_hat_array(m)
    PenaltyKind(penalty)
    r = np.eye(marr.shape[0]) - marr
    s0 = r.T @ r
    return 0.5 * (s0 + s0.T)


@dataclass(frozen=True)
class SpectralCache:
    """Everything needed to evaluate LR(alpha) in O(n) per alpha.

    For the response penalty, ``lambdas`` are the eigenvalues of S_0,
    ``alpha_weights`` are all one and ``logdet_const`` is zero, so
    log det S_a = sum log(lambda_i + alpha) exactly.  For the estimate
    penalty the pair (lambdas, alpha_weights) is the spectrum of the
    definite pencil (S_0, S_0 + M'M), with the pencil's log-determinant
    stored in ``logdet_const``:

        log det S_a = logdet_const + sum log(lambda_i + alpha * w_i).

    ``q0`` is |(I-M) y|^2 (computed directly, never via eigenvalues) and
    ``y_sq`` the squared norm multiplying alpha in the loss term: |y|^2
    for the response penalty (centred when the generic direction is
    filtered), |M y|^2 for the estimate penalty.
    """

    lambdas: np.ndarray
    alpha_weights: np.ndarray
    logdet_const: float
    q0: float
    y_sq: float
    n_total: int
    n_dropped: int
    generic_filtered: bool
    penalty: PenaltyKind

    @property
    def n_kept(self) -> int:
        return self.n_total - self.n_dropped


def spectral_cache(
    m: HatMatrix | np.ndarray,
    y,
    penalty: PenaltyKind | str = PenaltyKind.RESPONSE,
    filter_generic: bool = False,
    zero_tol: float | None = None,
) -> SpectralCache:
    """One-time eigendecomposition for a (M, y) pair.

    Eigenvalues within zero_tol below zero are clamped to zero; anything
    further below raises.  zero_tol defaults to 1e-9 * max(1, max
    eigenvalue).  ``filter_generic`` removes the constant direction
    1/sqrt(n) (an eigenvector of every row-stochastic M, which otherwise
    makes S_0 singular); it requires M @ 1 = 1 and the response penalty.
    """
    marr = as_hat_array(m)
    n = marr.shape[0]
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] != n:
        raise InvalidInputError(f"y has length {yv.shape[0]}, expected {n}")
    if not np.all(np.isfinite(yv)):
        raise InvalidInputError("y contains non-finite values")
    penalty = PenaltyKind(penalty)
    if zero_tol is not None and zero_tol <= 0:
        raise InvalidInputError(f"zero_tol must be positive, got {zero_tol}")

    s0 = build_s0(marr, penalty)

    if penalty is PenaltyKind.ESTIMATE:
        if filter_generic:
            raise FilterInapplicableError(
                "generic-direction filtering needs the response penalty: the "
                "constant vector is not an eigendirection of S_0 + alpha*M'M"
            )
        g = marr.T @ marr
        b = s0 + g
        b = 0.5 * (b + b.T)
        # b = S_0 + M'M >= I/2, so the pencil is definite and well conditioned
        mu = scipy.linalg.eigh(s0, b, eigvals_only=True)
        tol = zero_tol if zero_tol is not None else 1e-9
        if mu[0] < -tol or mu[-1] > 1.0 + tol:
            raise NumericalFailureError(
                f"pencil eigenvalues outside [0, 1] beyond tolerance: [{mu[0]}, {mu[-1]}]"
            )
        mu = np.clip(mu, 0.0, 1.0)
        sign, logdet_b = np.linalg.slogdet(b)
        if sign <= 0:
            raise NumericalFailureError("pencil normaliser lost positive definiteness")
        resid = yv - marr @ yv
        return SpectralCache(
            lambdas=mu,
            alpha_weights=1.0 - mu,
            logdet_const=float(logdet_b),
            q0=float(resid @ resid),
            y_sq=float(np.sum((marr @ yv) ** 2)),
            n_total=n,
            n_dropped=0,
            generic_filtered=False,
            penalty=penalty,
        )

    y_used = yv
    n_dropped = 0
    work = s0
    if filter_generic:
        ones = np.ones(n)
        row_resid = float(np.max(np.abs(marr @ ones - ones)))
        # pre-eigen tolerance: bound max eigenvalue of S_0 by its inf-norm
        filter_tol = zero_tol if zero_tol is not None else 1e-9 * max(1.0, float(np.linalg.norm(s0, np.inf)))
        if row_resid > filter_tol:
            raise FilterInapplicableError(
                f"M does not reproduce constants: max |M@1 - 1| = {row_resid:.3g}"
            )
        if n < 2:
            raise FilterInapplicableError("cannot filter the only direction (n = 1)")
        q = scipy.linalg.null_space(np.ones((1, n)))
        work = q.T @ s0 @ q
        work = 0.5 * (work + work.T)
        y_used = yv - yv.mean()
        n_dropped = 1

    lam = np.linalg.eigvalsh(work)
    tol = zero_tol if zero_tol is not None else 1e-9 * max(1.0, float(lam[-1]))
    if lam[0] < -tol:
        raise NumericalFailureError(f"S_0 eigenvalue {lam[0]} below -{tol:.3g}")
    lam = np.where(lam < 0.0, 0.0, lam)
    resid = y_used - marr @ y_used
    return SpectralCache(
        lambdas=lam,
        alpha_weights=np.ones_like(lam),
        logdet_const=0.0,
        q0=float(resid @ resid),
        y_sq=float(y_used @ y_used),
        n_total=n,
        n_dropped=n_dropped,
        generic_filtered=bool(n_dropped),
        penalty=penalty,
    )


def loss_rank_at_alpha(cache: SpectralCache, alpha: float, include_vn: bool = False) -> float:
    """LR at a fixed regulariser weight.

    alpha = 0 is only legal when S_0 is nonsingular (otherwise the
    volume, hence LR, is infinite) and the residual is nonzero.
    """
    if not (np.isfinite(alpha) and alpha >= 0):
        raise InvalidInputError(f"alpha must be finite and >= 0, got {alpha}")
    if alpha == 0 and (cache.lambdas.size == 0 or cache.lambdas[0] <= 0):
        raise SingularityError("alpha = 0 with singular S_0: loss volume is infinite")
    loss = cache.q0 + alpha * cache.y_sq
    if loss <= 0:
        raise DegenerateDataError("y = 0 observed: every candidate fits it exactly")
    axes = cache.lambdas + alpha * cache.alpha_weights
    if np.any(axes <= 0):
        raise SingularityError("degenerate axis in S_alpha")
    lr = 0.5 * cache.n_kept * math.log(loss) - 0.5 * (cache.logdet_const + float(np.sum(np.log(axes))))
    if include_vn:
        lr += log_unit_ball_volume(cache.n_kept)
    return lr


@dataclass(frozen=True)
class AlphaOptimum:
    alpha_star: float
    lr: float
    flat: bool
    at_lower_bound: bool = False
    at_upper_bound: bool = False


def _golden_refine(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    """Golden-section minimisation on [a, b]; returns the bracket midpoint."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def minimize_log_grid(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = DEFAULT_REL_TOL,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> AlphaOptimum:
    """Minimise a scalar function over a logarithmic bracket [lo, hi].

    Convexity is not assumed: a logarithmic grid (at least 64 points;
    smaller requests are raised to 64) localises the minimum, then
    golden-section search in log space refines the bracket until its
    relative width is below rel_tol.  If the total variation of f over
    the grid is below 10 * rel_tol the objective is reported flat and
    the geometric mean of the bounds is returned.  lo == hi pins the
    argument: f is evaluated once there, with both bound flags set.
    """
    if not (0 < lo <= hi) or not np.isfinite(hi):
        raise InvalidInputError(f"need 0 < lo <= hi, got [{lo}, {hi}]")
    if rel_tol <= 0:
        raise InvalidInputError(f"rel_tol must be positive, got {rel_tol}")
    if lo == hi:
        return AlphaOptimum(lo, f(lo), flat=False, at_lower_bound=True, at_upper_bound=True)
    grid_points = max(int(grid_points), 64)

    def g(t: float) -> float:
        return f(math.exp(t))

    ts = np.linspace(math.log(lo), math.log(hi), grid_points)
    vals = np.array([g(t) for t in ts])
    if float(np.sum(np.abs(np.diff(vals)))) < 10.0 * rel_tol:
        x_star = math.sqrt(lo * hi)
        return AlphaOptimum(x_star, f(x_star), flat=True)

    i = int(np.argmin(vals))
    a = ts[max(i - 1, 0)]
    b = ts[min(i + 1, grid_points - 1)]
    t_star = _golden_refine(g, a, b, math.log1p(rel_tol))
    x_star = math.exp(t_star)
    return AlphaOptimum(
        x_star,
        f(x_star),
        flat=False,
        at_lower_bound=(i == 0),
        at_upper_bound=(i == grid_points - 1),
    )


def optimize_alpha(
    cache: SpectralCache,
    alpha_lo: float = DEFAULT_ALPHA_LO,
    alpha_hi: float = DEFAULT_ALPHA_HI,
    rel_tol: float = DEFAULT_REL_TOL,
    grid_points: int = DEFAULT_GRID_POINTS,
    include_vn: bool = False,
) -> AlphaOptimum:
    """Minimise LR(alpha) on [alpha_lo, alpha_hi] by log grid + golden
    section (see minimize_log_grid for the bracketing rules)."""
    return minimize_log_grid(
        lambda alpha: loss_rank_at_alpha(cache, alpha, include_vn=include_vn),
        alpha_lo,
        alpha_hi,
        rel_tol=rel_tol,
        grid_points=grid_points,
    )


@dataclass(frozen=True)
class LossRankResult:
    """Optimised loss rank of one candidate."""

    lr: float
    alpha_star: float
    loss_at_alpha: float
    logdet_at_alpha: float
    include_vn: bool
    flat_objective: bool
    at_lower_bound: bool
    at_upper_bound: bool
    n_kept: int
    generic_filtered: bool


def loss_rank(
    m: HatMatrix | np.ndarray,
    y,
    *,
    penalty: PenaltyKind | str = PenaltyKind.RESPONSE,
    filter_generic: bool = False,
    alpha_lo: float = DEFAULT_ALPHA_LO,
    alpha_hi: float = DEFAULT_ALPHA_HI,
    rel_tol: float = DEFAULT_REL_TOL,
    grid_points: int = DEFAULT_GRID_POINTS,
    include_vn: bool = False,
    zero_tol: float | None = None,
) -> LossRankResult:
    """Spectral cache + alpha optimisation in one call."""
    cache = spectral_cache(m, y, penalty=penalty, filter_generic=filter_generic, zero_tol=zero_tol)
    opt = optimize_alpha(
        cache,
        alpha_lo=alpha_lo,
        alpha_hi=alpha_hi,
        rel_tol=rel_tol,
        grid_points=grid_points,
        include_vn=include_vn,
    )
    axes = cache.lambdas + opt.alpha_star * cache.alpha_weights
    return LossRankResult(
        lr=opt.lr,
        alpha_star=opt.alpha_star,
        loss_at_alpha=cache.q0 + opt.alpha_star * cache.y_sq,
        logdet_at_alpha=cache.logdet_const + float(np.sum(np.log(axes))),
        include_vn=include_vn,
        flat_objective=opt.flat,
        at_lower_bound=opt.at_lower_bound,
        at_upper_bound=opt.at_upper_bound,
        n_kept=cache.n_kept,
        generic_filtered=cache.generic_filtered,
    )


@dataclass(frozen=True)
class SelectionOutcome:
    """Scores for a candidate pool; winner is the minimal-LR index."""

    winner: int
    results: list[LossRankResult | None]
    failures: list[str | None]


def select_model(candidates: Sequence[HatMatrix | np.ndarray], y, **options) -> SelectionOutcome:
    """Score every candidate with loss_rank and pick the smallest.

    Candidates that raise are recorded as failures and excluded rather
    than aborting the run; ties go to the smaller index.  Raises only
    when no candidate survives.
    """
    if len(candidates) == 0:
        raise InvalidInputError("empty candidate list")
    results: list[LossRankResult | None] = []
    failures: list[str | None] = []
    for cand in candidates:
        try:
            results.append(loss_rank(cand, y, **options))
            failures.append(None)
        except LorpError as exc:
            results.append(None)
            failures.append(f"{type(exc).__name__}: {exc}")
    winner = -1
    best = math.inf
    for i, res in enumerate(results):
        if res is not None and res.lr < best:
            winner, best = i, res.lr
    if winner < 0:
        raise SelectionError("all candidates failed: " + "; ".join(f for f in failures if f))
    return SelectionOutcome(winner=winner, results=results, failures=failures)


def ellipsoid_volume(lambdas, alpha: float, loss_level: float) -> float:
    """log-volume of the ellipsoid { y' : y'(S_0 + alpha I)y' <= L }.

    With axis spectrum lambda_i + alpha this is
    log v_n + (n/2) log L - (1/2) sum log(lambda_i + alpha); L = 0 gives
    -inf (a point has no volume).
    """
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size == 0:
        raise InvalidInputError("empty spectrum")
    if not np.isfinite(loss_level) or loss_level < 0:
        raise InvalidInputError(f"loss level must be finite and >= 0, got {loss_level}")
    axes = lam + alpha
    if np.any(axes <= 0):
        raise SingularityError("nonpositive ellipsoid axis: volume undefined or infinite")
    if loss_level == 0:
        return -math.inf
    n = lam.size
    return log_unit_ball_volume(n) + 0.5 * n * math.log(loss_level) - 0.5 * float(np.sum(np.log(axes)))

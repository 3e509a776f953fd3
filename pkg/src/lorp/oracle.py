"""Brute-force reference answers for loss ranks and loss volumes.

Nothing here knows about hat matrices or alpha optimisation: a loss is
just a function of a candidate response vector, and the three estimators
count or sample response space directly.  They exist to check the
analytic machinery against ground truth on small instances, and to be
checked themselves against hand-computable cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import PenaltyKind, build_s0
from .exceptions import (
    EnumerationBudgetError,
    IndeterminateRatioError,
    InvalidInputError,
)
from .regressors import HatMatrix, as_hat_array

DEFAULT_BUDGET = 10_000_000
_CHUNK = 200_000
MIN_SAMPLES = 1000


@dataclass(frozen=True)
class LossFunction:
    """Loss of a fictitious response vector; nonnegative by contract.

    ``fn`` maps one length-n vector to a float.  ``batch_fn``, when
    given, maps an (N, n) array to N losses and is what the enumerators
    actually call; without it, rows are evaluated one by one.
    """

    fn: Callable[[np.ndarray], float]
    name: str = "loss"
    batch_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, y) -> float:
        return float(self.fn(np.asarray(y, dtype=float)))

    def batch(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.batch_fn is not None:
            return np.asarray(self.batch_fn(pts), dtype=float)
        return np.array([float(self.fn(row)) for row in pts])


def quadratic_form_loss(s: np.ndarray, name: str = "quadratic") -> LossFunction:
    """Loss y' -> y'.T @ S @ y' for a fixed PSD matrix S."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidInputError(f"S must be square, got shape {s.shape}")
    return LossFunction(
        fn=lambda y: float(y @ s @ y),
        name=name,
        batch_fn=lambda pts: np.einsum("ij,jk,ik->i", pts, s, pts),
    )


def hat_matrix_loss(
    m: HatMatrix | np.ndarray,
    alpha: float = 0.0,
    penalty: PenaltyKind | str = PenaltyKind.RESPONSE,
    name: str | None = None,
) -> LossFunction:
    """|y - M y|^2 plus the alpha-penalty, as a plain quadratic form."""
    marr = as_hat_array(m)
    if alpha < 0:
        raise InvalidInputError(f"alpha must be >= 0, got {alpha}")
    s = build_s0(marr)
    if alpha > 0:
        if PenaltyKind(penalty) is PenaltyKind.RESPONSE:
            s = s + alpha * np.eye(marr.shape[0])
        else:
            s = s + alpha * (marr.T @ marr)
    return quadratic_form_loss(s, name=name or "hat-matrix loss")


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box of candidate response vectors."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise InvalidInputError("box bounds must be matching 1-d arrays")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidInputError("box bounds must be finite")
        if np.any(hi <= lo):
            raise InvalidInputError("box must have positive extent in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self) -> int:
        return self.lo.size

    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @classmethod
    def cube(cls, lo: float, hi: float, n: int) -> "BoxDomain":
        return cls(np.full(n, float(lo)), np.full(n, float(hi)))

    @classmethod
    def around_y(cls, y, pad: float = 3.0) -> "BoxDomain":
        """Default sampling box: [min(y) - pad*range, max(y) + pad*range]^n.

        A constant y has zero range; the half-width falls back to 1.
        """
        yv = np.asarray(y, dtype=float).ravel()
        span = float(yv.max() - yv.min())
        if span == 0.0:
            span = 1.0
        return cls.cube(float(yv.min()) - pad * span, float(yv.max()) + pad * span, yv.size)


def _check_level(loss: LossFunction, y_obs) -> tuple[np.ndarray, float]:
    yv = np.asarray(y_obs, dtype=float).ravel()
    if yv.size == 0 or not np.all(np.isfinite(yv)):
        raise InvalidInputError("observed y must be a nonempty finite vector")
    level = loss(yv)
    if not np.isfinite(level) or level < 0:
        raise InvalidInputError(f"loss at observed y must be finite and >= 0, got {level}")
    return yv, level


def exact_rank(
    loss: LossFunction,
    y_obs,
    values,
    n: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> int:
    """Number of response vectors over values^n fitting at least as well.

    Counts with <= (not <), so tied vectors all share the rank of the
    right-most member of their equality group.  The observed y itself
    always counts, so the result is >= 1 when y lies on the grid.
    """
    yv, level = _check_level(loss, y_obs)
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size == 0 or not np.all(np.isfinite(vals)):
        raise InvalidInputError("values must be a nonempty finite set")
    if n is None:
        n = yv.size
    if n != yv.size:
        raise InvalidInputError(f"y has length {yv.size}, expected n = {n}")
    total = vals.size**n
    if total > budget:
        raise EnumerationBudgetError(f"{vals.size}^{n} = {total} points exceeds budget {budget}")
    shape = (vals.size,) * n
    count = 0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        coords = np.stack(np.unravel_index(idx, shape), axis=1)
        count += int(np.count_nonzero(loss.batch(vals[coords]) <= level))
    return count


@dataclass(frozen=True)
class GridRankResult:
    count: int
    volume: float
    eps: float
    level: float


def grid_rank(
    loss: LossFunction,
    y_obs,
    box: BoxDomain,
    eps: float,
    budget: int = DEFAULT_BUDGET,
) -> GridRankResult:
    """Rank over the eps-grid of the box; count * eps^n estimates volume.

    Grid points are lo + eps*k per coordinate, k = 0 .. floor((hi-lo)/eps)
    (a hair of float slack on the division), so an exactly divisible edge
    includes both endpoints.
    """
    yv = np.asarray(y_obs, dtype=float).ravel()
    if box.n != yv.size:
        raise InvalidInputError(f"box dimension {box.n} != len(y) = {yv.size}")
    yv, level = _check_level(loss, yv)
    if not (np.isfinite(eps) and eps > 0):
        raise InvalidInputError(f"eps must be positive, got {eps}")
    sizes = tuple(int(np.floor((h - l) / eps + 1e-9)) + 1 for l, h in zip(box.lo, box.hi))
    total = math.prod(sizes)
    if total > budget:
        raise EnumerationBudgetError(f"grid of {total} points exceeds budget {budget}")
    count = 0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        coords = np.stack(np.unravel_index(idx, sizes), axis=1).astype(float)
        pts = box.lo + eps * coords
        count += int(np.count_nonzero(loss.batch(pts) <= level))
    return GridRankResult(count=count, volume=count * eps**yv.size, eps=eps, level=level)


@dataclass(frozen=True)
class MCVolumeResult:
    estimate: float
    stderr: float
    hits: int
    n_samples: int
    box_volume: float
    level: float

    @property
    def zero_hits(self) -> bool:
        return self.hits == 0


def _sample_hits(
    loss: LossFunction, level: float, box: BoxDomain, n_samples: int, rng: np.random.Generator
) -> int:
    hits = 0
    remaining = n_samples
    while remaining > 0:
        take = min(_CHUNK, remaining)
        pts = rng.uniform(box.lo, box.hi, size=(take, box.n))
        hits += int(np.count_nonzero(loss.batch(pts) <= level))
        remaining -= take
    return hits


def mc_volume(
    loss: LossFunction,
    y_obs,
    box: BoxDomain,
    n_samples: int = 100_000,
    seed: int = 0,
) -> MCVolumeResult:
    """Monte-Carlo volume of { y' in box : loss(y') <= loss(y_obs) }.

    Plain rejection from the uniform box law: estimate is box volume
    times hit fraction, stderr the binomial delta.  Deterministic for a
    fixed seed (one PCG64 stream, chunking does not change the draw
    order).  Zero hits come back as estimate 0 with the zero_hits flag
    set, not an error.
    """
    yv = np.asarray(y_obs, dtype=float).ravel()
    if box.n != yv.size:
        raise InvalidInputError(f"box dimension {box.n} != len(y) = {yv.size}")
    yv, level = _check_level(loss, yv)
    if n_samples < MIN_SAMPLES:
        raise InvalidInputError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    hits = _sample_hits(loss, level, box, n_samples, rng)
    vol = box.volume()
    p = hits / n_samples
    return MCVolumeResult(
        estimate=vol * p,
        stderr=vol * math.sqrt(p * (1.0 - p) / n_samples),
        hits=hits,
        n_samples=n_samples,
        box_volume=vol,
        level=level,
    )


@dataclass(frozen=True)
class MCRatioResult:
    """ratio estimates |V_a| / |V_b|, so log(ratio) = LR_a - LR_b."""

    ratio: float
    log_ratio: float
    stderr: float
    frac_a_in_b: float
    frac_b_in_a: float
    hits_a: int
    hits_b: int


def mc_volume_ratio(
    loss_a: LossFunction,
    loss_b: LossFunction,
    level_a: float,
    level_b: float,
    box: BoxDomain,
    n_samples: int = 100_000,
    seed: int = 0,
) -> MCRatioResult:
    """Volume ratio of two sublevel sets via membership cross-fractions.

    Two independent child streams rejection-sample V_a and V_b from the
    box; the fraction of V_a points inside V_b estimates |A&B|/|A| and
    vice versa, and their quotient cancels the intersection:

        |V_a| / |V_b| = (frac of b-points in a) / (frac of a-points in b).

    Needs the regions to overlap inside the box; otherwise (or when a
    region gets no hits at all) the ratio is indeterminate and raises.
    stderr is the binomial delta-method estimate.
    """
    if level_a < 0 or level_b < 0:
        raise InvalidInputError("loss levels must be >= 0")
    if n_samples < MIN_SAMPLES:
        raise InvalidInputError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    seeds = np.random.SeedSequence(seed).spawn(2)
    members: list[np.ndarray] = []
    for loss, level, child in ((loss_a, level_a, seeds[0]), (loss_b, level_b, seeds[1])):
        rng = np.random.default_rng(child)
        kept = []
        remaining = n_samples
        while remaining > 0:
            take = min(_CHUNK, remaining)
            pts = rng.uniform(box.lo, box.hi, size=(take, box.n))
            kept.append(pts[loss.batch(pts) <= level])
            remaining -= take
        members.append(np.concatenate(kept) if kept else np.empty((0, box.n)))
    in_a, in_b = members
    if in_a.shape[0] == 0 or in_b.shape[0] == 0:
        raise IndeterminateRatioError("a region received no hits inside the box")
    cross_ab = int(np.count_nonzero(loss_b.batch(in_a) <= level_b))
    cross_ba = int(np.count_nonzero(loss_a.batch(in_b) <= level_a))
    if cross_ab == 0 or cross_ba == 0:
        raise IndeterminateRatioError("no cross hits: the regions may not intersect in the box")
    f_ab = cross_ab / in_a.shape[0]
    f_ba = cross_ba / in_b.shape[0]
    ratio = f_ba / f_ab
    var_rel = 0.0
    for f, m in ((f_ab, in_a.shape[0]), (f_ba, in_b.shape[0])):
        var_rel += (1.0 - f) / (f * m)
    return MCRatioResult(
        ratio=ratio,
        log_ratio=math.log(ratio),
        stderr=ratio * math.sqrt(var_rel),
        frac_a_in_b=f_ab,
        frac_b_in_a=f_ba,
        hits_a=in_a.shape[0],
        hits_b=in_b.shape[0],
    )

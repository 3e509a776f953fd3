"""Linear smoothers and their hat matrices.

Every regressor here is linear in the responses: the fitted vector is
``yhat = M @ y`` for an n x n matrix ``M`` built from the covariates
alone.  The loss-rank machinery only ever looks at ``M``, so this module
is the single place regressor families are defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import InvalidInputError

Metric = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class RegressorSpec:
    """Tagged description of a regressor, used for labels and reports."""

    kind: str
    k: int | None = None
    sigma: float | None = None
    d: int | None = None
    feature_map: str | None = None

    def params(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for name in ("k", "sigma", "d", "feature_map"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    def label(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class HatMatrix:
    """A hat matrix together with the spec that produced it."""

    m: np.ndarray
    spec: RegressorSpec | None = None
    info: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"hat matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("hat matrix contains non-finite entries")
        object.__setattr__(self, "m", m)

    @property
    def n(self) -> int:
        return self.m.shape[0]


def as_hat_array(m: HatMatrix | np.ndarray) -> np.ndarray:
    """Accept either a HatMatrix or a raw square array; return the array."""
    if isinstance(m, HatMatrix):
        return m.m
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"hat matrix must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("hat matrix contains non-finite entries")
    return arr


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidInputError(f"covariates must be (n,) or (n, m), got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("covariates contain non-finite values")
    return pts


def _pairwise(pts: np.ndarray, metric: Metric | None) -> np.ndarray:
    if metric is None:
        return cdist(pts, pts)
    # metric is assumed symmetric; each unordered pair is evaluated once
    n = pts.shape[0]
    dist = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            dist[i, j] = dist[j, i] = float(metric(pts[i], pts[j]))
    return dist


def knn_matrix(x, k: int, metric: Metric | None = None) -> HatMatrix:
    """k-nearest-neighbour smoother: row i averages the k nearest points.

    The point itself counts among its neighbours, so k=1 gives the
    identity.  Ties at the cut-off distance are broken by smaller index,
    except that the self point always outranks anything else at distance
    zero (duplicates included).
    """
    pts = _as_points(x)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"k must be in [1, {n}], got {k}")
    dist = _pairwise(pts, metric)
    idx = np.arange(n)
    m = np.zeros((n, n))
    for i in range(n):
        # lexsort keys, last is primary: distance, then self-first, then index
        order = np.lexsort((idx, idx != i, dist[i]))
        m[i, order[:k]] = 1.0 / k
    return HatMatrix(m, RegressorSpec("knn", k=k))


def knn_prime_matrix(x, k: int, metric: Metric | None = None) -> HatMatrix:
    """kNN variant that never looks at the point's own response.

    The self *index* is excluded outright (not merely the nearest point
    by distance), so the diagonal is identically zero even when rows of
    x are duplicated.  Requires k <= n - 1.
    """
    pts = _as_points(x)
    n = pts.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two points to exclude the self point")
    if not 1 <= k <= n - 1:
        raise InvalidInputError(f"k must be in [1, {n - 1}], got {k}")
    dist = _pairwise(pts, metric)
    idx = np.arange(n)
    m = np.zeros((n, n))
    for i in range(n):
        order = np.lexsort((idx, dist[i]))
        order = order[order != i]
        m[i, order[:k]] = 1.0 / k
    return HatMatrix(m, RegressorSpec("knnprime", k=k))


def gaussian_kernel_matrix(x, sigma: float) -> HatMatrix:
    """Nadaraya-Watson smoother with a Gaussian kernel.

    M[i, j] is exp(-|x_i - x_j|^2 / (2 sigma^2)) normalised over j, so
    rows sum to one and every entry is positive (possibly underflowing
    to zero far from the diagonal).
    """
    pts = _as_points(x)
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    sq = cdist(pts, pts, "sqeuclidean")
    w = np.exp(-sq / (2.0 * sigma * sigma))
    # diagonal entries are exactly 1, so row sums never vanish
    m = w / w.sum(axis=1, keepdims=True)
    return HatMatrix(m, RegressorSpec("kernel", sigma=float(sigma)))


@dataclass(frozen=True)
class FeatureMatrix:
    """Design matrix of basis-function values, one column per feature."""

    phi: np.ndarray
    name: str = "features"

    def __post_init__(self) -> None:
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 2:
            raise InvalidInputError(f"design matrix must be 2-d, got shape {phi.shape}")
        if not np.all(np.isfinite(phi)):
            raise InvalidInputError("design matrix contains non-finite values")
        object.__setattr__(self, "phi", phi)


def polynomial_design(x, d: int) -> FeatureMatrix:
    """Monomial design: column a holds x**a for a = 0 .. d-1 (d columns).

    d counts basis functions, so the polynomial degree is d - 1; d = 0
    is the empty design (the zero regressor).
    """
    xv = np.asarray(x, dtype=float)
    if xv.ndim == 2 and xv.shape[1] == 1:
        xv = xv[:, 0]
    if xv.ndim != 1:
        raise InvalidInputError("polynomial design needs scalar covariates")
    if not np.all(np.isfinite(xv)):
        raise InvalidInputError("covariates contain non-finite values")
    if d < 0:
        raise InvalidInputError(f"d must be >= 0, got {d}")
    phi = np.vander(xv, N=d, increasing=True)
    return FeatureMatrix(phi, name=f"poly:{d}")


def lbfr_matrix(
    phi: FeatureMatrix | np.ndarray,
    rank_tol: float = 1e-10,
    spec: RegressorSpec | None = None,
) -> HatMatrix:
    """Least-squares fit onto the span of the design columns.

    Returns the orthogonal projection M with M @ y the fitted values of
    the basis regression.  Rank deficiency is handled by a pseudo-inverse
    cut: directions whose Gram-spectrum share falls below rank_tol
    (relative) are dropped, and the effective rank is reported in
    ``info["rank"]``.
    """
    arr = phi.phi if isinstance(phi, FeatureMatrix) else np.asarray(phi, dtype=float)
    if arr.ndim != 2:
        raise InvalidInputError(f"design matrix must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("design matrix contains non-finite values")
    n, d = arr.shape
    if spec is None:
        name = phi.name if isinstance(phi, FeatureMatrix) else "features"
        spec = RegressorSpec("lbfr", d=d, feature_map=name)
    if d == 0:
        return HatMatrix(np.zeros((n, n)), spec, info={"rank": 0})
    u, s, _ = np.linalg.svd(arr, full_matrices=False)
    # rank_tol is relative on the Gram spectrum s**2, hence sqrt on s
    if s[0] > 0:
        rank = int(np.sum(s > np.sqrt(rank_tol) * s[0]))
    else:
        rank = 0
    ur = u[:, :rank]
    m = ur @ ur.T
    m = 0.5 * (m + m.T)
    return HatMatrix(m, spec, info={"rank": rank})


def polynomial_matrix(x, d: int, rank_tol: float = 1e-10) -> HatMatrix:
    """Hat matrix of the monomial basis fit with d basis functions."""
    return lbfr_matrix(polynomial_design(x, d), rank_tol=rank_tol, spec=RegressorSpec("poly", d=d))


# --- prediction at new covariates ------------------------------------------
#
# Convenience helpers only: selection itself never leaves the training
# points, but a chosen model is usually wanted as a predictor afterwards.


def knn_predict(x_train, y, x_new, k: int, metric: Metric | None = None) -> np.ndarray:
    """Average response of the k nearest training points to each query."""
    pts = _as_points(x_train)
    queries = _as_points(x_new)
    yv = np.asarray(y, dtype=float).ravel()
    n = pts.shape[0]
    if yv.shape[0] != n:
        raise InvalidInputError("y length must match the number of training points")
    if not 1 <= k <= n:
        raise InvalidInputError(f"k must be in [1, {n}], got {k}")
    if metric is None:
        dist = cdist(queries, pts)
    else:
        dist = np.array([[float(metric(q, p)) for p in pts] for q in queries])
    idx = np.arange(n)
    out = np.empty(queries.shape[0])
    for i in range(queries.shape[0]):
        order = np.lexsort((idx, dist[i]))
        out[i] = yv[order[:k]].mean()
    return out


def kernel_predict(x_train, y, x_new, sigma: float) -> np.ndarray:
    """Nadaraya-Watson prediction at new covariates."""
    pts = _as_points(x_train)
    queries = _as_points(x_new)
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] != pts.shape[0]:
        raise InvalidInputError("y length must match the number of training points")
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    w = np.exp(-cdist(queries, pts, "sqeuclidean") / (2.0 * sigma * sigma))
    sums = w.sum(axis=1)
    out = np.empty(queries.shape[0])
    ok = sums > 0
    out[ok] = (w[ok] @ yv) / sums[ok]
    if not np.all(ok):
        # all weights underflowed: fall back to the nearest training point
        dist = cdist(queries, pts)
        out[~ok] = yv[np.argmin(dist[~ok], axis=1)]
    return out


def polynomial_predict(x_train, y, x_new, d: int, rank_tol: float = 1e-10) -> np.ndarray:
    """Fit the d-function monomial basis on train, evaluate at new points."""
    design = polynomial_design(x_train, d)
    yv = np.asarray(y, dtype=float).ravel()
    if yv.shape[0] != design.phi.shape[0]:
        raise InvalidInputError("y length must match the number of training points")
    if d == 0:
        return np.zeros(np.asarray(x_new, dtype=float).ravel().shape[0])
    w, *_ = np.linalg.lstsq(design.phi, yv, rcond=np.sqrt(rank_tol))
    return polynomial_design(x_new, d).phi @ w

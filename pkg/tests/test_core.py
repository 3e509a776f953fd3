import math

import numpy as np
import pytest

from lorp.core import (
    ellipsoid_volume,
    log_unit_ball_volume,
    loss_rank,
    loss_rank_at_alpha,
    minimize_log_grid,
    optimize_alpha,
    select_model,
    spectral_cache,
)
from lorp.exceptions import (
    DegenerateDataError,
    FilterInapplicableError,
    InvalidInputError,
    SelectionError,
    SingularityError,
)
from lorp.oracle import BoxDomain, mc_volume, quadratic_form_loss
from lorp.regressors import gaussian_kernel_matrix, knn_matrix, polynomial_matrix

Y2 = np.array([1.0, 2.0])
MEAN2 = np.full((2, 2), 0.5)


# The two-point mean smoother as hand arithmetic: S0 = I - M has
# eigenvalues (0, 1); |(I-M)y|^2 = 1/2; |y|^2 = 5.  The optimum is
# alpha* = 1/8 with LR = log 5 - KL(1/2 || 9/10) = log 3.


def test_mean_cache_values():
    cache = spectral_cache(MEAN2, Y2)
    np.testing.assert_allclose(cache.lambdas, [0.0, 1.0], atol=1e-12)
    assert abs(cache.q0 - 0.5) < 1e-12
    assert abs(cache.y_sq - 5.0) < 1e-12
    assert cache.n_kept == 2 and not cache.generic_filtered
    np.testing.assert_allclose(cache.alpha_weights, 1.0)
    assert cache.logdet_const == 0.0


def test_mean_lr_at_eighth_is_log3():
    cache = spectral_cache(MEAN2, Y2)
    assert abs(loss_rank_at_alpha(cache, 0.125) - math.log(3.0)) < 1e-12


def test_mean_optimum():
    res = loss_rank(MEAN2, Y2)
    assert abs(res.alpha_star - 0.125) < 1e-5 * 0.125
    assert abs(res.lr - math.log(3.0)) < 1e-10
    assert not res.flat_objective
    assert not (res.at_lower_bound or res.at_upper_bound)


def test_flat_candidates_score_half_n_log_ysq():
    # both the zero predictor and the interpolator have LR(alpha) = log|y|^2
    # for every alpha: the objective is flat and alpha* is the midpoint
    for m in (np.zeros((2, 2)), np.eye(2)):
        res = loss_rank(m, Y2)
        assert res.flat_objective
        assert abs(res.lr - math.log(5.0)) < 1e-10
        assert abs(res.alpha_star - math.sqrt(1e-8 * 1e6)) < 1e-12


def test_single_point_zero_predictor():
    res = loss_rank(np.zeros((1, 1)), [2.0], alpha_lo=1.0, alpha_hi=1.0)
    assert abs(loss_rank_at_alpha(spectral_cache(np.zeros((1, 1)), [2.0]), 1.0) - math.log(2.0)) < 1e-12
    assert abs(res.lr - math.log(2.0)) < 1e-12


def test_generic_filter_on_mean_matrix():
    cache = spectral_cache(MEAN2, Y2, filter_generic=True)
    assert cache.generic_filtered and cache.n_kept == 1
    np.testing.assert_allclose(cache.lambdas, [1.0], atol=1e-12)
    assert abs(cache.q0 - 0.5) < 1e-12
    assert abs(cache.y_sq - 0.5) < 1e-12
    # in the complement the mean matrix acts like the zero map: flat objective
    res = loss_rank(MEAN2, Y2, filter_generic=True)
    assert res.flat_objective
    assert abs(res.lr - 0.5 * math.log(0.5)) < 1e-10


def test_generic_filter_rejected_off_row_stochastic():
    with pytest.raises(FilterInapplicableError):
        spectral_cache(np.zeros((2, 2)), Y2, filter_generic=True)
    with pytest.raises(FilterInapplicableError):
        spectral_cache(MEAN2, Y2, penalty="estimate", filter_generic=True)


def test_alpha_zero_singular():
    cache = spectral_cache(MEAN2, Y2)
    with pytest.raises(SingularityError):
        loss_rank_at_alpha(cache, 0.0)


def test_zero_response_degenerate():
    cache = spectral_cache(np.eye(2), np.zeros(2))
    with pytest.raises(DegenerateDataError):
        loss_rank_at_alpha(cache, 0.5)


def test_alpha_limits():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(3, 10))
        x = rng.normal(size=n)
        y = rng.normal(size=n) + 1.0
        cache = spectral_cache(knn_matrix(x, int(rng.integers(1, n + 1))), y)
        # alpha -> inf: the ellipsoid shape stops mattering
        limit = 0.5 * cache.n_kept * math.log(cache.y_sq)
        val = loss_rank_at_alpha(cache, 1e12)
        assert abs(val - limit) <= 1e-4 * abs(limit)


def test_alpha_to_zero_diverges_on_singular_s0():
    cache = spectral_cache(MEAN2, Y2)
    assert loss_rank_at_alpha(cache, 1e-12) > loss_rank_at_alpha(cache, 1.0) + 5.0


def test_permutation_equivariance():
    rng = np.random.default_rng(42)
    for _ in range(10):
        n = int(rng.integers(4, 9))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        m = gaussian_kernel_matrix(x, 0.7).m
        perm = rng.permutation(n)
        base = loss_rank(m, y)
        shuf = loss_rank(m[np.ix_(perm, perm)], y[perm])
        assert abs(base.lr - shuf.lr) < 1e-10
        assert abs(base.alpha_star - shuf.alpha_star) < 1e-10 * max(1.0, base.alpha_star)


def test_cache_spectrum_nonnegative():
    rng = np.random.default_rng(9)
    for _ in range(30):
        n = int(rng.integers(2, 10))
        x = rng.normal(size=(n, 2))
        for hat in (
            knn_matrix(x, int(rng.integers(1, n + 1))),
            gaussian_kernel_matrix(x, float(rng.uniform(0.1, 2.0))),
        ):
            for penalty in ("response", "estimate"):
                cache = spectral_cache(hat, rng.normal(size=n), penalty=penalty)
                assert np.all(cache.lambdas >= 0.0)


def test_estimate_penalty_matches_dense_formula():
    rng = np.random.default_rng(21)
    for _ in range(10):
        n = int(rng.integers(2, 7))
        x = rng.normal(size=n)
        m = gaussian_kernel_matrix(x, 0.8).m
        y = rng.normal(size=n)
        cache = spectral_cache(m, y, penalty="estimate")
        s0 = (np.eye(n) - m).T @ (np.eye(n) - m)
        for alpha in (1e-3, 0.1, 1.0, 10.0):
            s_alpha = s0 + alpha * m.T @ m
            direct = 0.5 * n * math.log(float(y @ s_alpha @ y)) - 0.5 * np.linalg.slogdet(s_alpha)[1]
            assert abs(loss_rank_at_alpha(cache, alpha) - direct) < 1e-8


def test_response_q0_is_residual_norm():
    rng = np.random.default_rng(2)
    n = 6
    m = knn_matrix(rng.normal(size=n), 2).m
    y = rng.normal(size=n)
    cache = spectral_cache(m, y)
    assert abs(cache.q0 - float(np.sum((y - m @ y) ** 2))) < 1e-12


def test_include_vn_shifts_by_ball_volume():
    res0 = loss_rank(MEAN2, Y2)
    res1 = loss_rank(MEAN2, Y2, include_vn=True)
    assert abs((res1.lr - res0.lr) - log_unit_ball_volume(2)) < 1e-10


def test_demo_ordering_against_ranks():
    # exact ranks on the discrete demo are (8, 7, 9): the mean wins, and
    # the volume picture agrees wherever it distinguishes candidates at
    # all (the zero map and the interpolator tie in continuous volume)
    for alpha in (0.02, 0.125, 0.3):
        lr = [
            loss_rank_at_alpha(spectral_cache(m, Y2), alpha)
            for m in (np.zeros((2, 2)), MEAN2, np.eye(2))
        ]
        assert lr[1] < lr[0]
        assert lr[1] < lr[2]
        assert abs(lr[0] - lr[2]) < 1e-12


def test_select_model_demo():
    out = select_model([np.zeros((2, 2)), MEAN2, np.eye(2)], Y2)
    assert out.winner == 1
    assert all(f is None for f in out.failures)


def test_select_model_survives_bad_candidate():
    out = select_model([np.full((2, 3), 0.1), MEAN2], Y2)
    assert out.winner == 1
    assert out.failures[0] is not None and "InvalidInputError" in out.failures[0]


def test_select_model_tie_goes_to_first():
    out = select_model([MEAN2, MEAN2.copy()], Y2)
    assert out.winner == 0


def test_select_model_all_failed():
    with pytest.raises(SelectionError):
        select_model([np.full((2, 3), 0.1)], Y2)
    with pytest.raises(InvalidInputError):
        select_model([], Y2)


def test_minimize_log_grid_boundaries():
    up = minimize_log_grid(math.log, 1e-3, 1e3)
    assert up.at_lower_bound and not up.at_upper_bound
    down = minimize_log_grid(lambda t: -math.log(t), 1e-3, 1e3)
    assert down.at_upper_bound and not down.at_lower_bound
    flat = minimize_log_grid(lambda t: 1.0, 1e-3, 1e3)
    assert flat.flat and abs(flat.alpha_star - 1.0) < 1e-9


def test_minimize_log_grid_quadratic_in_log():
    target = 3.7
    f = lambda t: (math.log(t) - math.log(target)) ** 2
    res = minimize_log_grid(f, 1e-6, 1e6)
    assert abs(res.alpha_star - target) < 1e-4 * target


def test_optimize_alpha_matches_loss_rank():
    cache = spectral_cache(MEAN2, Y2)
    opt = optimize_alpha(cache)
    res = loss_rank(MEAN2, Y2)
    assert abs(opt.lr - res.lr) < 1e-12
    assert abs(opt.alpha_star - res.alpha_star) < 1e-12


def test_ellipsoid_volume_frozen_values():
    assert abs(ellipsoid_volume([0.0], 1.0, 1.0) - math.log(2.0)) < 1e-12
    assert abs(ellipsoid_volume([1.0, 1.0], 0.0, 1.0) - math.log(math.pi)) < 1e-12
    expected = math.log(2.0 * math.pi / math.sqrt(3.0))
    assert abs(ellipsoid_volume([1.0, 3.0], 0.0, 2.0) - expected) < 1e-12


def test_ellipsoid_volume_monotone_in_level():
    levels = [0.5, 1.0, 2.0, 4.0]
    vols = [ellipsoid_volume([1.0, 3.0], 0.1, lv) for lv in levels]
    assert all(a < b for a, b in zip(vols, vols[1:]))
    assert ellipsoid_volume([1.0], 0.5, 0.0) == -math.inf


def test_ellipsoid_volume_errors():
    with pytest.raises(InvalidInputError):
        ellipsoid_volume([1.0], 0.0, -1.0)
    with pytest.raises(SingularityError):
        ellipsoid_volume([0.0], 0.0, 1.0)


def test_ellipsoid_volume_against_mc():
    lam = np.array([1.0, 3.0])
    level = 2.0
    loss = quadratic_form_loss(np.diag(lam))
    half = math.sqrt(level / lam.min())
    box = BoxDomain(lo=[-half, -half], hi=[half, half])
    y_obs = np.array([math.sqrt(level), 0.0])  # sits exactly on the level set
    est = mc_volume(loss, y_obs, box, n_samples=200_000, seed=5)
    closed = math.exp(ellipsoid_volume(lam, 0.0, level))
    assert abs(est.estimate - closed) <= 3.0 * est.stderr


def test_loss_rank_exp_matches_mc_volume():
    # with the v_n term included, exp(LR at alpha) is the literal volume
    # of the alpha-regularised loss ellipsoid at the observed level
    m, y, alpha = MEAN2, Y2, 0.5
    cache = spectral_cache(m, y)
    lr = loss_rank_at_alpha(cache, alpha, include_vn=True)
    s_alpha = (np.eye(2) - m).T @ (np.eye(2) - m) + alpha * np.eye(2)
    loss = quadratic_form_loss(s_alpha)
    level = float(y @ s_alpha @ y)
    half = math.sqrt(level / np.linalg.eigvalsh(s_alpha).min())
    box = BoxDomain(lo=[-half, -half], hi=[half, half])
    est = mc_volume(loss, y, box, n_samples=400_000, seed=11)
    assert abs(math.exp(lr) - est.estimate) <= 3.0 * est.stderr

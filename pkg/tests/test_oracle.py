import math

import numpy as np
import pytest

from lorp.demos import simple_continuous, simple_discrete
from lorp.exceptions import (
    EnumerationBudgetError,
    IndeterminateRatioError,
    InvalidInputError,
)
from lorp.oracle import (
    BoxDomain,
    LossFunction,
    exact_rank,
    grid_rank,
    hat_matrix_loss,
    mc_volume,
    mc_volume_ratio,
    quadratic_form_loss,
)

DISK = quadratic_form_loss(np.eye(2), name="disk")
UNIT_BOX2 = BoxDomain.cube(-1.0, 1.0, 2)


def test_discrete_demo_exact_ranks():
    demo = simple_discrete()
    ranks = [exact_rank(demo.losses[d], demo.y, demo.values) for d in (0, 1, 2)]
    assert ranks == [8, 7, 9]


def test_exact_rank_counts_ties_inclusively():
    # y' and its mirror share the loss level, both must count
    loss = quadratic_form_loss(np.eye(1))
    assert exact_rank(loss, [1.0], values=[-1.0, 0.0, 1.0, 2.0]) == 3


def test_exact_rank_chunking_consistent():
    # more points than one processing chunk; a trivial loss counts all
    loss = LossFunction(fn=lambda y: 0.0, name="flat", batch_fn=lambda p: np.zeros(p.shape[0]))
    assert exact_rank(loss, np.zeros(3), values=np.linspace(0, 1, 60)) == 60**3


def test_exact_rank_budget():
    with pytest.raises(EnumerationBudgetError):
        exact_rank(DISK, np.zeros(2), values=np.linspace(0, 1, 4000))


def test_exact_rank_errors():
    with pytest.raises(InvalidInputError):
        exact_rank(DISK, np.zeros(2), values=[])
    with pytest.raises(InvalidInputError):
        exact_rank(DISK, np.zeros(2), values=[0.0, 1.0], n=3)


def test_grid_point_counts():
    flat = LossFunction(fn=lambda y: 0.0, name="flat", batch_fn=lambda p: np.zeros(p.shape[0]))
    box = BoxDomain(lo=[0.0], hi=[1.0])
    # divisible edge keeps both endpoints; non-divisible stops short
    assert grid_rank(flat, [0.0], box, eps=0.25).count == 5
    assert grid_rank(flat, [0.0], box, eps=0.3).count == 4
    res = grid_rank(flat, [0.0], box, eps=0.25)
    assert res.volume == pytest.approx(5 * 0.25)


def test_grid_demo_volumes_within_one_percent():
    demo = simple_continuous()
    for d, ref in demo.reference_volumes.items():
        res = grid_rank(demo.losses[d], demo.y, demo.box, eps=0.002)
        assert abs(res.volume - ref) <= 0.01 * ref


def test_mc_disk_area():
    est = mc_volume(DISK, np.array([1.0, 0.0]), UNIT_BOX2, n_samples=200_000, seed=0)
    assert abs(est.estimate - math.pi) <= 3.0 * est.stderr
    assert est.stderr < 0.02


def test_mc_determinism():
    a = mc_volume(DISK, np.array([1.0, 0.0]), UNIT_BOX2, n_samples=50_000, seed=123)
    b = mc_volume(DISK, np.array([1.0, 0.0]), UNIT_BOX2, n_samples=50_000, seed=123)
    assert a.estimate == b.estimate and a.hits == b.hits
    c = mc_volume(DISK, np.array([1.0, 0.0]), UNIT_BOX2, n_samples=50_000, seed=124)
    assert c.hits != a.hits


def test_mc_mean_over_seeds_near_truth():
    # 50 independent runs: the average should sit well inside the pooled error
    runs = [
        mc_volume(DISK, np.array([1.0, 0.0]), UNIT_BOX2, n_samples=20_000, seed=s)
        for s in range(50)
    ]
    mean = float(np.mean([r.estimate for r in runs]))
    pooled = float(np.mean([r.stderr for r in runs])) / math.sqrt(50)
    assert abs(mean - math.pi) <= 4.0 * pooled


def test_mc_zero_hits_flagged():
    # level 0 around an interior point: a measure-zero target, no error
    shifted = LossFunction(
        fn=lambda y: float(np.sum((y - 0.3) ** 2)),
        name="point",
        batch_fn=lambda p: np.sum((p - 0.3) ** 2, axis=1),
    )
    est = mc_volume(shifted, np.array([0.3, 0.3]), UNIT_BOX2, n_samples=5_000, seed=0)
    assert est.zero_hits and est.estimate == 0.0 and est.hits == 0


def test_mc_validation():
    with pytest.raises(InvalidInputError):
        mc_volume(DISK, np.array([1.0, 0.0]), UNIT_BOX2, n_samples=10)
    with pytest.raises(InvalidInputError):
        mc_volume(DISK, np.array([1.0, 0.0, 0.0]), UNIT_BOX2)


def test_mc_demo_volumes():
    demo = simple_continuous()
    for d, ref in demo.reference_volumes.items():
        est = mc_volume(demo.losses[d], demo.y, demo.box, n_samples=300_000, seed=7)
        tol = 3.0 * est.stderr if est.stderr > 0 else 1e-12
        assert abs(est.estimate - ref) <= tol


def test_ratio_of_nested_disks():
    # disks of radius 1 and 1/2: the area ratio is exactly 4
    res = mc_volume_ratio(DISK, DISK, 1.0, 0.25, UNIT_BOX2, n_samples=200_000, seed=2)
    assert abs(res.ratio - 4.0) <= 3.0 * res.stderr
    assert res.log_ratio == pytest.approx(math.log(res.ratio))
    assert res.frac_b_in_a == 1.0  # the small disk sits inside the big one


def test_ratio_indeterminate_when_disjoint():
    far = LossFunction(
        fn=lambda y: float(np.sum((y - 3.0) ** 2)),
        name="far",
        batch_fn=lambda p: np.sum((p - 3.0) ** 2, axis=1),
    )
    with pytest.raises(IndeterminateRatioError):
        mc_volume_ratio(DISK, far, 0.25, 0.1, UNIT_BOX2, n_samples=10_000, seed=0)


def test_hat_matrix_loss_forms():
    m = np.full((2, 2), 0.5)
    y = np.array([1.0, 2.0])
    s0 = (np.eye(2) - m).T @ (np.eye(2) - m)
    resp = hat_matrix_loss(m, alpha=0.3)
    est = hat_matrix_loss(m, alpha=0.3, penalty="estimate")
    assert resp(y) == pytest.approx(float(y @ (s0 + 0.3 * np.eye(2)) @ y))
    assert est(y) == pytest.approx(float(y @ (s0 + 0.3 * m.T @ m) @ y))


def test_loss_batch_fallback_matches_scalar():
    plain = LossFunction(fn=lambda y: float(np.sum(y**4)), name="quartic")
    pts = np.random.default_rng(0).normal(size=(40, 2))
    np.testing.assert_allclose(plain.batch(pts), [plain(p) for p in pts])


def test_box_domain():
    box = BoxDomain.around_y([1.0, 3.0])
    assert box.lo[0] == pytest.approx(1.0 - 3.0 * 2.0)
    assert box.hi[0] == pytest.approx(3.0 + 3.0 * 2.0)
    flatbox = BoxDomain.around_y([2.0, 2.0])
    assert flatbox.hi[0] - flatbox.lo[0] == pytest.approx(2.0 * 3.0)
    assert UNIT_BOX2.volume() == pytest.approx(4.0)
    with pytest.raises(InvalidInputError):
        BoxDomain(lo=[0.0, 0.0], hi=[1.0, 0.0])

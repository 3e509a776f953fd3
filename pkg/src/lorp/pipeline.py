"""Selection runs, synthetic data, and oracle demos behind the service.

Every handler here takes a request model and returns a response model
from service.schemas; the FastAPI routes and the CLI are both thin
wrappers around these functions.
"""

from __future__ import annotations

import datetime
import math

import numpy as np

from . import __version__
from .baselines import aic_bic, bms_optimal_alpha, d_eff_trace
from .core import loss_rank
from .data import Dataset, gen_synthetic
from .demos import simple_continuous, simple_discrete
from .exceptions import (
    DataError,
    InvalidInputError,
    LorpError,
    NotAProjectionError,
    OutsideValidityError,
    PerfectFitError,
    SelectionError,
)
from .oracle import exact_rank, grid_rank, mc_volume
from .projective import projective_loss_rank
from .regressors import (
    gaussian_kernel_matrix,
    knn_matrix,
    knn_prime_matrix,
    polynomial_design,
    polynomial_matrix,
)
from .service.schemas import (
    CandidateOut,
    CurveOut,
    CurvePoint,
    DatasetOut,
    OracleExactRequest,
    OracleExactResponse,
    OracleGridEntry,
    OracleGridRequest,
    OracleGridResponse,
    OracleMCEntry,
    OracleMCRequest,
    OracleMCResponse,
    OracleRankEntry,
    SelectionReport,
    SelectRequest,
    SynthRequest,
    SynthResponse,
    WinnersOut,
)

PARAM_NAMES = {"knn": "k", "knnprime": "k", "poly": "d", "kernel": "sigma"}


def _as_int(value: float, name: str) -> int:
    iv = int(round(value))
    if abs(value - iv) > 1e-9:
        raise InvalidInputError(f"{name} must be an integer, got {value}")
    return iv


def _build_hat(family: str, value: float, ds: Dataset):
    if family == "knn":
        return knn_matrix(ds.x, _as_int(value, "k"))
    if family == "knnprime":
        return knn_prime_matrix(ds.x, _as_int(value, "k"))
    if family == "kernel":
        return gaussian_kernel_matrix(ds.x, float(value))
    if family == "poly":
        if ds.m != 1:
            raise InvalidInputError("poly family needs a single covariate column")
        return polynomial_matrix(ds.x[:, 0], _as_int(value, "d"))
    raise InvalidInputError(f"unknown family {family!r}")


def _score_candidate(family: str, value: float, ds: Dataset, opts, baselines: set[str]) -> CandidateOut:
    param_name = PARAM_NAMES[family]
    base = dict(family=family, label=f"{family}({param_name}={value:g})", params={param_name: value})
    try:
        hat = _build_hat(family, value, ds)
    except LorpError as exc:
        return CandidateOut(**base, ok=False, failure=f"{type(exc).__name__}: {exc}")
    base["label"] = hat.spec.label()
    base["params"] = hat.spec.params()

    notes: list[str] = []
    fields: dict = {}
    scored = False
    if family == "poly" and opts.penalty == "response" and not opts.filter_generic:
        try:
            pres = projective_loss_rank(hat, ds.y)
            # the closed form optimizes alpha freely; honor a user-restricted
            # range by falling back to the bounded numeric search
            if not (opts.alpha_lo <= pres.alpha_min <= opts.alpha_hi):
                notes.append("closed-form alpha outside the search range; numeric fallback")
            else:
                y_sq = float(ds.y @ ds.y)
                fields = dict(
                    method="projective",
                    lr=pres.lr,
                    alpha_star=pres.alpha_min,
                    kl=pres.kl,
                    loss_at_alpha=(pres.rho + pres.alpha_min) * y_sq,
                    logdet_at_alpha=pres.d * math.log(pres.alpha_min)
                    + (ds.n - pres.d) * math.log1p(pres.alpha_min),
                )
                scored = True
        except (NotAProjectionError, OutsideValidityError, PerfectFitError) as exc:
            notes.append(f"closed form unavailable ({type(exc).__name__}); numeric fallback")
        except LorpError as exc:
            return CandidateOut(**base, ok=False, failure=f"{type(exc).__name__}: {exc}", notes=notes)
    if not scored:
        try:
            res = loss_rank(
                hat,
                ds.y,
                penalty=opts.penalty,
                filter_generic=opts.filter_generic,
                alpha_lo=opts.alpha_lo,
                alpha_hi=opts.alpha_hi,
                rel_tol=opts.rel_tol,
                grid_points=opts.grid_points,
                include_vn=opts.include_vn,
            )
            fields = dict(
                method="numeric",
                lr=res.lr,
                alpha_star=res.alpha_star,
                flat_objective=res.flat_objective,
                at_lower_bound=res.at_lower_bound,
                at_upper_bound=res.at_upper_bound,
                loss_at_alpha=res.loss_at_alpha,
                logdet_at_alpha=res.logdet_at_alpha,
            )
        except LorpError as exc:
            return CandidateOut(**base, ok=False, failure=f"{type(exc).__name__}: {exc}", notes=notes)

    resid = ds.y - hat.m @ ds.y
    rss = float(resid @ resid)
    if family == "poly":
        d_eff, d_eff_kind = float(hat.info.get("rank", 0)), "rank"
    else:
        d_eff, d_eff_kind = d_eff_trace(hat), "trace"
        if "aic" in baselines or "bic" in baselines:
            notes.append("aic/bic use the effective (trace) dimension")
    fields.update(rss=rss, d_eff=d_eff, d_eff_kind=d_eff_kind)

    if "aic" in baselines or "bic" in baselines:
        try:
            aic, bic = aic_bic(rss, d_eff, ds.n)
            if "aic" in baselines:
                fields["aic"] = aic
            if "bic" in baselines:
                fields["bic"] = bic
        except PerfectFitError:
            fields["perfect_fit"] = True
            notes.append("rss = 0: aic/bic unbounded below")
    if "bms" in baselines:
        if family == "poly":
            try:
                opt = bms_optimal_alpha(polynomial_design(ds.x[:, 0], _as_int(value, "d")), ds.y)
                fields["bms"] = opt.lr
            except LorpError as exc:
                notes.append(f"bms unavailable: {type(exc).__name__}")
        else:
            notes.append("bms defined for basis regressions only")
    if "trace" in baselines and d_eff_kind == "rank":
        notes.append(f"trace d_eff = {d_eff_trace(hat):.6g}")

    return CandidateOut(**base, ok=True, notes=notes, **fields)


def _argmin(pairs: list[tuple[int, float]]) -> int | None:
    best_i, best_v = None, math.inf
    for i, v in pairs:
        if v < best_v:
            best_i, best_v = i, v
    return best_i


def _winners(records: list[CandidateOut], baselines: set[str]) -> WinnersOut:
    lorp = _argmin([(i, r.lr) for i, r in enumerate(records) if r.ok and r.lr is not None])
    if lorp is None:
        raise SelectionError(
            "all candidates failed: " + "; ".join(r.failure or "?" for r in records if not r.ok)
        )
    out = WinnersOut(lorp=lorp)
    if "aic" in baselines:
        out.aic = _argmin(
            [
                (i, -math.inf if r.perfect_fit else r.aic)
                for i, r in enumerate(records)
                if r.ok and (r.aic is not None or r.perfect_fit)
            ]
        )
    if "bic" in baselines:
        out.bic = _argmin(
            [
                (i, -math.inf if r.perfect_fit else r.bic)
                for i, r in enumerate(records)
                if r.ok and (r.bic is not None or r.perfect_fit)
            ]
        )
    if "bms" in baselines:
        out.bms = _argmin([(i, r.bms) for i, r in enumerate(records) if r.ok and r.bms is not None])
    return out


def _curves(req: SelectRequest, records: list[CandidateOut]) -> list[CurveOut]:
    curves = []
    pos = 0
    for sweep in req.families:
        points = []
        for value in sweep.values:
            r = records[pos]
            pos += 1
            points.append(
                CurvePoint(param=float(value), lr=r.lr, aic=r.aic, bic=r.bic, bms=r.bms, d_eff=r.d_eff)
            )
        curves.append(CurveOut(family=sweep.family, param_name=PARAM_NAMES[sweep.family], points=points))
    return curves


def _dataset_from(req: SelectRequest) -> Dataset:
    try:
        return Dataset(
            np.array(req.data.x, dtype=float),
            np.array(req.data.y, dtype=float),
            x_names=tuple(req.data.x_names or ()),
            y_name=req.data.y_name,
        )
    except (InvalidInputError, ValueError) as exc:
        raise DataError(f"bad inline dataset: {exc}") from exc


def run_selection(req: SelectRequest) -> SelectionReport:
    """Score every candidate in the request and assemble the report.

    Individual candidate failures are recorded, not fatal; the run only
    raises when no candidate at all could be scored (SelectionError) or
    the dataset itself is unusable (DataError).
    """
    ds = _dataset_from(req)
    baselines = set(req.baselines)
    records = []
    for sweep in req.families:
        for value in sweep.values:
            records.append(_score_candidate(sweep.family, value, ds, req.options, baselines))
    winners = _winners(records, baselines)
    return SelectionReport(
        version=__version__,
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        dataset=DatasetOut(n=ds.n, m=ds.m, sha256=ds.sha256()),
        config=req,
        candidates=records,
        winners=winners,
        curves=_curves(req, records),
    )


def run_synth(req: SynthRequest) -> SynthResponse:
    ds = gen_synthetic(
        req.kind,
        req.n,
        req.noise_sd,
        req.seed,
        coeffs=req.coeffs,
        freq=req.freq,
        x_lo=req.x_lo,
        x_hi=req.x_hi,
    )
    return SynthResponse(
        x=[float(v) for v in ds.x[:, 0]],
        y=[float(v) for v in ds.y],
        columns=list(ds.x_names) + [ds.y_name],
    )


def _selected(entries: dict[str, float]) -> str:
    return min(sorted(entries), key=lambda k: entries[k])


def run_oracle_exact(req: OracleExactRequest) -> OracleExactResponse:
    demo = simple_discrete()
    entries = {}
    for d in sorted(demo.losses):
        loss = demo.losses[d]
        rank = exact_rank(loss, demo.y, demo.values, budget=req.budget)
        entries[f"d{d}"] = OracleRankEntry(rank=rank, level=loss(demo.y))
    return OracleExactResponse(
        example=req.example,
        total_points=int(demo.values.size ** demo.y.size),
        entries=entries,
        selected=_selected({k: float(v.rank) for k, v in entries.items()}),
    )


def run_oracle_grid(req: OracleGridRequest) -> OracleGridResponse:
    demo = simple_continuous()
    ds_keys = [req.d] if req.d is not None else sorted(demo.losses)
    entries = {}
    for d in ds_keys:
        res = grid_rank(demo.losses[d], demo.y, demo.box, req.eps, budget=req.budget)
        entries[f"d{d}"] = OracleGridEntry(
            count=res.count, volume=res.volume, level=res.level, reference=demo.reference_volumes[d]
        )
    return OracleGridResponse(
        example=req.example,
        eps=req.eps,
        entries=entries,
        selected=_selected({k: v.volume for k, v in entries.items()}),
    )


def run_oracle_mc(req: OracleMCRequest) -> OracleMCResponse:
    demo = simple_continuous()
    ds_keys = [req.d] if req.d is not None else sorted(demo.losses)
    entries = {}
    for d in ds_keys:
        res = mc_volume(demo.losses[d], demo.y, demo.box, n_samples=req.samples, seed=req.seed)
        entries[f"d{d}"] = OracleMCEntry(
            estimate=res.estimate,
            stderr=res.stderr,
            hits=res.hits,
            level=res.level,
            reference=demo.reference_volumes[d],
        )
    return OracleMCResponse(
        example=req.example,
        samples=req.samples,
        seed=req.seed,
        entries=entries,
        selected=_selected({k: v.estimate for k, v in entries.items()}),
    )

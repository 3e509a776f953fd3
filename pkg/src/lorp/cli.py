"""Batch front end: ``lorp select | synth | oracle | serve``.

By default every command runs in process.  Pass ``--server URL`` to
send the same request to a running service instead; the JSON on the
wire is identical to what the in-process path produces.

Exit codes: 0 success, 1 usage error, 2 data error, 3 every candidate
failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

import httpx
import numpy as np
from pydantic import BaseModel, ValidationError

from . import __version__
from .core import DEFAULT_ALPHA_HI, DEFAULT_ALPHA_LO
from .data import Dataset, load_csv, write_csv
from .exceptions import DataError, InvalidInputError, LorpError, SelectionError
from .pipeline import (
    PARAM_NAMES,
    run_oracle_exact,
    run_oracle_grid,
    run_oracle_mc,
    run_selection,
    run_synth,
)
from .service.schemas import (
    DataIn,
    OptionsIn,
    OracleExactRequest,
    OracleGridRequest,
    OracleMCRequest,
    SelectRequest,
    SweepIn,
    SynthRequest,
)

_BASELINE_NAMES = ("aic", "bic", "bms", "trace")
_SERVER_TIMEOUT = 300.0


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract here is 1.
    def error(self, message: str):
        raise _UsageError(message)


def _num(token: str, context: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise _UsageError(f"bad number {token!r} in {context!r}") from None


def _int_like(value: float, context: str) -> int:
    iv = int(round(value))
    if abs(value - iv) > 1e-9:
        raise _UsageError(f"expected an integer, got {value:g} in {context!r}")
    return iv


def _parse_values(family: str, spec: str, context: str) -> list[float]:
    if "," in spec:
        values = [_num(tok, context) for tok in spec.split(",") if tok.strip()]
        if not values:
            raise _UsageError(f"empty value list in {context!r}")
        return values
    if ".." in spec:
        lo_s, _, rest = spec.partition("..")
        hi_s, _, step_s = rest.partition(":")
        lo, hi = _num(lo_s, context), _num(hi_s, context)
        if hi < lo:
            raise _UsageError(f"range end below start in {context!r}")
        if family == "kernel":
            # sigma sweeps are geometric; the optional suffix is a point count
            count = _int_like(_num(step_s, context), context) if step_s else 12
            if lo <= 0 or count < 1:
                raise _UsageError(f"sigma range needs lo > 0 and count >= 1 in {context!r}")
            return [float(v) for v in np.geomspace(lo, hi, count)]
        step = _int_like(_num(step_s, context), context) if step_s else 1
        if step < 1:
            raise _UsageError(f"step must be >= 1 in {context!r}")
        return [float(v) for v in range(_int_like(lo, context), _int_like(hi, context) + 1, step)]
    return [_num(spec, context)]


def _parse_sweep(text: str) -> SweepIn:
    head, sep, spec = text.partition("=")
    family, sep2, param = head.partition(":")
    if not sep or not sep2:
        raise _UsageError(f"bad sweep {text!r}: expected family:param=values")
    if family not in PARAM_NAMES:
        raise _UsageError(f"unknown family {family!r}; choose from {sorted(PARAM_NAMES)}")
    if param != PARAM_NAMES[family]:
        raise _UsageError(f"family {family!r} sweeps parameter {PARAM_NAMES[family]!r}, not {param!r}")
    return SweepIn(family=family, values=_parse_values(family, spec, text))


def _parse_alpha(text: str) -> tuple[float, float]:
    if text == "auto":
        return DEFAULT_ALPHA_LO, DEFAULT_ALPHA_HI
    if ".." in text:
        lo_s, _, hi_s = text.partition("..")
        lo, hi = _num(lo_s, text), _num(hi_s, text)
    else:
        lo = hi = _num(text, text)
    if not 0 < lo <= hi:
        raise _UsageError(f"alpha bounds must satisfy 0 < lo <= hi, got {text!r}")
    return lo, hi


def _parse_baselines(text: str) -> list[str]:
    if text.strip() in ("", "none"):
        return []
    names = []
    for tok in text.split(","):
        name = tok.strip()
        if name not in _BASELINE_NAMES:
            raise _UsageError(f"unknown baseline {name!r}; choose from {_BASELINE_NAMES}")
        if name not in names:
            names.append(name)
    return names


def _post(server: str, path: str, req: BaseModel) -> dict:
    url = server.rstrip("/") + path
    resp = httpx.post(url, json=req.model_dump(mode="json", by_alias=True), timeout=_SERVER_TIMEOUT)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail")
        except ValueError:
            detail = None
        if isinstance(detail, dict) and "kind" in detail:
            kind, message = detail["kind"], detail.get("message", "")
            if kind == "selection":
                raise SelectionError(message)
            if kind == "data":
                raise DataError(message)
            raise InvalidInputError(message)
        raise _UsageError(f"server rejected request ({resp.status_code}): {detail or resp.text[:200]}")
    return resp.json()


def _csv_cell(value) -> str:
    return "" if value is None else repr(float(value))


def _write_curves(payload: dict, out_path: Path) -> list[Path]:
    stem = out_path.name.removesuffix(out_path.suffix) if out_path.suffix else out_path.name
    seen: dict[str, int] = {}
    paths = []
    for curve in payload.get("curves", []):
        family = curve["family"]
        seen[family] = seen.get(family, 0) + 1
        tag = family if seen[family] == 1 else f"{family}{seen[family]}"
        path = out_path.parent / f"{stem}.curve_{tag}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([curve["param_name"], "lr", "aic", "bic", "bms", "d_eff"])
            for pt in curve["points"]:
                writer.writerow(
                    [_csv_cell(pt[col]) for col in ("param", "lr", "aic", "bic", "bms", "d_eff")]
                )
        paths.append(path)
    return paths


def _cmd_select(args) -> int:
    sweeps = [_parse_sweep(text) for text in args.family]
    alpha_lo, alpha_hi = _parse_alpha(args.alpha)
    ds = load_csv(args.data, args.target)
    req = SelectRequest(
        data=DataIn(
            x=[[float(v) for v in row] for row in ds.x],
            y=[float(v) for v in ds.y],
            x_names=list(ds.x_names),
            y_name=ds.y_name,
        ),
        families=sweeps,
        options=OptionsIn(
            penalty=args.penalty,
            filter_generic=args.filter_generic,
            alpha_lo=alpha_lo,
            alpha_hi=alpha_hi,
            rel_tol=args.rel_tol,
            grid_points=args.grid_points,
            include_vn=args.include_vn,
        ),
        baselines=_parse_baselines(args.baselines),
        seed=args.seed,
    )
    if args.server:
        payload = _post(args.server, "/select", req)
        text = json.dumps(payload, indent=2)
    else:
        report = run_selection(req)
        text = report.model_dump_json(by_alias=True, indent=2)
        payload = json.loads(text)
    if args.out:
        out_path = Path(args.out)
        out_path.write_text(text + "\n", encoding="utf-8")
        curve_paths = _write_curves(payload, out_path)
        best = payload["candidates"][payload["winners"]["lorp"]]
        print(f"winner (lorp): {best['label']}  lr={best['lr']:.6f}")
        print(f"report: {out_path}")
        for p in curve_paths:
            print(f"curve: {p}")
    else:
        print(text)
    return 0


def _cmd_synth(args) -> int:
    coeffs = None
    if args.coeffs is not None:
        coeffs = [_num(tok, args.coeffs) for tok in args.coeffs.split(",") if tok.strip()]
    req = SynthRequest(
        kind=args.kind,
        coeffs=coeffs,
        freq=args.freq,
        n=args.n,
        noise_sd=args.noise,
        x_lo=args.x_lo,
        x_hi=args.x_hi,
        seed=args.seed,
    )
    if args.server:
        payload = _post(args.server, "/synth", req)
        cols, xs, ys = payload["columns"], payload["x"], payload["y"]
    else:
        resp = run_synth(req)
        cols, xs, ys = resp.columns, resp.x, resp.y
    ds = Dataset(np.asarray(xs, dtype=float)[:, None], np.asarray(ys, dtype=float),
                 x_names=tuple(cols[:-1]), y_name=cols[-1])
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_csv(ds, fh)
        print(f"wrote {ds.n} rows to {args.out}")
    else:
        write_csv(ds, sys.stdout)
    return 0


def _cmd_oracle(args) -> int:
    if args.oracle_cmd == "exact-rank":
        req: BaseModel = OracleExactRequest(example=args.example, budget=args.budget)
        path, fn = "/oracle/exact-rank", run_oracle_exact
    elif args.oracle_cmd == "grid-rank":
        req = OracleGridRequest(example=args.example, d=args.d, eps=args.eps, budget=args.budget)
        path, fn = "/oracle/grid-rank", run_oracle_grid
    else:
        req = OracleMCRequest(example=args.example, d=args.d, samples=args.samples, seed=args.seed)
        path, fn = "/oracle/mc-volume", run_oracle_mc
    if args.server:
        print(json.dumps(_post(args.server, path, req), indent=2))
    else:
        print(fn(req).model_dump_json(indent=2))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="lorp", description="Loss-rank model selection.")
    parser.add_argument("--version", action="version", version=f"lorp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="score a family sweep on a CSV dataset")
    sel.add_argument("--data", required=True, help="CSV file with a header row")
    sel.add_argument("--target", default="y", help="response column name (default: y)")
    sel.add_argument(
        "--family",
        action="append",
        required=True,
        metavar="FAMILY:PARAM=VALUES",
        help="sweep, e.g. knn:k=1..20, poly:d=0..10, kernel:sigma=0.01..10 "
        "(sigma ranges are geometric; suffix :N sets step or point count)",
    )
    sel.add_argument("--alpha", default="auto", help="'auto', fixed value, or lo..hi bounds")
    sel.add_argument("--penalty", choices=("response", "estimate"), default="response")
    sel.add_argument("--filter-generic", action="store_true",
                     help="project out the constant direction before scoring")
    sel.add_argument("--rel-tol", type=float, default=1e-6)
    sel.add_argument("--grid-points", type=int, default=128)
    sel.add_argument("--include-vn", action="store_true",
                     help="include the unit-ball volume constant in lr")
    sel.add_argument("--baselines", default="aic,bic,trace",
                     help="comma list from aic,bic,bms,trace, or 'none'")
    sel.add_argument("--seed", type=int, default=0)
    sel.add_argument("--out", help="write the JSON report here plus one curve CSV per family")
    sel.add_argument("--server", help="POST to a running service instead of running in process")
    sel.set_defaults(run=_cmd_select)

    syn = sub.add_parser("synth", help="generate a synthetic dataset as CSV")
    syn.add_argument("--kind", choices=("poly", "sine"), required=True)
    syn.add_argument("--coeffs", help="polynomial coefficients, lowest order first, e.g. 1,0,2")
    syn.add_argument("--freq", type=float, help="sine frequency (cycles over the x range)")
    syn.add_argument("--n", type=int, default=50)
    syn.add_argument("--noise", type=float, default=0.1, help="noise standard deviation")
    syn.add_argument("--x-lo", type=float, default=0.0)
    syn.add_argument("--x-hi", type=float, default=1.0)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out", help="output CSV path (default: stdout)")
    syn.add_argument("--server", help="POST to a running service instead of running in process")
    syn.set_defaults(run=_cmd_synth)

    orc = sub.add_parser("oracle", help="run the built-in enumeration and volume demos")
    orc_sub = orc.add_subparsers(dest="oracle_cmd", required=True)

    exact = orc_sub.add_parser("exact-rank", help="exact rank over the discrete demo")
    exact.add_argument("--example", default="sd")
    exact.add_argument("--budget", type=int, default=10_000_000)
    exact.add_argument("--server")
    exact.set_defaults(run=_cmd_oracle)

    grid = orc_sub.add_parser("grid-rank", help="grid-counted loss volume on the box demo")
    grid.add_argument("--example", default="sc")
    grid.add_argument("--d", type=int, choices=(0, 1, 2), help="restrict to one regressor")
    grid.add_argument("--eps", type=float, default=1e-3)
    grid.add_argument("--budget", type=int, default=10_000_000)
    grid.add_argument("--server")
    grid.set_defaults(run=_cmd_oracle)

    mc = orc_sub.add_parser("mc-volume", help="Monte-Carlo loss volume on the box demo")
    mc.add_argument("--example", default="sc")
    mc.add_argument("--d", type=int, choices=(0, 1, 2), help="restrict to one regressor")
    mc.add_argument("--samples", type=int, default=200_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--server")
    mc.set_defaults(run=_cmd_oracle)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.set_defaults(run=_cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SelectionError as exc:
        print(f"selection failed: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except LorpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"server error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

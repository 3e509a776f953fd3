"""Request and response models shared by the HTTP service and the CLI.

The CLI builds these models and either dispatches them in-process or
POSTs them to a running service; either way the JSON report format is
defined here and nowhere else.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

SCHEMA_VERSION = 1

FamilyName = Literal["knn", "knnprime", "poly", "kernel"]
BaselineName = Literal["aic", "bic", "bms", "trace"]

DEFAULT_BASELINES: tuple[BaselineName, ...] = ("aic", "bic", "trace")


class DataIn(BaseModel):
    """Inline dataset: n covariate rows and n responses."""

    x: list[list[float]] = Field(min_length=2)
    y: list[float] = Field(min_length=2)
    x_names: list[str] | None = None
    y_name: str = "y"


class SweepIn(BaseModel):
    """One family with its explicit parameter grid (already expanded)."""

    family: FamilyName
    values: list[float] = Field(min_length=1)


class OptionsIn(BaseModel):
    penalty: Literal["response", "estimate"] = "response"
    filter_generic: bool = False
    alpha_lo: float = 1e-8
    alpha_hi: float = 1e6
    rel_tol: float = 1e-6
    grid_points: int = 128
    include_vn: bool = False


class SelectRequest(BaseModel):
    data: DataIn
    families: list[SweepIn] = Field(min_length=1)
    options: OptionsIn = OptionsIn()
    baselines: list[BaselineName] = Field(default_factory=lambda: list(DEFAULT_BASELINES))
    seed: int = 0


class CandidateOut(BaseModel):
    """Score record for one candidate; index in the list is its id."""

    family: str
    label: str
    params: dict[str, Any]
    ok: bool
    failure: str | None = None
    method: Literal["projective", "numeric"] | None = None
    lr: float | None = None
    alpha_star: float | None = None
    flat_objective: bool = False
    at_lower_bound: bool = False
    at_upper_bound: bool = False
    loss_at_alpha: float | None = None
    logdet_at_alpha: float | None = None
    kl: float | None = None
    d_eff: float | None = None
    d_eff_kind: Literal["rank", "trace"] | None = None
    rss: float | None = None
    aic: float | None = None
    bic: float | None = None
    bms: float | None = None
    perfect_fit: bool = False
    notes: list[str] = Field(default_factory=list)


class DatasetOut(BaseModel):
    n: int
    m: int
    sha256: str


class WinnersOut(BaseModel):
    """Winning candidate index per criterion; None when undefined."""

    lorp: int
    aic: int | None = None
    bic: int | None = None
    bms: int | None = None


class CurvePoint(BaseModel):
    param: float
    lr: float | None = None
    aic: float | None = None
    bic: float | None = None
    bms: float | None = None
    d_eff: float | None = None


class CurveOut(BaseModel):
    family: str
    param_name: str
    points: list[CurvePoint]


class SelectionReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=SCHEMA_VERSION, alias="schema")
    version: str
    timestamp: str
    dataset: DatasetOut
    config: SelectRequest
    candidates: list[CandidateOut]
    winners: WinnersOut
    curves: list[CurveOut]


class SynthRequest(BaseModel):
    kind: Literal["poly", "sine"]
    coeffs: list[float] | None = None
    freq: float | None = None
    n: int = 50
    noise_sd: float = 0.1
    x_lo: float = 0.0
    x_hi: float = 1.0
    seed: int = 0


class SynthResponse(BaseModel):
    x: list[float]
    y: list[float]
    columns: list[str] = Field(default_factory=lambda: ["x", "y"])


class OracleExactRequest(BaseModel):
    example: Literal["sd"] = "sd"
    budget: int = 10_000_000


class OracleRankEntry(BaseModel):
    rank: int
    level: float


class OracleExactResponse(BaseModel):
    example: str
    total_points: int
    entries: dict[str, OracleRankEntry]
    selected: str


class OracleGridRequest(BaseModel):
    example: Literal["sc"] = "sc"
    eps: float = 1e-3
    d: int | None = Field(default=None, ge=0, le=2)
    budget: int = 10_000_000


class OracleGridEntry(BaseModel):
    count: int
    volume: float
    level: float
    reference: float


class OracleGridResponse(BaseModel):
    example: str
    eps: float
    entries: dict[str, OracleGridEntry]
    selected: str


class OracleMCRequest(BaseModel):
    example: Literal["sc"] = "sc"
    samples: int = 200_000
    seed: int = 0
    d: int | None = Field(default=None, ge=0, le=2)


class OracleMCEntry(BaseModel):
    estimate: float
    stderr: float
    hits: int
    level: float
    reference: float


class OracleMCResponse(BaseModel):
    example: str
    samples: int
    seed: int
    entries: dict[str, OracleMCEntry]
    selected: str


class ErrorBody(BaseModel):
    """Uniform error payload so remote callers can map exit codes."""

    kind: str
    message: str

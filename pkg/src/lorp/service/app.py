"""HTTP face of the pipeline.

Errors cross the wire as ``{"detail": {"kind": ..., "message": ...}}``
so a client can recover the failure class without parsing prose:
``data`` for unusable input, ``selection`` when every candidate failed,
``invalid`` for anything else the library rejected.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..exceptions import DataError, LorpError, SelectionError
from .schemas import (
    ErrorBody,
    OracleExactRequest,
    OracleExactResponse,
    OracleGridRequest,
    OracleGridResponse,
    OracleMCRequest,
    OracleMCResponse,
    SelectionReport,
    SelectRequest,
    SynthRequest,
    SynthResponse,
)


def _http_error(exc: LorpError) -> HTTPException:
    if isinstance(exc, SelectionError):
        kind, status = "selection", 422
    elif isinstance(exc, DataError):
        kind, status = "data", 400
    else:
        kind, status = "invalid", 400
    return HTTPException(status_code=status, detail=ErrorBody(kind=kind, message=str(exc)).model_dump())


def create_app() -> FastAPI:
    # Deferred: pipeline pulls in our schemas at import time.
    from .. import pipeline

    app = FastAPI(title="lorp", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/select", response_model=SelectionReport, response_model_by_alias=True)
    def select(req: SelectRequest) -> SelectionReport:
        try:
            return pipeline.run_selection(req)
        except LorpError as exc:
            raise _http_error(exc) from exc

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest) -> SynthResponse:
        try:
            return pipeline.run_synth(req)
        except LorpError as exc:
            raise _http_error(exc) from exc

    @app.post("/oracle/exact-rank", response_model=OracleExactResponse)
    def oracle_exact(req: OracleExactRequest) -> OracleExactResponse:
        try:
            return pipeline.run_oracle_exact(req)
        except LorpError as exc:
            raise _http_error(exc) from exc

    @app.post("/oracle/grid-rank", response_model=OracleGridResponse)
    def oracle_grid(req: OracleGridRequest) -> OracleGridResponse:
        try:
            return pipeline.run_oracle_grid(req)
        except LorpError as exc:
            raise _http_error(exc) from exc

    @app.post("/oracle/mc-volume", response_model=OracleMCResponse)
    def oracle_mc(req: OracleMCRequest) -> OracleMCResponse:
        try:
            return pipeline.run_oracle_mc(req)
        except LorpError as exc:
            raise _http_error(exc) from exc

    return app

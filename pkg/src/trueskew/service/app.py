"""HTTP facade over the p-mean/skewness library.

Compute endpoints are POST with JSON bodies mirroring the CLI commands;
all computation is pure and stateless, so the service scales by simple
replication.  Input problems map to 400, numeric failures to 500.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..distributions import FAMILIES
from ..errors import (BracketError, CurveError, DomainError, IntegrandError,
                      OptimizationError, ParameterError, ParseError,
                      QuadratureAccuracyError, TrueSkewError, UnreliableResultError)
from . import handlers
from .models import (CounterexampleRequest, CounterexampleResponse, CurveRequest,
                     CurveResponse, HealthResponse, MvsnRequest, MvsnResponse,
                     VerdictRequest, VerdictResponse)

_INPUT_ERRORS = (ParseError, ParameterError, DomainError)
_COMPUTE_ERRORS = (BracketError, CurveError, IntegrandError, OptimizationError,
                   QuadratureAccuracyError, UnreliableResultError)


def create_app() -> FastAPI:
    app = FastAPI(
        title="trueskew",
        version=__version__,
        description="Frechet p-mean curves and algorithmic skewness certification",
    )

    def _guard(fn, req):
        try:
            return fn(req)
        except _INPUT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except _COMPUTE_ERRORS as exc:
            raise HTTPException(status_code=500,
                                detail=f"computation failed: {exc}") from exc
        except TrueSkewError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__,
                              families=sorted(FAMILIES))

    @app.post("/v1/curve", response_model=CurveResponse)
    def curve(req: CurveRequest) -> CurveResponse:
        return _guard(handlers.run_curve, req)

    @app.post("/v1/verdict", response_model=VerdictResponse)
    def verdict(req: VerdictRequest) -> VerdictResponse:
        return _guard(handlers.run_verdict, req)

    @app.post("/v1/counterexample", response_model=CounterexampleResponse)
    def counterexample(req: CounterexampleRequest) -> CounterexampleResponse:
        return _guard(handlers.run_counterexample, req)

    @app.post("/v1/mvsn", response_model=MvsnResponse)
    def mvsn_trajectory(req: MvsnRequest) -> MvsnResponse:
        return _guard(handlers.run_mvsn, req)

    return app


app = create_app()

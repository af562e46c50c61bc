"""FastAPI service exposing every experiment as a POST endpoint.

The CLI is a thin client of this app (in-process by default, remote with
--server). Worker count is a query parameter so it can never enter the
request body echoed into config.echo.json: results are byte-identical for
any value.

Error statuses: 400 usage (including request validation), 422 model-domain
or estimation failures, 413 resource guards, 500 anything else.
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import runner
from ..errors import SdelabError
from ..models import BUILTIN_CONTROLS, BUILTIN_MODELS
from .schemas import (
    CheckRequest,
    ConfluenceRequest,
    ConvergeRequest,
    EvalTestFnRequest,
    MomentsRequest,
    MonotoneRequest,
    RunArtifacts,
    SimulateRequest,
    StrongErrorRequest,
)

_STATUS = {"usage": 400, "model_domain": 422, "resource": 413,
           "estimation": 422, "quadrature": 422}


def create_app() -> FastAPI:
    app = FastAPI(title="sdelab service", version="0.1.0")

    @app.exception_handler(SdelabError)
    async def _domain_error(request: Request, exc: SdelabError) -> JSONResponse:
        return JSONResponse(
            status_code=_STATUS.get(exc.kind, 500),
            content={"detail": {"kind": exc.kind, "message": str(exc)}},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        msgs = "; ".join(
            f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors()
        )
        return JSONResponse(
            status_code=400,
            content={"detail": {"kind": "usage", "message": msgs}},
        )

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/v1/models")
    def list_models() -> dict:
        return {"models": sorted(BUILTIN_MODELS),
                "controls": sorted(BUILTIN_CONTROLS)}

    workers_q = Query(default=1, ge=1, le=64)

    @app.post("/v1/simulate", response_model=RunArtifacts)
    def simulate(req: SimulateRequest, workers: int = workers_q) -> RunArtifacts:
        return runner.run_simulate(req, workers)

    @app.post("/v1/check", response_model=RunArtifacts)
    def check(req: CheckRequest, workers: int = workers_q) -> RunArtifacts:
        return runner.run_check(req, workers)

    @app.post("/v1/moments", response_model=RunArtifacts)
    def moments(req: MomentsRequest, workers: int = workers_q) -> RunArtifacts:
        return runner.run_moments(req, workers)

    @app.post("/v1/confluence", response_model=RunArtifacts)
    def confluence(req: ConfluenceRequest, workers: int = workers_q) -> RunArtifacts:
        return runner.run_confluence(req, workers)

    @app.post("/v1/monotone", response_model=RunArtifacts)
    def monotone(req: MonotoneRequest, workers: int = workers_q) -> RunArtifacts:
        return runner.run_monotone(req, workers)

    @app.post("/v1/converge", response_model=RunArtifacts)
    def converge(req: ConvergeRequest, workers: int = workers_q) -> RunArtifacts:
        return runner.run_converge(req, workers)

    @app.post("/v1/strong-error", response_model=RunArtifacts)
    def strong_error(req: StrongErrorRequest, workers: int = workers_q) -> RunArtifacts:
        return runner.run_strong_error(req, workers)

    @app.post("/v1/eval-test-fn", response_model=RunArtifacts)
    def eval_test_fn(req: EvalTestFnRequest, workers: int = workers_q) -> RunArtifacts:
        return runner.run_eval_test_fn(req, workers)

    return app


app = create_app()

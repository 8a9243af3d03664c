"""FastAPI service wrapping the optimizer.

The handlers are plain functions so the CLI can call them in-process; the
HTTP layer is a thin routing shell around them. Solves are stateless and
reentrant, so concurrent requests are safe.
"""
from __future__ import annotations

import logging

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..baselines import BASELINES
from ..errors import SecrecyOptError, SolverFailure, ValidationError
from ..oracle import evaluate_design
from ..power_min import full_pipeline
from ..sim import run_sweep
from ..srm import SearchOptions, solve_srm
from .models import (
    EvaluateRequest,
    EvaluateResponse,
    EveReportModel,
    SimulateRequest,
    SimulateResponse,
    SolveRequest,
    SolveResponse,
    _np_to_vec,
)

logger = logging.getLogger(__name__)


def handle_solve(req: SolveRequest) -> SolveResponse:
    instance = req.instance.to_instance()
    options = SearchOptions(grid=req.grid, exhaustive=req.exhaustive)
    result = full_pipeline(instance, options) if req.extract_beam else solve_srm(instance, options)
    return SolveResponse.from_result(result)


def handle_evaluate(req: EvaluateRequest) -> EvaluateResponse:
    instance = req.instance.to_instance()
    if req.baseline is not None:
        design = BASELINES[req.baseline](instance)
    else:
        design = req.design.to_design()
    rate, reports = evaluate_design(instance, design)
    return EvaluateResponse(
        rate=rate,
        per_eve=[
            EveReportModel(
                k=r.k,
                worst_ratio=r.worst_ratio,
                worst_g=_np_to_vec(r.worst_g),
                bob_term=r.bob_term,
                secrecy_term=r.secrecy_term,
            )
            for r in reports
        ],
    )


def handle_simulate(req: SimulateRequest) -> SimulateResponse:
    return SimulateResponse.from_result(run_sweep(req.config.to_config()))


def create_app() -> FastAPI:
    app = FastAPI(
        title="secrecy-opt",
        version=__version__,
        description=(
            "Worst-case secrecy-rate-optimal transmit covariance design "
            "with artificial noise, under ball-bounded eavesdropper "
            "channel uncertainty."
        ),
    )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest):
        return _run(handle_solve, req)

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest):
        return _run(handle_evaluate, req)

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        return _run(handle_simulate, req)

    return app


def _run(handler, req):
    try:
        return handler(req)
    except ValidationError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e
    except SolverFailure as e:
        raise HTTPException(status_code=502, detail=f"solver failure: {e}") from e
    except SecrecyOptError as e:
        raise HTTPException(status_code=422, detail=str(e)) from e


app = create_app()

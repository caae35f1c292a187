"""HTTP face of the simulator.

Run with:  uvicorn reduction_machine.api:app

Every endpoint is stateless; determinism lives entirely in the request
(config + program + seed), so identical requests return identical bodies.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .config import RunConfig
from .errors import AssemblyError, ReductionMachineError
from .service import handlers, models

app = FastAPI(
    title="reduction-machine",
    version=__version__,
    description=(
        "Assembles, runs and measures programs on a toy stored-program "
        "machine whose pins register bits through a measurement-style "
        "state reduction."
    ),
)


@app.exception_handler(ReductionMachineError)
async def domain_error_handler(request: Request, exc: ReductionMachineError):
    detail = models.ErrorDetail(error=str(exc), kind=type(exc).__name__)
    if isinstance(exc, AssemblyError):
        detail.kind = exc.kind
        detail.line = exc.line
        detail.column = exc.column
    return JSONResponse(status_code=422, content={"detail": detail.model_dump()})


@app.get("/healthz")
async def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/config/default", response_model=RunConfig)
async def default_config() -> RunConfig:
    return RunConfig()


@app.post("/assemble", response_model=models.AssembleResponse)
async def assemble(req: models.AssembleRequest) -> models.AssembleResponse:
    return handlers.handle_assemble(req)


@app.post("/disassemble", response_model=models.DisassembleResponse)
async def disassemble(req: models.DisassembleRequest) -> models.DisassembleResponse:
    return handlers.handle_disassemble(req)


@app.post("/run", response_model=models.RunResponse)
async def run(req: models.RunRequest) -> models.RunResponse:
    return handlers.handle_run(req)


@app.post("/ensemble", response_model=models.EnsembleResponse)
async def ensemble(req: models.EnsembleRequest) -> models.EnsembleResponse:
    return handlers.handle_ensemble(req)


@app.post("/compare", response_model=models.CompareResponse)
async def compare(req: models.EnsembleRequest) -> models.CompareResponse:
    return handlers.handle_compare(req)


@app.post("/physics", response_model=models.PhysicsResponse)
async def physics(req: models.PhysicsRequest) -> models.PhysicsResponse:
    return handlers.handle_physics(req)

"""The FastAPI application wrapping the pipeline."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import NumericalError, ToolkitError
from . import handlers, schemas

app = FastAPI(title="hedonic", version=__version__)


@app.exception_handler(ToolkitError)
async def toolkit_error_handler(request: Request, exc: ToolkitError):
    status = 422 if isinstance(exc, NumericalError) else 400
    kind = "numerical" if isinstance(exc, NumericalError) else "data"
    return JSONResponse(status_code=status, content={"error": kind, "detail": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/v1/describe", response_model=schemas.RunResponse)
def describe(request: schemas.DescribeRequest) -> schemas.RunResponse:
    return handlers.run_response(handlers.execute("describe", request))


@app.post("/v1/clean", response_model=schemas.RunResponse)
def clean(request: schemas.CleanRequest) -> schemas.RunResponse:
    return handlers.run_response(handlers.execute("clean", request))


@app.post("/v1/fit", response_model=schemas.RunResponse)
def fit(request: schemas.FitRequest) -> schemas.RunResponse:
    return handlers.run_response(handlers.execute("fit", request))


@app.post("/v1/diagnose", response_model=schemas.RunResponse)
def diagnose(request: schemas.DiagnoseRequest) -> schemas.RunResponse:
    return handlers.run_response(handlers.execute("diagnose", request))


@app.post("/v1/segment", response_model=schemas.RunResponse)
def segment(request: schemas.SegmentRequest) -> schemas.RunResponse:
    return handlers.run_response(handlers.execute("segment", request))


@app.post("/v1/synth", response_model=schemas.RunResponse)
def synth(request: schemas.SynthRequest) -> schemas.RunResponse:
    return handlers.run_response(handlers.execute("synth", request))


@app.post("/v1/full", response_model=schemas.RunResponse)
def full(request: schemas.FullRequest) -> schemas.RunResponse:
    return handlers.run_response(handlers.execute("full", request))

"""Command execution against request models.

The FastAPI routes and the CLI's local mode both call
:func:`execute`, so one code path produces the artifacts regardless of
transport.
"""

from __future__ import annotations

from .. import pipeline
from ..errors import DataError
from ..pipeline import RunResult, Thresholds
from ..tabular import Schema, load_csv_text
from . import schemas


def _thresholds(model: schemas.ThresholdsModel | None) -> Thresholds:
    if model is None:
        return Thresholds()
    return Thresholds(
        alpha=model.alpha,
        corr=model.corr_threshold,
        gvif=model.gvif_threshold,
        winsor=model.winsor,
        hc=model.hc,
    )


def _dataset(request) -> tuple:
    schema = None
    if request.dataset_schema is not None:
        schema = Schema.from_dict(request.dataset_schema.to_dict())
    return load_csv_text(request.csv_text, schema)


def execute(command: str, request) -> RunResult:
    """Run one pipeline command from its request model."""
    if command == "describe":
        ds, _ = _dataset(request)
        return pipeline.cmd_describe(ds)
    if command == "clean":
        ds, _ = _dataset(request)
        plan = [s.to_dict() for s in request.plan]
        return pipeline.cmd_clean(ds, plan, _thresholds(request.thresholds))
    if command == "fit":
        ds, _ = _dataset(request)
        return pipeline.cmd_fit(ds, request.model, _thresholds(request.thresholds))
    if command == "diagnose":
        ds, _ = _dataset(request)
        return pipeline.cmd_diagnose(
            ds, request.model, _thresholds(request.thresholds), request.drop
        )
    if command == "segment":
        ds, _ = _dataset(request)
        return pipeline.cmd_segment(
            ds, request.model, request.by, _thresholds(request.thresholds)
        )
    if command == "synth":
        return pipeline.cmd_synth(request.config, request.seed)
    if command == "full":
        ds, _ = _dataset(request)
        return pipeline.cmd_full(
            ds,
            request.model,
            plan=[s.to_dict() for s in request.plan],
            by=request.by,
            drop=request.drop,
            thresholds=_thresholds(request.thresholds),
            seed=request.seed,
        )
    raise DataError(f"unknown command {command!r}")


REQUEST_TYPES = {
    "describe": schemas.DescribeRequest,
    "clean": schemas.CleanRequest,
    "fit": schemas.FitRequest,
    "diagnose": schemas.DiagnoseRequest,
    "segment": schemas.SegmentRequest,
    "synth": schemas.SynthRequest,
    "full": schemas.FullRequest,
}


def run_response(result: RunResult) -> schemas.RunResponse:
    return schemas.RunResponse(
        command=result.command, summary=result.summary, artifacts=result.artifacts
    )

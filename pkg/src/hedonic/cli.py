"""Command-line client for the analysis pipeline.

The CLI reads local files, builds the same request models the HTTP
service accepts, and executes them — in process by default, or against
a running service when ``--server`` is given. Artifacts come back as
named strings and are written atomically under the output directory
(``--out``, overridable with the ``HEDONIC_OUT`` environment variable).

Exit codes: 0 success, 1 data/config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import DataError, NumericalError, ToolkitError
from .report import write_artifacts
from .service import handlers, schemas


def _read_text(path: str, what: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {what} {path}: {exc}") from None


def _read_json(path: str, what: str):
    text = _read_text(path, what)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{what} {path} is not valid JSON: {exc}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hedonic",
        description="Hedonic regression and housing-market segmentation toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="input CSV file")
            p.add_argument("--schema", help="schema JSON (inferred when omitted)")
        p.add_argument("--out", default=None, help="output directory (default: out)")
        p.add_argument(
            "--format",
            choices=["text", "structured"],
            default="text",
            help="stdout summary format",
        )
        p.add_argument("--server", help="run against this service URL instead of in process")

    def add_thresholds(p):
        p.add_argument("--alpha", type=float, default=0.05, help="significance level")
        p.add_argument("--corr-threshold", type=float, default=0.8)
        p.add_argument("--gvif-threshold", type=float, default=schemas.GVIF_THRESHOLD)
        p.add_argument("--winsor", type=float, default=0.95, help="default winsor percentile")
        p.add_argument("--hc", choices=["HC0", "HC1"], default="HC0")

    p = sub.add_parser("describe", help="descriptive statistics")
    add_common(p)

    p = sub.add_parser("clean", help="run a cleaning plan")
    add_common(p)
    p.add_argument("--clean-plan", required=True, help="cleaning plan JSON")
    add_thresholds(p)

    p = sub.add_parser("fit", help="aggregate fit with robust inference")
    add_common(p)
    p.add_argument("--spec", required=True, help="model spec file")
    add_thresholds(p)

    p = sub.add_parser("diagnose", help="multicollinearity and heteroskedasticity checks")
    add_common(p)
    p.add_argument("--spec", required=True, help="model spec file")
    p.add_argument("--drop", action="append", default=[], help="drop policy for flagged pairs")
    add_thresholds(p)

    p = sub.add_parser("segment", help="stratify, test, and merge submarkets")
    add_common(p)
    p.add_argument("--spec", required=True, help="model spec file")
    p.add_argument(
        "--by",
        action="append",
        required=True,
        help="stratification column; give twice to nest the second within the first",
    )
    add_thresholds(p)

    p = sub.add_parser("synth", help="generate a synthetic market")
    add_common(p, data=False)
    p.add_argument("--market", required=True, help="market config JSON")
    p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("full", help="the whole pipeline")
    add_common(p)
    p.add_argument("--spec", required=True, help="model spec file")
    p.add_argument("--clean-plan", help="cleaning plan JSON")
    p.add_argument("--by", action="append", default=[], help="stratification column(s)")
    p.add_argument("--drop", action="append", default=[], help="drop policy for flagged pairs")
    p.add_argument("--seed", type=int, help="recorded in provenance")
    add_thresholds(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _thresholds_model(args) -> schemas.ThresholdsModel:
    return schemas.ThresholdsModel(
        alpha=args.alpha,
        corr_threshold=args.corr_threshold,
        gvif_threshold=args.gvif_threshold,
        winsor=args.winsor,
        hc=args.hc,
    )


def _schema_model(args):
    if getattr(args, "schema", None) is None:
        return None
    return schemas.DatasetSchemaModel(**_read_json(args.schema, "schema"))


def _plan_models(path):
    doc = _read_json(path, "cleaning plan")
    steps = doc.get("steps") if isinstance(doc, dict) else None
    if steps is None:
        raise DataError(f"cleaning plan {path} must be an object with a 'steps' list")
    return [schemas.CleaningStepModel(**step) for step in steps]


def _build_request(args):
    command = args.command
    if command == "describe":
        return schemas.DescribeRequest(
            csv_text=_read_text(args.data, "data"), dataset_schema=_schema_model(args)
        )
    if command == "clean":
        return schemas.CleanRequest(
            csv_text=_read_text(args.data, "data"),
            dataset_schema=_schema_model(args),
            plan=_plan_models(args.clean_plan),
            thresholds=_thresholds_model(args),
        )
    if command == "fit":
        return schemas.FitRequest(
            csv_text=_read_text(args.data, "data"),
            dataset_schema=_schema_model(args),
            model=_read_text(args.spec, "model spec"),
            thresholds=_thresholds_model(args),
        )
    if command == "diagnose":
        return schemas.DiagnoseRequest(
            csv_text=_read_text(args.data, "data"),
            dataset_schema=_schema_model(args),
            model=_read_text(args.spec, "model spec"),
            drop=args.drop,
            thresholds=_thresholds_model(args),
        )
    if command == "segment":
        return schemas.SegmentRequest(
            csv_text=_read_text(args.data, "data"),
            dataset_schema=_schema_model(args),
            model=_read_text(args.spec, "model spec"),
            by=args.by,
            thresholds=_thresholds_model(args),
        )
    if command == "synth":
        return schemas.SynthRequest(
            config=_read_json(args.market, "market config"), seed=args.seed
        )
    if command == "full":
        return schemas.FullRequest(
            csv_text=_read_text(args.data, "data"),
            dataset_schema=_schema_model(args),
            model=_read_text(args.spec, "model spec"),
            plan=_plan_models(args.clean_plan) if args.clean_plan else [],
            by=args.by,
            drop=args.drop,
            seed=args.seed,
            thresholds=_thresholds_model(args),
        )
    raise DataError(f"unknown command {command!r}")


def _remote_execute(server: str, command: str, request, client=None) -> schemas.RunResponse:
    url = server.rstrip("/") + f"/v1/{command}"
    if client is None:
        import httpx

        with httpx.Client(timeout=600.0) as owned:
            response = owned.post(url, json=request.model_dump(mode="json"))
    else:
        response = client.post(url, json=request.model_dump(mode="json"))
    if response.status_code == 200:
        return schemas.RunResponse(**response.json())
    try:
        body = response.json()
    except ValueError:
        body = {"detail": response.text}
    detail = body.get("detail", body)
    if body.get("error") == "numerical":
        raise NumericalError(f"server: {detail}")
    raise DataError(f"server returned {response.status_code}: {detail}")


def _emit(result: schemas.RunResponse, args, out_dir: str):
    written = write_artifacts(out_dir, result.artifacts)
    if args.format == "structured":
        print(
            json.dumps(
                {
                    "command": result.command,
                    "summary": result.summary,
                    "artifacts": sorted(result.artifacts),
                    "out_dir": out_dir,
                },
                indent=2,
            )
        )
    else:
        print(f"{result.command}: ok")
        for key, value in result.summary.items():
            print(f"  {key}: {value}")
        for path in written:
            print(f"  wrote {path}")


def main(argv=None, client=None) -> int:
    """CLI entry point; ``client`` injects an HTTP client for --server mode
    (tests pass an in-process ASGI test client)."""
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    try:
        request = _build_request(args)
        if args.server:
            result = _remote_execute(args.server, args.command, request, client)
        else:
            result = handlers.run_response(handlers.execute(args.command, request))
        out_dir = os.environ.get("HEDONIC_OUT") or args.out or "out"
        _emit(result, args, out_dir)
        return 0
    except NumericalError as exc:
        print(f"error (numerical): {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Request and response models for the HTTP service.

Datasets travel as CSV text plus an optional schema document; model
specs travel as their text form. Responses carry a summary dict and the
artifact files as named strings, so a client can write them to disk
unchanged.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..diagnostics import GVIF_THRESHOLD


class ColumnSchemaModel(BaseModel):
    name: str
    kind: Literal["numeric", "categorical"]
    unit: Optional[str] = None
    levels: Optional[list[str]] = None
    base: Optional[str] = None


class DatasetSchemaModel(BaseModel):
    columns: list[ColumnSchemaModel]

    def to_dict(self) -> dict:
        cols = []
        for c in self.columns:
            entry: dict = {"name": c.name, "kind": c.kind}
            if c.unit is not None:
                entry["unit"] = c.unit
            if c.levels is not None:
                entry["levels"] = c.levels
            if c.base is not None:
                entry["base"] = c.base
            cols.append(entry)
        return {"columns": cols}


class CleaningStepModel(BaseModel):
    op: Literal["dedup", "filter", "impute", "winsorize"]
    name: Optional[str] = None
    column: Optional[str] = None
    cmp: Optional[str] = None
    value: Optional[object] = None
    strategy: Optional[Literal["mean", "mode", "constant"]] = None
    percentile: Optional[float] = None
    side: Optional[Literal["upper", "both"]] = None

    def to_dict(self) -> dict:
        out = {"op": self.op}
        for key in ("name", "column", "cmp", "value", "strategy", "percentile", "side"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        return out


class ThresholdsModel(BaseModel):
    alpha: float = Field(default=0.05, gt=0, lt=1)
    corr_threshold: float = Field(default=0.8, gt=0, lt=1)
    gvif_threshold: float = Field(default=GVIF_THRESHOLD, gt=0)
    winsor: float = Field(default=0.95, gt=0, lt=1)
    hc: Literal["HC0", "HC1"] = "HC0"


class DescribeRequest(BaseModel):
    csv_text: str
    dataset_schema: Optional[DatasetSchemaModel] = None


class CleanRequest(DescribeRequest):
    plan: list[CleaningStepModel]
    thresholds: ThresholdsModel = ThresholdsModel()


class FitRequest(DescribeRequest):
    model: str
    thresholds: ThresholdsModel = ThresholdsModel()


class DiagnoseRequest(FitRequest):
    drop: list[str] = []


class SegmentRequest(FitRequest):
    by: list[str]


class FullRequest(FitRequest):
    plan: list[CleaningStepModel] = []
    by: list[str] = []
    drop: list[str] = []
    seed: Optional[int] = None


class SynthRequest(BaseModel):
    config: dict
    seed: Optional[int] = None


class RunResponse(BaseModel):
    command: str
    summary: dict
    artifacts: dict[str, str]


class HealthResponse(BaseModel):
    status: str
    version: str

"""Synthetic housing markets with known ground truth.

Generates datasets whose response follows a declared model spec with
per-segment true coefficients, so pipeline behavior (estimation,
heteroskedasticity tests, segmentation tests) can be checked against
constructed truth.

Randomness comes from an in-repo PCG-32 generator (64-bit state,
32-bit permuted output) so that a seed reproduces the same stream
everywhere, independent of OS entropy or library versions. Gaussian
noise uses Box-Muller on that stream.

Market config JSON::

    {
      "seed": 42,
      "model": "response: ln(Price)\\nterms: ln(Size), Age",
      "segment_column": "Segment",
      "columns": [
        {"name": "Size", "kind": "loguniform", "low": 600, "high": 6000},
        {"name": "Age", "kind": "uniform", "low": 1, "high": 98, "integer": true},
        {"name": "Type", "kind": "categorical", "levels": ["condo", "house"],
         "weights": [0.4, 0.6]}
      ],
      "segments": [
        {"label": "north", "n": 300, "coefficients": [12.0, 0.8, -0.01],
         "noise_sd": 0.1}
      ],
      "heteroskedasticity": {"column": "Size", "multiplier": 0.0},
      "missing": {"Size": 0.0},
      "outliers": {"rate": 0.0, "magnitude": 1.0}
    }

Coefficients align with the realized design columns of the model spec
(intercept first when enabled); generation fails if the lengths or the
realized columns disagree across segments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .formula import ModelSpec, build_design, parse_model_spec
from .tabular import (
    Dataset,
    Schema,
    categorical_column,
    dataset_schema,
    numeric_column,
)

_MASK64 = (1 << 64) - 1
_MUL = 6364136223846793005


class Pcg32:
    """PCG-32: state update ``s*mul + inc``, XSH-RR output permutation."""

    def __init__(self, seed: int, seq: int = 0):
        self._state = 0
        self._inc = ((seq << 1) | 1) & _MASK64
        self.next_u32()
        self._state = (self._state + (seed & _MASK64)) & _MASK64
        self.next_u32()
        self._spare = None

    def next_u32(self) -> int:
        old = self._state
        self._state = (old * _MUL + self._inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def uniform(self) -> float:
        """53-bit uniform in [0, 1)."""
        hi = self.next_u32() >> 5  # 27 bits
        lo = self.next_u32() >> 6  # 26 bits
        return (hi * 67108864.0 + lo) / 9007199254740992.0

    def normal(self) -> float:
        """Standard normal via Box-Muller (spare value cached)."""
        if self._spare is not None:
            z = self._spare
            self._spare = None
            return z
        u1 = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare = radius * math.sin(angle)
        return radius * math.cos(angle)

    def choice(self, cumulative_weights, items):
        u = self.uniform()
        for cw, item in zip(cumulative_weights, items):
            if u < cw:
                return item
        return items[-1]


@dataclass(frozen=True)
class ColumnDist:
    name: str
    kind: str  # uniform | loguniform | categorical
    low: float = 0.0
    high: float = 1.0
    integer: bool = False
    levels: tuple = ()
    weights: tuple = ()

    def __post_init__(self):
        if self.kind not in ("uniform", "loguniform", "categorical"):
            raise DataError(f"column {self.name!r}: unknown distribution {self.kind!r}")
        if self.kind == "categorical":
            if len(self.levels) < 1:
                raise DataError(f"column {self.name!r}: categorical needs levels")
            if self.weights and len(self.weights) != len(self.levels):
                raise DataError(f"column {self.name!r}: weights/levels length mismatch")
        else:
            if not self.high > self.low:
                raise DataError(f"column {self.name!r}: needs high > low")
            if self.kind == "loguniform" and self.low <= 0:
                raise DataError(f"column {self.name!r}: loguniform needs low > 0")


@dataclass(frozen=True)
class SegmentConfig:
    label: str
    n: int
    coefficients: tuple
    noise_sd: float

    def __post_init__(self):
        if self.n < 1:
            raise DataError(f"segment {self.label!r}: n must be >= 1")
        if self.noise_sd < 0:
            raise DataError(f"segment {self.label!r}: noise_sd must be >= 0")


@dataclass(frozen=True)
class MarketConfig:
    seed: int
    model: str
    columns: tuple
    segments: tuple
    segment_column: str = "Segment"
    hetero_column: str | None = None
    hetero_multiplier: float = 0.0
    missing_rates: tuple = ()  # ((column, rate), ...)
    outlier_rate: float = 0.0
    outlier_magnitude: float = 1.0

    def __post_init__(self):
        if not self.segments:
            raise DataError("market config needs at least one segment")
        for _, rate in self.missing_rates:
            if not 0.0 <= rate <= 1.0:
                raise DataError("missing rates must be in [0, 1]")
        if not 0.0 <= self.outlier_rate <= 1.0:
            raise DataError("outlier rate must be in [0, 1]")
        if self.hetero_multiplier < 0:
            raise DataError("heteroskedasticity multiplier must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "MarketConfig":
        try:
            columns = tuple(
                ColumnDist(
                    name=c["name"],
                    kind=c["kind"],
                    low=float(c.get("low", 0.0)),
                    high=float(c.get("high", 1.0)),
                    integer=bool(c.get("integer", False)),
                    levels=tuple(c.get("levels", ())),
                    weights=tuple(float(w) for w in c.get("weights", ())),
                )
                for c in doc["columns"]
            )
            segments = tuple(
                SegmentConfig(
                    label=s["label"],
                    n=int(s["n"]),
                    coefficients=tuple(float(v) for v in s["coefficients"]),
                    noise_sd=float(s["noise_sd"]),
                )
                for s in doc["segments"]
            )
            hetero = doc.get("heteroskedasticity") or {}
            missing = doc.get("missing") or {}
            outliers = doc.get("outliers") or {}
            return cls(
                seed=int(doc["seed"]),
                model=doc["model"],
                columns=columns,
                segments=segments,
                segment_column=doc.get("segment_column", "Segment"),
                hetero_column=hetero.get("column"),
                hetero_multiplier=float(hetero.get("multiplier", 0.0)),
                missing_rates=tuple((k, float(v)) for k, v in missing.items()),
                outlier_rate=float(outliers.get("rate", 0.0)),
                outlier_magnitude=float(outliers.get("magnitude", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"invalid market config: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "MarketConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"market config is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


@dataclass(frozen=True)
class GroundTruth:
    seed: int
    design_columns: tuple
    segments: tuple  # ({label, rows, coefficients, noise_sd}, ...)
    outlier_rows: tuple
    missing_cells: tuple  # ((column, count), ...)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "design_columns": list(self.design_columns),
            "segments": [
                {
                    "label": s["label"],
                    "rows": list(s["rows"]),
                    "coefficients": dict(
                        zip(self.design_columns, s["coefficients"])
                    ),
                    "noise_sd": s["noise_sd"],
                }
                for s in self.segments
            ],
            "outlier_rows": list(self.outlier_rows),
            "missing_cells": {col: n for col, n in self.missing_cells},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _sample_column(rng: Pcg32, dist: ColumnDist):
    if dist.kind == "categorical":
        weights = dist.weights or tuple(1.0 / len(dist.levels) for _ in dist.levels)
        total = sum(weights)
        running = 0.0
        cumulative = []
        for w in weights:
            running += w / total
            cumulative.append(running)
        return rng.choice(cumulative, dist.levels)
    u = rng.uniform()
    if dist.kind == "uniform":
        value = dist.low + u * (dist.high - dist.low)
    else:
        value = math.exp(math.log(dist.low) + u * (math.log(dist.high) - math.log(dist.low)))
    return float(round(value)) if dist.integer else value


def _response_inverse(spec: ModelSpec, linear: float) -> float:
    term = spec.response
    if term.transform == "identity":
        return linear
    if term.transform == "ln":
        return math.exp(linear) - term.offset
    raise DataError(
        f"synthetic response supports identity or ln transforms, not {term.transform!r}"
    )


def generate_market(cfg: MarketConfig):
    """Sample a market: returns ``(dataset, ground_truth)``.

    Covariates are drawn from the configured distributions, the linear
    predictor comes from the model spec's realized design times each
    segment's true coefficients, and noise is Gaussian with optional
    variance increasing in a chosen covariate. The dataset orders rows
    segment by segment.
    """
    spec = parse_model_spec(cfg.model)
    response_col = spec.response.column
    names = {c.name for c in cfg.columns}
    if response_col in names:
        raise DataError(f"response column {response_col!r} must not be sampled")
    if cfg.segment_column in names:
        raise DataError(f"segment column {cfg.segment_column!r} must not be sampled")
    for col, _ in cfg.missing_rates:
        if col not in names:
            raise DataError(f"missing rate for unknown column {col!r}")
    if cfg.hetero_column is not None and cfg.hetero_column not in names:
        raise DataError(f"heteroskedasticity column {cfg.hetero_column!r} unknown")

    rng = Pcg32(cfg.seed)
    labels = []
    cells = {c.name: [] for c in cfg.columns}
    boundaries = []
    for seg in cfg.segments:
        start = len(labels)
        for _ in range(seg.n):
            labels.append(seg.label)
            for dist in cfg.columns:
                cells[dist.name].append(_sample_column(rng, dist))
        boundaries.append((seg, start, len(labels)))
    n_total = len(labels)

    covariates = {}
    for dist in cfg.columns:
        if dist.kind == "categorical":
            covariates[dist.name] = categorical_column(cells[dist.name], levels=dist.levels)
        else:
            covariates[dist.name] = numeric_column(cells[dist.name])
    placeholder = numeric_column([1.0] * n_total)
    working = Dataset({**covariates, response_col: placeholder})

    hetero_scale = None
    if cfg.hetero_column is not None and cfg.hetero_multiplier > 0:
        hvals = np.asarray(cells[cfg.hetero_column], dtype=float)
        span = float(hvals.max() - hvals.min())
        unit = (hvals - hvals.min()) / span if span > 0 else np.zeros(n_total)
        hetero_scale = np.sqrt(1.0 + cfg.hetero_multiplier * unit)

    linear = np.zeros(n_total)
    design_names = None
    truth_segments = []
    for seg, start, stop in boundaries:
        rows = tuple(range(start, stop))
        dm = build_design(working.subset(rows), spec)
        if design_names is None:
            design_names = dm.names
        elif dm.names != design_names:
            raise DataError(
                f"segment {seg.label!r} realizes design columns {dm.names}, "
                f"expected {design_names}"
            )
        if len(seg.coefficients) != dm.k:
            raise DataError(
                f"segment {seg.label!r}: {len(seg.coefficients)} coefficients for "
                f"{dm.k} design columns {design_names}"
            )
        linear[start:stop] = dm.X @ np.asarray(seg.coefficients)
        truth_segments.append(
            {"label": seg.label, "rows": rows, "coefficients": seg.coefficients,
             "noise_sd": seg.noise_sd}
        )

    response = []
    for seg, start, stop in boundaries:
        for i in range(start, stop):
            sd = seg.noise_sd
            if hetero_scale is not None:
                sd *= float(hetero_scale[i])
            eps = rng.normal() * sd if sd > 0 else 0.0
            response.append(_response_inverse(spec, float(linear[i]) + eps))

    outlier_rows = []
    if cfg.outlier_rate > 0:
        for i in range(n_total):
            if rng.uniform() < cfg.outlier_rate:
                response[i] *= cfg.outlier_magnitude
                outlier_rows.append(i)

    missing_cells = []
    for col, rate in cfg.missing_rates:
        count = 0
        if rate > 0:
            values = list(cells[col])
            for i in range(n_total):
                if rng.uniform() < rate:
                    values[i] = None
                    count += 1
            dist = next(c for c in cfg.columns if c.name == col)
            if dist.kind == "categorical":
                covariates[col] = categorical_column(values, levels=dist.levels)
            else:
                covariates[col] = numeric_column(values)
        missing_cells.append((col, count))

    segment_levels = tuple(s.label for s in cfg.segments)
    final = Dataset(
        {
            cfg.segment_column: categorical_column(labels, levels=segment_levels),
            **covariates,
            response_col: numeric_column(response),
        }
    )
    truth = GroundTruth(
        seed=cfg.seed,
        design_columns=design_names,
        segments=tuple(truth_segments),
        outlier_rows=tuple(outlier_rows),
        missing_cells=tuple(missing_cells),
    )
    return final, truth


def market_schema(cfg: MarketConfig, ds: Dataset) -> Schema:
    """Schema for a generated dataset (declared kinds and levels)."""
    return dataset_schema(ds)

"""Hedonic price regression and housing-market segmentation toolkit."""

__version__ = "0.1.0"

from .errors import (
    DataError,
    ModelSpecError,
    NumericalError,
    RankDeficiencyError,
    SchemaError,
    ToolkitError,
)
from .tabular import Column, ColumnSpec, Dataset, Schema, infer_schema, load_csv, write_csv
from .prep import CleaningReport, RowFilter, dedup, describe, filter_rows, impute, winsorize
from .formula import DesignMatrix, ModelSpec, build_design, parse_model_spec
from .estimate import FitResult, back_transform, fit_ols, mse, predict, solve_least_squares
from .diagnostics import breusch_pagan, gvif, high_correlation_pairs, pearson_matrix, white_cov, white_test
from .segment import ChowResult, SegmentNode, chow, merge_segments, nest, pairwise_segmentation_test, stratify
from .synth import MarketConfig, Pcg32, generate_market

__all__ = [
    "__version__",
    "ToolkitError",
    "DataError",
    "SchemaError",
    "ModelSpecError",
    "NumericalError",
    "RankDeficiencyError",
    "Dataset",
    "Column",
    "Schema",
    "ColumnSpec",
    "load_csv",
    "infer_schema",
    "write_csv",
    "CleaningReport",
    "RowFilter",
    "dedup",
    "filter_rows",
    "impute",
    "winsorize",
    "describe",
    "ModelSpec",
    "DesignMatrix",
    "parse_model_spec",
    "build_design",
    "FitResult",
    "fit_ols",
    "solve_least_squares",
    "predict",
    "back_transform",
    "mse",
    "pearson_matrix",
    "high_correlation_pairs",
    "gvif",
    "white_cov",
    "breusch_pagan",
    "white_test",
    "SegmentNode",
    "ChowResult",
    "stratify",
    "chow",
    "pairwise_segmentation_test",
    "merge_segments",
    "nest",
    "MarketConfig",
    "Pcg32",
    "generate_market",
]

"""Typed in-memory tables with CSV ingestion and schema handling.

A :class:`Dataset` is an ordered collection of named columns. Each column
is either numeric (floats plus a per-row missing mask) or categorical
(labels drawn from a finite level set). Datasets are immutable after
construction and safe to share between threads; every transformation in
the package returns a new instance.

CSV conventions: RFC-4180-style, header row required, UTF-8. Empty cells
and a configurable sentinel (default ``NA``) read as missing. Numeric
tokens may carry US-style thousands separators (``"896,332"``), which
are stripped before parsing. Schemas serialize to a small JSON document::

    {"columns": [
        {"name": "Price", "kind": "numeric", "unit": "USD"},
        {"name": "Region", "kind": "categorical",
         "levels": ["Central", "North"], "base": "Central"}
    ]}
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field

from .errors import DataError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

DEFAULT_MISSING = ("", "NA")

_GROUPED_NUMBER = re.compile(r"^-?\d{1,3}(?:,\d{3})+(?:\.\d*)?$")


def parse_number(token: str) -> float:
    """Parse a numeric token, accepting proper thousands grouping."""
    try:
        value = float(token)
    except ValueError:
        stripped = token.strip()
        if _GROUPED_NUMBER.match(stripped):
            return float(stripped.replace(",", ""))
        raise DataError(f"not a number: {token!r}") from None
    if math.isnan(value) or math.isinf(value):
        raise DataError(f"non-finite numeric token: {token!r}")
    return value


@dataclass(frozen=True)
class Column:
    """One dataset column. ``values[i]`` is None exactly when ``missing[i]``."""

    kind: str
    values: tuple
    missing: tuple
    levels: tuple = ()
    unit: str | None = None
    base: str | None = None  # designated dummy-coding base level

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"unknown column kind: {self.kind!r}")
        if self.base is not None and self.base not in self.levels:
            raise SchemaError(f"base level {self.base!r} not in declared levels")
        if len(self.values) != len(self.missing):
            raise SchemaError("values and missing mask differ in length")
        for value, gone in zip(self.values, self.missing):
            if gone != (value is None):
                raise SchemaError("missing mask inconsistent with values")
            if gone:
                continue
            if self.kind == NUMERIC and not isinstance(value, float):
                raise SchemaError(f"numeric column holds non-float cell {value!r}")
            if self.kind == CATEGORICAL and value not in self.levels:
                raise SchemaError(
                    f"categorical value {value!r} outside declared levels"
                )

    def __len__(self):
        return len(self.values)

    @property
    def n_missing(self) -> int:
        return sum(self.missing)

    def present(self) -> list:
        """Non-missing values in row order."""
        return [v for v in self.values if v is not None]

    def take(self, rows) -> "Column":
        values = tuple(self.values[i] for i in rows)
        missing = tuple(self.missing[i] for i in rows)
        return Column(self.kind, values, missing, self.levels, self.unit, self.base)


def numeric_column(values, unit=None) -> Column:
    """Build a numeric column from a sequence; ``None`` marks missing."""
    cells = tuple(None if v is None else float(v) for v in values)
    missing = tuple(v is None for v in cells)
    return Column(NUMERIC, cells, missing, (), unit)


def categorical_column(values, levels=None, base=None) -> Column:
    """Build a categorical column; levels default to observed, sorted."""
    cells = tuple(None if v is None else str(v) for v in values)
    missing = tuple(v is None for v in cells)
    if levels is None:
        levels = sorted({v for v in cells if v is not None})
    return Column(CATEGORICAL, cells, missing, tuple(levels), base=base)


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of equal-length named columns."""

    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = set()
        for name, col in self.columns.items():
            if not name:
                raise SchemaError("column names must be non-empty")
            if not isinstance(col, Column):
                raise SchemaError(f"column {name!r} is not a Column")
            lengths.add(len(col))
        if len(lengths) > 1:
            raise SchemaError(f"columns differ in length: {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        for col in self.columns.values():
            return len(col)
        return 0

    @property
    def names(self) -> tuple:
        return tuple(self.columns)

    def column(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"unknown column: {name!r}") from None

    def subset(self, rows) -> "Dataset":
        """New dataset keeping the given row indices, in the given order."""
        rows = tuple(rows)
        return Dataset({n: c.take(rows) for n, c in self.columns.items()})

    def with_column(self, name: str, col: Column) -> "Dataset":
        cols = dict(self.columns)
        cols[name] = col
        return Dataset(cols)

    def row_key(self, i: int) -> tuple:
        """Hashable signature of row i over all columns (for dedup)."""
        return tuple(col.values[i] for col in self.columns.values())


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    unit: str | None = None
    levels: tuple = ()
    base: str | None = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.base is not None and self.base not in self.levels:
            raise SchemaError(
                f"column {self.name!r}: base level {self.base!r} not in levels"
            )


@dataclass(frozen=True)
class Schema:
    columns: tuple

    @property
    def names(self) -> tuple:
        return tuple(c.name for c in self.columns)

    def spec(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise SchemaError(f"schema has no column {name!r}")

    def to_dict(self) -> dict:
        cols = []
        for c in self.columns:
            entry = {"name": c.name, "kind": c.kind}
            if c.unit is not None:
                entry["unit"] = c.unit
            if c.kind == CATEGORICAL:
                entry["levels"] = list(c.levels)
                if c.base is not None:
                    entry["base"] = c.base
            cols.append(entry)
        return {"columns": cols}

    @classmethod
    def from_dict(cls, doc: dict) -> "Schema":
        try:
            raw = doc["columns"]
        except (KeyError, TypeError):
            raise SchemaError("schema document must have a 'columns' list") from None
        cols = []
        for entry in raw:
            cols.append(
                ColumnSpec(
                    name=entry["name"],
                    kind=entry["kind"],
                    unit=entry.get("unit"),
                    levels=tuple(entry.get("levels", ())),
                    base=entry.get("base"),
                )
            )
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        return cls(tuple(cols))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Schema":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


def _read_rows(path) -> tuple:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: empty file, header row required")
    header = rows[0]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate header names")
    body = [row for row in rows[1:] if row]  # blank lines are not records
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
    return header, body


def load_csv(path, schema: Schema, missing=DEFAULT_MISSING) -> Dataset:
    """Load a CSV file under a declared schema.

    The header must contain exactly the schema's column names (order
    insensitive). Cells equal to one of the ``missing`` sentinels become
    missing; anything else must parse under the declared kind.
    """
    header, body = _read_rows(path)
    absent = [n for n in schema.names if n not in header]
    if absent:
        raise SchemaError(f"{path}: header lacks schema columns: {', '.join(absent)}")
    extra = [n for n in header if n not in schema.names]
    if extra:
        raise SchemaError(f"{path}: header has undeclared columns: {', '.join(extra)}")
    index = {name: header.index(name) for name in schema.names}
    missing = tuple(missing)

    columns = {}
    for spec in schema.columns:
        j = index[spec.name]
        cells = []
        for i, row in enumerate(body):
            token = row[j]
            if token in missing:
                cells.append(None)
            elif spec.kind == NUMERIC:
                try:
                    cells.append(parse_number(token))
                except DataError:
                    raise DataError(
                        f"{path}: row {i + 2}, column {spec.name!r}: "
                        f"non-numeric token {token!r}"
                    ) from None
            else:
                if token not in spec.levels:
                    raise DataError(
                        f"{path}: row {i + 2}, column {spec.name!r}: "
                        f"value {token!r} outside declared levels"
                    )
                cells.append(token)
        if spec.kind == NUMERIC:
            columns[spec.name] = numeric_column(cells, unit=spec.unit)
        else:
            columns[spec.name] = categorical_column(cells, levels=spec.levels, base=spec.base)
    return Dataset(columns)


def infer_schema(path, missing=DEFAULT_MISSING) -> Schema:
    """Infer a schema: numeric when every non-missing cell parses as a number,
    else categorical with observed levels sorted lexicographically."""
    header, body = _read_rows(path)
    if not body:
        raise DataError(f"{path}: no data rows to infer from")
    missing = tuple(missing)
    specs = []
    for j, name in enumerate(header):
        tokens = [row[j] for row in body if row[j] not in missing]
        is_numeric = bool(tokens)
        for token in tokens:
            try:
                parse_number(token)
            except DataError:
                is_numeric = False
                break
        if is_numeric:
            specs.append(ColumnSpec(name, NUMERIC))
        else:
            levels = tuple(sorted(set(tokens)))
            specs.append(ColumnSpec(name, CATEGORICAL, levels=levels))
    return Schema(tuple(specs))


def _format_cell(col: Column, value) -> str:
    if value is None:
        return ""
    if col.kind == NUMERIC:
        return repr(value)
    return value


def write_csv(ds: Dataset, path) -> None:
    """Write a dataset back to CSV; missing cells become empty fields."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ds.names)
        cols = list(ds.columns.values())
        for i in range(ds.n_rows):
            writer.writerow([_format_cell(c, c.values[i]) for c in cols])


def dataset_csv(ds: Dataset) -> str:
    """Render a dataset to CSV text (same format as :func:`write_csv`)."""
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ds.names)
    cols = list(ds.columns.values())
    for i in range(ds.n_rows):
        writer.writerow([_format_cell(c, c.values[i]) for c in cols])
    return buf.getvalue()


def dataset_schema(ds: Dataset) -> Schema:
    """Schema matching a dataset's declared kinds and levels."""
    specs = []
    for name, col in ds.columns.items():
        if col.kind == NUMERIC:
            specs.append(ColumnSpec(name, NUMERIC, unit=col.unit))
        else:
            specs.append(ColumnSpec(name, CATEGORICAL, levels=col.levels, base=col.base))
    return Schema(tuple(specs))


def load_csv_text(text: str, schema: Schema | None = None, missing=DEFAULT_MISSING):
    """Load CSV from a string; infers the schema when none is given.

    Returns ``(dataset, schema)``.
    """
    import os
    import tempfile

    fd, tmp = tempfile.mkstemp(suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if schema is None:
            schema = infer_schema(tmp, missing=missing)
        return load_csv(tmp, schema, missing=missing), schema
    finally:
        os.unlink(tmp)

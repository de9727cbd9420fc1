"""Data cleaning pipeline and descriptive statistics.

Cleaning operations are pure: each takes a dataset and returns a new one
plus a :class:`CleaningReport`. A cleaning plan is an ordered list of
steps (dedup, named row filters, imputation, winsorization) expressed in
the same JSON config family as schemas::

    {"steps": [
        {"op": "dedup"},
        {"op": "filter", "name": "no-horse", "column": "Flag",
         "cmp": "ne", "value": "horse"},
        {"op": "impute", "column": "LotArea", "strategy": "mean"},
        {"op": "winsorize", "column": "Price", "percentile": 0.95,
         "side": "upper"}
    ]}

Percentiles use the nearest-rank rule: the ceil(p * n)-th order
statistic of the non-missing values, 1-indexed. Standard deviations use
the sample (n - 1) divisor throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError
from .tabular import CATEGORICAL, NUMERIC, Column, Dataset


@dataclass(frozen=True)
class NumericStats:
    mean: float
    sd: float
    minimum: float
    maximum: float
    cv: float | None  # sd / mean, None when mean == 0
    count: int


@dataclass(frozen=True)
class LevelCount:
    level: str
    count: int
    percent: float  # of all rows, matching descriptive-table convention


@dataclass(frozen=True)
class SummaryStats:
    numeric: dict
    categorical: dict
    n_rows: int


@dataclass(frozen=True)
class CleaningReport:
    """Counts of what each cleaning stage touched, in applied order."""

    dedup_dropped: int = 0
    filter_dropped: tuple = ()  # (filter name, rows dropped)
    imputed: tuple = ()  # (column, cells filled)
    winsorized: tuple = ()  # (column, cells capped)
    steps: tuple = ()  # human-readable applied-step log

    def merged(self, other: "CleaningReport") -> "CleaningReport":
        return CleaningReport(
            dedup_dropped=self.dedup_dropped + other.dedup_dropped,
            filter_dropped=self.filter_dropped + other.filter_dropped,
            imputed=self.imputed + other.imputed,
            winsorized=self.winsorized + other.winsorized,
            steps=self.steps + other.steps,
        )

    def to_dict(self) -> dict:
        return {
            "dedup_dropped": self.dedup_dropped,
            "filter_dropped": [list(t) for t in self.filter_dropped],
            "imputed": [list(t) for t in self.imputed],
            "winsorized": [list(t) for t in self.winsorized],
            "steps": list(self.steps),
        }


def dedup(ds: Dataset) -> tuple:
    """Drop exact duplicate rows (all cells and missing flags equal),
    keeping the first occurrence; row order is otherwise preserved."""
    seen = set()
    keep = []
    for i in range(ds.n_rows):
        key = ds.row_key(i)
        if key in seen:
            continue
        seen.add(key)
        keep.append(i)
    dropped = ds.n_rows - len(keep)
    out = ds if dropped == 0 else ds.subset(keep)
    return out, CleaningReport(dedup_dropped=dropped, steps=(f"dedup: dropped {dropped}",))


@dataclass(frozen=True)
class RowFilter:
    """Declarative keep-condition on one column.

    Rows failing the condition are removed. A missing cell passes every
    comparison except ``not_missing`` (unknown is not treated as bad);
    use ``is_missing``/``not_missing`` to filter on missingness itself.
    """

    name: str
    column: str
    cmp: str  # eq ne lt le gt ge in not_in is_missing not_missing
    value: object = None

    _OPS = ("eq", "ne", "lt", "le", "gt", "ge", "in", "not_in", "is_missing", "not_missing")

    def __post_init__(self):
        if self.cmp not in self._OPS:
            raise DataError(f"filter {self.name!r}: unknown comparison {self.cmp!r}")

    def keeps(self, cell) -> bool:
        if self.cmp == "is_missing":
            return cell is None
        if self.cmp == "not_missing":
            return cell is not None
        if cell is None:
            return True
        v = self.value
        if self.cmp == "eq":
            return cell == v
        if self.cmp == "ne":
            return cell != v
        if self.cmp == "lt":
            return cell < v
        if self.cmp == "le":
            return cell <= v
        if self.cmp == "gt":
            return cell > v
        if self.cmp == "ge":
            return cell >= v
        if self.cmp == "in":
            return cell in v
        return cell not in v


def filter_rows(ds: Dataset, filters) -> tuple:
    """Keep rows passing every filter; drops are attributed to the first
    filter that rejects the row."""
    filters = list(filters)
    for f in filters:
        if f.column not in ds.columns:
            raise DataError(f"filter {f.name!r}: unknown column {f.column!r}")
    cols = {f.column: ds.column(f.column) for f in filters}
    dropped = {f.name: 0 for f in filters}
    keep = []
    for i in range(ds.n_rows):
        rejected = None
        for f in filters:
            if not f.keeps(cols[f.column].values[i]):
                rejected = f.name
                break
        if rejected is None:
            keep.append(i)
        else:
            dropped[rejected] += 1
    out = ds if len(keep) == ds.n_rows else ds.subset(keep)
    per_filter = tuple((f.name, dropped[f.name]) for f in filters)
    steps = tuple(f"filter {name}: dropped {n}" for name, n in per_filter)
    return out, CleaningReport(filter_dropped=per_filter, steps=steps)


def _mode(values):
    counts = {}
    order = []
    for v in values:
        if v is None:
            continue
        if v not in counts:
            order.append(v)
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    for v in order:  # ties broken by first appearance in row order
        if counts[v] == best:
            return v
    raise AssertionError("unreachable")


def impute(ds: Dataset, column: str, strategy: str, value=None) -> tuple:
    """Fill missing cells: ``mean`` (numeric only), ``mode``, or
    ``constant`` with an explicit value."""
    col = ds.column(column)
    if strategy == "mean" and col.kind != NUMERIC:
        raise DataError(f"impute {column!r}: mean requires a numeric column")
    if strategy not in ("mean", "mode", "constant"):
        raise DataError(f"impute {column!r}: unknown strategy {strategy!r}")
    n_missing = col.n_missing
    if n_missing == 0:
        return ds, CleaningReport(imputed=((column, 0),), steps=(f"impute {column}: 0 cells",))
    present = col.present()
    if not present and strategy in ("mean", "mode"):
        raise DataError(f"impute {column!r}: column is entirely missing")
    if strategy == "mean":
        fill = sum(present) / len(present)
    elif strategy == "mode":
        fill = _mode(col.values)
    else:
        if value is None:
            raise DataError(f"impute {column!r}: constant strategy needs a value")
        fill = float(value) if col.kind == NUMERIC else str(value)
    if col.kind == CATEGORICAL and fill not in col.levels:
        raise DataError(f"impute {column!r}: fill value {fill!r} outside levels")
    cells = tuple(fill if v is None else v for v in col.values)
    new = Column(col.kind, cells, (False,) * len(cells), col.levels, col.unit)
    report = CleaningReport(
        imputed=((column, n_missing),),
        steps=(f"impute {column} ({strategy}): {n_missing} cells",),
    )
    return ds.with_column(column, new), report


def nearest_rank(sorted_values, p: float):
    """ceil(p * n)-th order statistic (1-indexed) of a sorted sequence."""
    n = len(sorted_values)
    idx = min(max(math.ceil(p * n), 1), n)
    return sorted_values[idx - 1]


def winsorize(ds: Dataset, column: str, percentile: float, side: str = "upper") -> tuple:
    """Cap extreme values at the nearest-rank percentile.

    ``upper`` caps values above the p-th percentile; ``both`` also
    floors values below the (1 - p)-th percentile. Missing cells are
    untouched.
    """
    col = ds.column(column)
    if col.kind != NUMERIC:
        raise DataError(f"winsorize {column!r}: requires a numeric column")
    if not 0.0 < percentile < 1.0:
        raise DataError(f"winsorize {column!r}: percentile must be in (0, 1)")
    if side not in ("upper", "both"):
        raise DataError(f"winsorize {column!r}: side must be 'upper' or 'both'")
    present = sorted(col.present())
    if not present:
        return ds, CleaningReport(winsorized=((column, 0),), steps=(f"winsorize {column}: 0 cells",))
    hi = nearest_rank(present, percentile)
    lo = nearest_rank(present, 1.0 - percentile) if side == "both" else None
    changed = 0
    cells = []
    for v in col.values:
        if v is None:
            cells.append(None)
        elif v > hi:
            cells.append(hi)
            changed += 1
        elif lo is not None and v < lo:
            cells.append(lo)
            changed += 1
        else:
            cells.append(v)
    out = ds
    if changed:
        new = Column(col.kind, tuple(cells), col.missing, col.levels, col.unit)
        out = ds.with_column(column, new)
    report = CleaningReport(
        winsorized=((column, changed),),
        steps=(f"winsorize {column} ({side} {percentile:g}): {changed} cells",),
    )
    return out, report


def describe(ds: Dataset) -> SummaryStats:
    """Per-column summaries over non-missing values.

    Numeric columns get mean, sample standard deviation, min, max and
    the coefficient of variation sd/mean (rendered as a percentage in
    reports). Categorical columns get level frequencies and percents of
    all rows.
    """
    numeric = {}
    categorical = {}
    for name, col in ds.columns.items():
        present = col.present()
        if col.kind == NUMERIC:
            if not present:
                continue
            n = len(present)
            mean = sum(present) / n
            if n > 1:
                sd = math.sqrt(sum((v - mean) ** 2 for v in present) / (n - 1))
            else:
                sd = 0.0
            cv = sd / mean if mean != 0 else None
            numeric[name] = NumericStats(mean, sd, min(present), max(present), cv, n)
        else:
            counts = {}
            for v in present:
                counts[v] = counts.get(v, 0) + 1
            rows = []
            for level in col.levels:
                if level in counts:
                    pct = 100.0 * counts[level] / ds.n_rows if ds.n_rows else 0.0
                    rows.append(LevelCount(level, counts[level], pct))
            categorical[name] = tuple(rows)
    return SummaryStats(numeric, categorical, ds.n_rows)


def apply_plan(ds: Dataset, steps) -> tuple:
    """Run a cleaning plan (list of step dicts) in declared order."""
    report = CleaningReport()
    for i, step in enumerate(steps):
        op = step.get("op")
        if op == "dedup":
            ds, r = dedup(ds)
        elif op == "filter":
            f = RowFilter(
                name=step.get("name", f"filter-{i}"),
                column=step.get("column", ""),
                cmp=step.get("cmp", "eq"),
                value=step.get("value"),
            )
            ds, r = filter_rows(ds, [f])
        elif op == "impute":
            ds, r = impute(ds, step.get("column", ""), step.get("strategy", "mean"), step.get("value"))
        elif op == "winsorize":
            ds, r = winsorize(
                ds,
                step.get("column", ""),
                float(step.get("percentile", 0.95)),
                step.get("side", "upper"),
            )
        else:
            raise DataError(f"cleaning plan step {i}: unknown op {op!r}")
        report = report.merged(r)
    return ds, report

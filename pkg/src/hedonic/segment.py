"""Market segmentation: stratification, Chow tests, merging, nesting.

Segments are nodes over row subsets of one dataset; children always
partition their parent's rows. All pairwise structural-difference tests
share one regressor set (the caller passes a spec estimable on every
segment, typically the aggregate spec minus the stratification
columns), since the test statistic is undefined across heterogeneous
regressor sets.

A segment is fitted only when its realized design satisfies
n >= k + MIN_EXTRA_ROWS; smaller nodes are reported unfitted rather
than estimated on too few degrees of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import diagnostics
from .dist import f_sf
from .errors import DataError, ToolkitError
from .estimate import FitResult, fit_ols, significance_stars
from .formula import ModelSpec, build_design
from .tabular import CATEGORICAL, Dataset

MIN_EXTRA_ROWS = 10  # fit only when n >= k + 10


@dataclass(frozen=True, eq=False)
class SegmentNode:
    label: str
    rows: tuple
    spec: ModelSpec | None = None
    fit: FitResult | None = None
    children: tuple = ()
    provenance: str = ""
    note: str | None = None

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def fitted(self) -> bool:
        return self.fit is not None


@dataclass(frozen=True)
class ChowResult:
    label_a: str
    label_b: str
    f_stat: float
    df1: int
    df2: int
    p_value: float

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)


@dataclass(frozen=True)
class PairwiseChow:
    results: tuple  # ChowResult per testable pair
    failures: tuple  # (label_a, label_b, reason)


def stratify(ds: Dataset, by: str):
    """One node per observed level of a categorical column, rows
    partitioned in stable order (level order, then row order)."""
    col = ds.column(by)
    if col.kind != CATEGORICAL:
        raise DataError(f"stratify: column {by!r} is not categorical")
    if col.n_missing:
        raise DataError(f"stratify: column {by!r} has missing cells")
    buckets = {level: [] for level in col.levels}
    for i, value in enumerate(col.values):
        buckets[value].append(i)
    observed = [lv for lv in col.levels if buckets[lv]]
    if len(observed) < 2:
        raise DataError(f"stratify: column {by!r} has fewer than 2 observed levels")
    return [
        SegmentNode(label=lv, rows=tuple(buckets[lv]), provenance=f"{by}={lv}")
        for lv in observed
    ]


def fit_segment(ds: Dataset, node: SegmentNode, spec: ModelSpec) -> SegmentNode:
    """Attach a fit to a node, or a note explaining why it stayed unfitted."""
    sub = ds.subset(node.rows)
    try:
        dm = build_design(sub, spec)
    except ToolkitError as exc:
        return replace(node, spec=spec, note=f"unfitted: {exc}")
    if dm.n < dm.k + MIN_EXTRA_ROWS:
        return replace(
            node,
            spec=spec,
            note=f"unfitted: n ({dm.n}) < k + {MIN_EXTRA_ROWS} ({dm.k + MIN_EXTRA_ROWS})",
        )
    try:
        fit = fit_ols(dm)
    except ToolkitError as exc:
        return replace(node, spec=spec, note=f"unfitted: {exc}")
    return replace(node, spec=spec, fit=fit)


def fit_segments(ds: Dataset, nodes, spec: ModelSpec):
    return [fit_segment(ds, node, spec) for node in nodes]


def chow(pooled: FitResult, a: FitResult, b: FitResult, label_a="a", label_b="b") -> ChowResult:
    """Structural-difference F test between two segments.

    F = [(SSR_p - SSR_a - SSR_b)/k] / [(SSR_a + SSR_b)/(n_a + n_b - 2k)]
    with k the shared regressor count. The pooled fit must cover exactly
    the union of the two segments under the identical regressor set.
    """
    if a.names != b.names or a.names != pooled.names:
        raise DataError(
            f"chow: regressor sets differ (pooled={pooled.names}, a={a.names}, b={b.names})"
        )
    if pooled.n != a.n + b.n:
        raise DataError(
            f"chow: pooled rows ({pooled.n}) must equal the union of the segments "
            f"({a.n} + {b.n})"
        )
    k = a.k
    df2 = a.n + b.n - 2 * k
    if df2 <= 0:
        raise DataError(f"chow: non-positive denominator df ({df2})")
    ssr_sub = a.ssr + b.ssr
    numerator = max(pooled.ssr - ssr_sub, 0.0) / k  # exact arithmetic gives >= 0
    if ssr_sub <= 0.0:
        f_stat = 0.0 if numerator == 0.0 else math.inf
    else:
        f_stat = numerator / (ssr_sub / df2)
    p = f_sf(f_stat, k, df2) if math.isfinite(f_stat) else 0.0
    return ChowResult(label_a, label_b, f_stat, k, df2, p)


def _pool_fit(ds: Dataset, a: SegmentNode, b: SegmentNode, spec: ModelSpec) -> FitResult:
    rows = tuple(sorted(a.rows + b.rows))
    dm = build_design(ds.subset(rows), spec)
    return fit_ols(dm)


def pairwise_segmentation_test(ds: Dataset, segments, spec: ModelSpec) -> PairwiseChow:
    """Chow tests over all unordered segment pairs under a shared spec.

    A singular or otherwise unfittable pair is reported as a failure;
    the remaining pairs still run.
    """
    segments = list(segments)
    if len(segments) < 2:
        raise DataError("pairwise test needs at least 2 segments")
    # nodes already fitted (or already marked unfitted) under this spec pass through
    fitted = [
        n if (n.fitted or n.note) else fit_segment(ds, n, spec) for n in segments
    ]
    results = []
    failures = []
    for i in range(len(fitted)):
        for j in range(i + 1, len(fitted)):
            a, b = fitted[i], fitted[j]
            bad = next((s for s in (a, b) if not s.fitted), None)
            if bad is not None:
                failures.append((a.label, b.label, bad.note or "segment unfitted"))
                continue
            try:
                pooled = _pool_fit(ds, a, b, spec)
                results.append(chow(pooled, a.fit, b.fit, a.label, b.label))
            except ToolkitError as exc:
                failures.append((a.label, b.label, str(exc)))
    return PairwiseChow(tuple(results), tuple(failures))


def merge_segments(ds: Dataset, segments, spec: ModelSpec, alpha: float = 0.05,
                   pairwise: PairwiseChow | None = None):
    """Greedily merge statistically indistinguishable segments.

    Repeatedly merges the pair with the largest Chow p-value above
    alpha (most similar first), refits the merged node, and re-tests it
    against the remaining segments until every pair is significant.
    Merged labels are concatenated with '-'.
    """
    current = [n if n.fitted else fit_segment(ds, n, spec) for n in segments]
    tests = pairwise or pairwise_segmentation_test(ds, current, spec)
    blocked = set()
    while True:
        candidates = [
            r
            for r in tests.results
            if r.p_value > alpha and (r.label_a, r.label_b) not in blocked
        ]
        if not candidates:
            return current, tests
        best = max(candidates, key=lambda r: (r.p_value, r.label_a, r.label_b))
        by_label = {n.label: n for n in current}
        a, b = by_label[best.label_a], by_label[best.label_b]
        merged = SegmentNode(
            label=f"{a.label}-{b.label}",
            rows=tuple(sorted(a.rows + b.rows)),
            provenance=f"merged: {a.label} + {b.label} (p={best.p_value:.4f})",
        )
        merged = fit_segment(ds, merged, spec)
        if not merged.fitted:
            blocked.add((best.label_a, best.label_b))
            continue
        out = []
        for node in current:
            if node.label == a.label:
                out.append(merged)
            elif node.label != b.label:
                out.append(node)
        current = out
        if len(current) < 2:
            return current, PairwiseChow((), ())
        tests = pairwise_segmentation_test(ds, current, spec)


def nest(ds: Dataset, spatial_segments, by: str, spec: ModelSpec,
         root_label: str = "market") -> SegmentNode:
    """Nest one categorical split inside existing segments.

    Each spatial node gets a fitted child per observed level of ``by``;
    level combinations with no rows are omitted with a note on the
    parent. Children partition their parent's rows.
    """
    col = ds.column(by)
    if col.kind != CATEGORICAL:
        raise DataError(f"nest: column {by!r} is not categorical")
    out_parents = []
    all_rows = []
    for parent in spatial_segments:
        buckets = {level: [] for level in col.levels}
        for i in parent.rows:
            value = col.values[i]
            if value is None:
                raise DataError(f"nest: column {by!r} has missing cells")
            buckets[value].append(i)
        children = []
        omitted = []
        for level in col.levels:
            if not buckets[level]:
                omitted.append(level)
                continue
            child = SegmentNode(
                label=f"{parent.label}-{level}",
                rows=tuple(buckets[level]),
                provenance=f"{parent.provenance}; {by}={level}",
            )
            children.append(fit_segment(ds, child, spec))
        note = parent.note
        if omitted:
            extra = f"no rows for {by} in {{{', '.join(omitted)}}}"
            note = f"{note}; {extra}" if note else extra
        out_parents.append(replace(parent, children=tuple(children), note=note))
        all_rows.extend(parent.rows)
    return SegmentNode(
        label=root_label,
        rows=tuple(sorted(all_rows)),
        children=tuple(out_parents),
        provenance=f"nested {by} within segments",
    )


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    n: int
    r2: float | None
    adj_r2: float | None
    mse: float | None
    bp_p: float | None
    note: str | None = None


def compare_levels(ds: Dataset, nodes, aggregate: SegmentNode | None = None):
    """Fit metrics per node (plus the aggregate first, when given).

    MSE is computed in the response (log) scale on each node's own
    rows; the Breusch-Pagan p-value comes from the node's own design.
    """
    ordered = ([aggregate] if aggregate is not None else []) + list(nodes)
    rows = []
    for node in ordered:
        if not node.fitted:
            rows.append(ComparisonRow(node.label, node.n, None, None, None, None, node.note))
            continue
        fit = node.fit
        bp_p = None
        try:
            dm = build_design(ds.subset(node.rows), node.spec)
            bp_p = diagnostics.breusch_pagan(fit, dm).p_value
        except ToolkitError:
            pass
        rows.append(
            ComparisonRow(node.label, node.n, fit.r2, fit.adj_r2, fit.mse, bp_p, node.note)
        )
    return tuple(rows)


@dataclass(frozen=True)
class PriceSummaryRow:
    label: str
    n: int
    mean: float
    sd: float
    minimum: float
    maximum: float


def price_summary(ds: Dataset, nodes, price_column: str):
    """Mean/sd/min/max of the raw price per node (descriptive layout)."""
    col = ds.column(price_column)
    rows = []
    for node in nodes:
        values = [col.values[i] for i in node.rows if col.values[i] is not None]
        if not values:
            continue
        n = len(values)
        mean = sum(values) / n
        sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
        rows.append(PriceSummaryRow(node.label, n, mean, sd, min(values), max(values)))
    return tuple(rows)

"""Command orchestration shared by the HTTP service and the CLI.

Each command takes in-memory inputs and returns a :class:`RunResult`
holding the assembled report, a summary dict, and the artifact files as
named strings; callers decide where (or whether) to write them. The
``full`` command chains cleaning, descriptives, multicollinearity
screening with the configured drop policy, the aggregate fit with
classical and robust inference plus heteroskedasticity tests,
stratification with pairwise structural-difference tests and merging,
nesting of the second stratifier within the first, and the cross-level
comparison.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from . import diagnostics, estimate, prep
from . import report as rpt
from . import segment as seg
from . import synth as syn
from .errors import DataError
from .formula import (
    ModelSpec,
    NumericTerm,
    build_design,
    drop_terms,
    parse_model_spec,
)
from .segment import PairwiseChow, SegmentNode
from .tabular import Dataset, dataset_csv, dataset_schema

COMMANDS = ("describe", "clean", "fit", "diagnose", "segment", "synth", "full")


@dataclass(frozen=True)
class Thresholds:
    alpha: float = 0.05
    corr: float = 0.8
    gvif: float = diagnostics.GVIF_THRESHOLD
    winsor: float = 0.95
    hc: str = "HC0"

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "corr": self.corr,
            "gvif": self.gvif,
            "winsor": self.winsor,
            "hc": self.hc,
        }


@dataclass
class RunResult:
    command: str
    report: rpt.Report | None
    artifacts: dict
    summary: dict


def config_hash(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def _provenance(command: str, thresholds: Thresholds, seed=None, **extra) -> dict:
    payload = {"command": command, "thresholds": thresholds.to_dict(), "seed": seed}
    payload.update(extra)
    return {"config_hash": config_hash(payload), "seed": seed}


def _apply_winsor_default(plan, thresholds: Thresholds):
    out = []
    for step in plan:
        step = dict(step)
        if step.get("op") == "winsorize" and "percentile" not in step:
            step["percentile"] = thresholds.winsor
        out.append(step)
    return out


def _base_artifacts(report: rpt.Report) -> dict:
    return {"report.json": report.to_json(), "report.txt": rpt.render_text(report)}


# ---------------------------------------------------------------------------
# screening


def _screening_columns(dm, spec: ModelSpec):
    """Realized columns of plain numeric terms: identity values and their
    transforms, but not indicator or interaction columns."""
    numeric_terms = {t.name for t in spec.terms if isinstance(t, NumericTerm)}
    names = []
    for term_name, idx in dm.groups:
        if term_name in numeric_terms:
            names.extend(dm.names[j] for j in idx)
    return names


def _owner_term(spec: ModelSpec, realized: str):
    for t in spec.terms:
        if t.name == realized:
            return t
    return None


def _screen(ds: Dataset, spec: ModelSpec, thresholds: Thresholds, drop):
    """Correlation screen with the configured drop policy, then GVIF.

    Returns (possibly reduced spec, final design, screening doc,
    correlation matrix for export, notes)."""
    notes = []
    dm = build_design(ds, spec)
    doc = {
        "threshold": thresholds.corr,
        "high_correlation": [],
        "dropped_terms": [],
        "unresolved": [],
        "gvif": None,
    }
    cm = None
    names = _screening_columns(dm, spec)
    if len(names) >= 2:
        idx = [dm.names.index(n) for n in names]
        cm = diagnostics.correlation_from_columns(names, dm.X[:, idx])
        pairs = diagnostics.high_correlation_pairs(cm, thresholds.corr)
        doc["high_correlation"] = [{"a": a, "b": b, "r": r} for a, b, r in pairs]
        drop = set(drop or ())
        drop_term_names = set()
        drop_sources = set()
        matched = set()
        for a, b, _ in pairs:
            for member in (a, b):
                term = _owner_term(spec, member)
                if term is None:
                    continue
                if member in drop or term.name in drop:
                    drop_term_names.add(term.name)
                    matched.update({member, term.name} & drop)
                elif term.column in drop:
                    drop_sources.add(term.column)
                    matched.add(term.column)
        for entry in sorted(drop - matched):
            notes.append(f"drop entry {entry!r} matches no flagged pair member")
        if drop_term_names or drop_sources:
            kept = tuple(t for t in spec.terms if t.name not in drop_term_names)
            spec = drop_terms(
                ModelSpec(spec.response, kept, spec.intercept), drop_sources
            )
            if not spec.terms:
                raise DataError("drop policy removed every term from the model")
            doc["dropped_terms"] = sorted(
                drop_term_names | {f"terms on {c}" for c in drop_sources}
            )
            dm = build_design(ds, spec)
            names = _screening_columns(dm, spec)
        if len(names) >= 2:
            idx = [dm.names.index(n) for n in names]
            cm_after = diagnostics.correlation_from_columns(names, dm.X[:, idx])
            for a, b, r in diagnostics.high_correlation_pairs(cm_after, thresholds.corr):
                doc["unresolved"].append(
                    f"{a} / {b} (r={r:.4f}); name one member in the drop policy"
                )
    if len(dm.groups) >= 2:
        doc["gvif"] = rpt.gvif_rows(diagnostics.gvif(dm, thresholds.gvif))
    else:
        notes.append("gvif skipped: model has a single term group")
    return spec, dm, doc, cm, notes


# ---------------------------------------------------------------------------
# fitting


def _fit_bundle(dm, thresholds: Thresholds):
    fit = estimate.fit_ols(dm)
    robust = diagnostics.white_cov(fit, dm, thresholds.hc)
    bp = diagnostics.breusch_pagan(fit, dm)
    notes = []
    try:
        wt = diagnostics.white_test(fit, dm)
    except DataError as exc:
        wt = None
        notes.append(f"white test skipped: {exc}")
    return fit, robust, bp, wt, notes


def _aggregate_doc(fit, robust, bp, wt) -> dict:
    doc = {
        "fit": rpt.fit_table(fit, robust),
        "breusch_pagan": rpt.hetero_dict(bp),
        "white": rpt.hetero_dict(wt) if wt is not None else None,
    }
    return doc


# ---------------------------------------------------------------------------
# segmentation


def _segmentation(ds: Dataset, spec: ModelSpec, by: str, thresholds: Thresholds):
    shared = drop_terms(spec, [by])
    if not shared.terms:
        raise DataError(f"segmentation by {by!r} leaves no regressors")
    nodes = seg.fit_segments(ds, seg.stratify(ds, by), shared)
    pairwise = seg.pairwise_segmentation_test(ds, nodes, shared)
    merged, post = seg.merge_segments(ds, nodes, shared, thresholds.alpha, pairwise)
    doc = {
        "by": by,
        "shared_terms": list(shared.term_names()),
        "segments": [rpt.node_dict(n) for n in nodes],
        "chow": rpt.chow_rows(pairwise),
        "merged": [rpt.node_dict(n, with_table=False) for n in merged],
        "post_merge_chow": rpt.chow_rows(post),
    }
    return nodes, merged, doc


def _nested(ds: Dataset, spatial, by2: str, spec: ModelSpec):
    root = seg.nest(ds, spatial, by2, spec)
    children = [c for parent in root.children for c in parent.children]
    if len(children) >= 2:
        pairwise = seg.pairwise_segmentation_test(ds, children, spec)
    else:
        pairwise = PairwiseChow((), ())
    doc = {
        "tree": rpt.node_dict(root, with_table=True),
        "chow": rpt.chow_rows(pairwise),
    }
    return root, children, doc


def _comparison_docs(ds, nodes, aggregate):
    rows = seg.compare_levels(ds, nodes, aggregate)
    return rows, [
        {
            "label": r.label,
            "n": r.n,
            "r2": r.r2,
            "adj_r2": r.adj_r2,
            "mse": r.mse,
            "bp_p": r.bp_p,
            "note": r.note,
        }
        for r in rows
    ]


def _price_docs(ds, nodes, price_column):
    rows = seg.price_summary(ds, nodes, price_column)
    return [
        {
            "label": r.label,
            "n": r.n,
            "mean": r.mean,
            "sd": r.sd,
            "min": r.minimum,
            "max": r.maximum,
        }
        for r in rows
    ]


def _aggregate_node(ds: Dataset, spec: ModelSpec, fit) -> SegmentNode:
    return SegmentNode(
        label="aggregate", rows=tuple(range(ds.n_rows)), spec=spec, fit=fit
    )


# ---------------------------------------------------------------------------
# commands


def cmd_describe(ds: Dataset, thresholds: Thresholds = Thresholds()) -> RunResult:
    report = rpt.Report(
        command="describe",
        provenance=_provenance("describe", thresholds),
        descriptive=rpt.summary_tables(prep.describe(ds)),
    )
    return RunResult("describe", report, _base_artifacts(report), {"n_rows": ds.n_rows})


def cmd_clean(ds: Dataset, plan, thresholds: Thresholds = Thresholds()) -> RunResult:
    plan = _apply_winsor_default(plan, thresholds)
    cleaned, cleaning = prep.apply_plan(ds, plan)
    report = rpt.Report(
        command="clean",
        provenance=_provenance("clean", thresholds, plan=plan),
        cleaning=cleaning.to_dict(),
        descriptive=rpt.summary_tables(prep.describe(cleaned)),
    )
    artifacts = _base_artifacts(report)
    artifacts["cleaned.csv"] = dataset_csv(cleaned)
    summary = {"n_rows_in": ds.n_rows, "n_rows_out": cleaned.n_rows}
    return RunResult("clean", report, artifacts, summary)


def cmd_fit(ds: Dataset, model_text: str, thresholds: Thresholds = Thresholds()) -> RunResult:
    spec = parse_model_spec(model_text)
    dm = build_design(ds, spec)
    fit, robust, bp, wt, notes = _fit_bundle(dm, thresholds)
    node = _aggregate_node(ds, spec, fit)
    report = rpt.Report(
        command="fit",
        provenance=_provenance("fit", thresholds, model=model_text),
        aggregate=_aggregate_doc(fit, robust, bp, wt),
        notes=tuple(notes),
    )
    artifacts = _base_artifacts(report)
    artifacts["plots/pred_vs_actual.csv"] = rpt.pred_vs_actual_csv([node])
    summary = {"n": fit.n, "k": fit.k, "r2": fit.r2, "adj_r2": fit.adj_r2}
    return RunResult("fit", report, artifacts, summary)


def cmd_diagnose(
    ds: Dataset, model_text: str, thresholds: Thresholds = Thresholds(), drop=()
) -> RunResult:
    spec = parse_model_spec(model_text)
    spec, dm, screening_doc, cm, notes = _screen(ds, spec, thresholds, drop)
    fit, _, bp, wt, fit_notes = _fit_bundle(dm, thresholds)
    report = rpt.Report(
        command="diagnose",
        provenance=_provenance(
            "diagnose", thresholds, model=model_text, drop=sorted(drop or ())
        ),
        screening=screening_doc,
        aggregate={
            "breusch_pagan": rpt.hetero_dict(bp),
            "white": rpt.hetero_dict(wt) if wt is not None else None,
        },
        notes=tuple(notes + fit_notes),
    )
    artifacts = _base_artifacts(report)
    if cm is not None:
        artifacts["corr_matrix.csv"] = rpt.correlation_csv(cm)
    summary = {
        "high_correlation_pairs": len(screening_doc["high_correlation"]),
        "bp_p": bp.p_value,
    }
    return RunResult("diagnose", report, artifacts, summary)


def cmd_segment(
    ds: Dataset, model_text: str, by, thresholds: Thresholds = Thresholds()
) -> RunResult:
    by = list(by)
    if not by:
        raise DataError("segment command needs at least one stratification column")
    spec = parse_model_spec(model_text)
    dm = build_design(ds, spec)
    fit = estimate.fit_ols(dm)
    aggregate = _aggregate_node(ds, spec, fit)

    seg_docs = []
    all_nodes = []
    merged_by_col = {}
    for column in by:
        nodes, merged, doc = _segmentation(ds, spec, column, thresholds)
        seg_docs.append(doc)
        all_nodes.extend(nodes)
        merged_by_col[column] = merged

    nested_doc = None
    nested_children = []
    if len(by) >= 2:
        nested_spec = drop_terms(spec, by[:2])
        if not nested_spec.terms:
            raise DataError("nesting leaves no regressors")
        _, nested_children, nested_doc = _nested(
            ds, merged_by_col[by[0]], by[1], nested_spec
        )
        all_nodes.extend(nested_children)

    comparison_rows, comparison_doc = _comparison_docs(ds, all_nodes, aggregate)
    report = rpt.Report(
        command="segment",
        provenance=_provenance("segment", thresholds, model=model_text, by=by),
        segmentations=tuple(seg_docs),
        nested=nested_doc,
        comparison=tuple(comparison_doc),
        price_summary=tuple(
            _price_docs(ds, [aggregate] + all_nodes, spec.response.column)
        ),
    )
    artifacts = _base_artifacts(report)
    artifacts["plots/pred_vs_actual.csv"] = rpt.pred_vs_actual_csv([aggregate] + all_nodes)
    artifacts["plots/metric_bars.csv"] = rpt.metric_bars_csv(comparison_doc)
    summary = {
        "segments": {d["by"]: [s["label"] for s in d["merged"]] for d in seg_docs}
    }
    return RunResult("segment", report, artifacts, summary)


def cmd_synth(config_doc: dict, seed=None, thresholds: Thresholds = Thresholds()) -> RunResult:
    doc = dict(config_doc)
    if seed is not None:
        doc["seed"] = int(seed)
    cfg = syn.MarketConfig.from_dict(doc)
    ds, truth = syn.generate_market(cfg)
    report = rpt.Report(
        command="synth",
        provenance=_provenance("synth", thresholds, seed=cfg.seed, config=doc),
        notes=(f"generated {ds.n_rows} rows in {len(cfg.segments)} segments",),
    )
    artifacts = {
        "data.csv": dataset_csv(ds),
        "schema.json": dataset_schema(ds).to_json(),
        "truth.json": truth.to_json(),
        "report.json": report.to_json(),
        "report.txt": rpt.render_text(report),
    }
    summary = {
        "n_rows": ds.n_rows,
        "segments": [s.label for s in cfg.segments],
        "seed": cfg.seed,
    }
    return RunResult("synth", report, artifacts, summary)


def cmd_full(
    ds: Dataset,
    model_text: str,
    plan=(),
    by=(),
    drop=(),
    thresholds: Thresholds = Thresholds(),
    seed=None,
) -> RunResult:
    by = list(by)
    plan = _apply_winsor_default(list(plan), thresholds)
    provenance = _provenance(
        "full",
        thresholds,
        seed=seed,
        model=model_text,
        plan=plan,
        by=by,
        drop=sorted(drop or ()),
    )
    notes = []

    cleaned, cleaning = prep.apply_plan(ds, plan)
    stats = prep.describe(cleaned)
    spec = parse_model_spec(model_text)
    spec, dm, screening_doc, cm, screen_notes = _screen(cleaned, spec, thresholds, drop)
    notes.extend(screen_notes)
    fit, robust, bp, wt, fit_notes = _fit_bundle(dm, thresholds)
    notes.extend(fit_notes)
    aggregate = _aggregate_node(cleaned, spec, fit)

    seg_docs = []
    all_nodes = []
    merged_by_col = {}
    for column in by:
        nodes, merged, doc = _segmentation(cleaned, spec, column, thresholds)
        seg_docs.append(doc)
        all_nodes.extend(nodes)
        merged_by_col[column] = merged

    nested_doc = None
    nested_children = []
    if len(by) >= 2:
        nested_spec = drop_terms(spec, by[:2])
        if not nested_spec.terms:
            raise DataError("nesting leaves no regressors")
        _, nested_children, nested_doc = _nested(
            cleaned, merged_by_col[by[0]], by[1], nested_spec
        )
        all_nodes.extend(nested_children)

    comparison_rows, comparison_doc = _comparison_docs(cleaned, all_nodes, aggregate)
    report = rpt.Report(
        command="full",
        provenance=provenance,
        descriptive=rpt.summary_tables(stats),
        cleaning=cleaning.to_dict(),
        screening=screening_doc,
        aggregate=_aggregate_doc(fit, robust, bp, wt),
        segmentations=tuple(seg_docs),
        nested=nested_doc,
        comparison=tuple(comparison_doc),
        price_summary=tuple(
            _price_docs(cleaned, [aggregate] + all_nodes, spec.response.column)
        ),
        notes=tuple(notes),
    )
    artifacts = _base_artifacts(report)
    artifacts["cleaned.csv"] = dataset_csv(cleaned)
    if cm is not None:
        artifacts["corr_matrix.csv"] = rpt.correlation_csv(cm)
    artifacts["plots/pred_vs_actual.csv"] = rpt.pred_vs_actual_csv([aggregate] + all_nodes)
    artifacts["plots/metric_bars.csv"] = rpt.metric_bars_csv(comparison_doc)
    price_col = cleaned.column(spec.response.column)
    artifacts["plots/price_hist.csv"] = rpt.price_hist_csv(price_col.present())
    summary = {
        "n_rows": cleaned.n_rows,
        "r2": fit.r2,
        "adj_r2": fit.adj_r2,
        "bp_p": bp.p_value,
        "segments": {d["by"]: [s["label"] for s in d["merged"]] for d in seg_docs},
    }
    return RunResult("full", report, artifacts, summary)

"""Report assembly and rendering.

A :class:`Report` collects every table the pipeline produces
(descriptives, coefficient tables with classical and robust inference,
screening diagnostics, segmentation trees with structural-difference
matrices, cross-level comparison) plus provenance. It serializes to a
stable JSON document and to aligned plain text; both renderings are
deterministic for identical inputs, so repeated runs produce
byte-identical artifacts.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass

from .diagnostics import CorrelationMatrix, HeteroTestResult, RobustInference, VifReport
from .estimate import FitResult, significance_stars
from .prep import CleaningReport, SummaryStats
from .segment import PairwiseChow, SegmentNode


@dataclass
class Report:
    command: str
    provenance: dict
    descriptive: dict | None = None
    cleaning: dict | None = None
    screening: dict | None = None
    aggregate: dict | None = None
    segmentations: tuple = ()
    nested: dict | None = None
    comparison: tuple = ()
    price_summary: tuple = ()
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "provenance": self.provenance,
            "descriptive": self.descriptive,
            "cleaning": self.cleaning,
            "screening": self.screening,
            "aggregate": self.aggregate,
            "segmentations": list(self.segmentations),
            "nested": self.nested,
            "comparison": list(self.comparison),
            "price_summary": list(self.price_summary),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def summary_tables(stats: SummaryStats) -> dict:
    numeric = []
    for name, s in stats.numeric.items():
        numeric.append(
            {
                "variable": name,
                "mean": s.mean,
                "sd": s.sd,
                "min": s.minimum,
                "max": s.maximum,
                "cv_percent": None if s.cv is None else 100.0 * s.cv,
                "count": s.count,
            }
        )
    categorical = []
    for name, rows in stats.categorical.items():
        categorical.append(
            {
                "variable": name,
                "levels": [
                    {"level": r.level, "count": r.count, "percent": r.percent}
                    for r in rows
                ],
            }
        )
    return {"n_rows": stats.n_rows, "numeric": numeric, "categorical": categorical}


def fit_table(fit: FitResult, robust: RobustInference | None = None) -> dict:
    rows = []
    for j, name in enumerate(fit.names):
        row = {
            "name": name,
            "coeff": float(fit.beta[j]),
            "se": float(fit.se[j]),
            "t": float(fit.t_stat[j]),
            "p": float(fit.p_value[j]),
            "stars": significance_stars(float(fit.p_value[j])),
        }
        if robust is not None:
            row.update(
                {
                    "robust_se": float(robust.se[j]),
                    "robust_t": float(robust.t_stat[j]),
                    "robust_p": float(robust.p_value[j]),
                    "robust_stars": significance_stars(float(robust.p_value[j])),
                }
            )
        rows.append(row)
    out = {
        "coefficients": rows,
        "n": fit.n,
        "k": fit.k,
        "r2": fit.r2,
        "adj_r2": fit.adj_r2,
        "f_stat": fit.f_stat,
        "f_df": list(fit.f_df),
        "f_p": fit.f_p,
        "ssr": fit.ssr,
        "mse": fit.mse,
    }
    if robust is not None:
        out["robust_variant"] = robust.variant
    return out


def hetero_dict(result: HeteroTestResult) -> dict:
    return {
        "test": result.name,
        "statistic": result.statistic,
        "df": result.df,
        "p_value": result.p_value,
        "notes": list(result.notes),
    }


def gvif_rows(report: VifReport) -> dict:
    return {
        "threshold": report.threshold,
        "terms": [
            {
                "term": e.term,
                "gvif": None if math.isinf(e.gvif) else e.gvif,
                "df": e.df,
                "gvif_scaled": None if math.isinf(e.gvif_scaled) else e.gvif_scaled,
                "flagged": e.flagged,
            }
            for e in report.entries
        ],
    }


def chow_rows(pairwise: PairwiseChow) -> dict:
    return {
        "pairs": [
            {
                "a": r.label_a,
                "b": r.label_b,
                "f": r.f_stat,
                "df": [r.df1, r.df2],
                "p": r.p_value,
                "stars": r.stars,
            }
            for r in pairwise.results
        ],
        "failures": [
            {"a": a, "b": b, "reason": reason} for a, b, reason in pairwise.failures
        ],
    }


def node_dict(node: SegmentNode, with_table: bool = True) -> dict:
    out = {
        "label": node.label,
        "n": node.n,
        "provenance": node.provenance,
        "note": node.note,
        "fitted": node.fitted,
    }
    if node.fitted and with_table:
        out["fit"] = fit_table(node.fit)
    if node.children:
        out["children"] = [node_dict(c, with_table) for c in node.children]
    return out


# ---------------------------------------------------------------------------
# plain-text rendering


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        ax = abs(x)
        if ax != 0 and (ax >= 1e7 or ax < 1e-4):
            return f"{x:.4e}"
        return f"{x:,.4f}"
    return str(x)


def _text_table(headers, rows) -> str:
    cells = [list(map(_fmt, headers))] + [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(headers))]
    lines = []
    for i, row in enumerate(cells):
        line = "  ".join(
            row[j].ljust(widths[j]) if j == 0 else row[j].rjust(widths[j])
            for j in range(len(row))
        )
        lines.append(line.rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths).rstrip())
    return "\n".join(lines)


def _render_descriptive(doc: dict, out: list):
    out.append(f"Descriptive statistics (n = {doc['n_rows']})")
    if doc["numeric"]:
        rows = [
            [
                r["variable"],
                r["mean"],
                r["sd"],
                r["min"],
                r["max"],
                "-" if r["cv_percent"] is None else f"{r['cv_percent']:.0f}%",
            ]
            for r in doc["numeric"]
        ]
        out.append(_text_table(["variable", "mean", "sd", "min", "max", "CV"], rows))
    for block in doc["categorical"]:
        out.append(f"\n{block['variable']}:")
        rows = [[r["level"], r["count"], f"{r['percent']:.2f}%"] for r in block["levels"]]
        out.append(_text_table(["level", "count", "percent"], rows))


def _render_fit(doc: dict, out: list, title: str):
    out.append(title)
    robust = "robust_variant" in doc
    headers = ["variable", "coeff", "se", "t"]
    if robust:
        headers += [f"se [{doc['robust_variant']}]", "t [robust]"]
    rows = []
    for r in doc["coefficients"]:
        row = [r["name"], r["coeff"], r["se"], f"{_fmt(r['t'])}{r['stars']}"]
        if robust:
            row += [r["robust_se"], f"{_fmt(r['robust_t'])}{r['robust_stars']}"]
        rows.append(row)
    out.append(_text_table(headers, rows))
    f_txt = "-"
    if doc["f_stat"] is not None:
        f_txt = f"{_fmt(doc['f_stat'])} on ({doc['f_df'][0]}, {doc['f_df'][1]}) df, p = {_fmt(doc['f_p'])}"
    out.append(
        f"n = {doc['n']}   R^2 = {_fmt(doc['r2'])}   adj R^2 = {_fmt(doc['adj_r2'])}   "
        f"F = {f_txt}"
    )
    out.append("stars: *** p<0.01, ** p<0.05, * p<0.1")


def _render_chow(doc: dict, out: list, title: str):
    out.append(title)
    rows = [
        [f"{r['a']} with {r['b']}", f"{_fmt(r['f'])}{r['stars']}", f"({r['df'][0]}, {r['df'][1]})", r["p"]]
        for r in doc["pairs"]
    ]
    if rows:
        out.append(_text_table(["submarkets", "Chow F", "df", "p"], rows))
    for f in doc["failures"]:
        out.append(f"  not testable: {f['a']} with {f['b']} ({f['reason']})")


def render_text(report: Report) -> str:
    out: list = []
    out.append(f"== {report.command} report ==")
    out.append(
        "config " + report.provenance.get("config_hash", "-")
        + (f"  seed {report.provenance['seed']}" if report.provenance.get("seed") is not None else "")
    )
    if report.cleaning is not None and report.cleaning["steps"]:
        out.append("\n-- cleaning --")
        for step in report.cleaning["steps"]:
            out.append(f"  {step}")
    if report.descriptive is not None:
        out.append("\n-- descriptives --")
        _render_descriptive(report.descriptive, out)
    if report.screening is not None:
        out.append("\n-- multicollinearity screening --")
        pairs = report.screening.get("high_correlation", [])
        if pairs:
            rows = [[p["a"], p["b"], p["r"]] for p in pairs]
            out.append(_text_table(["column", "column", "r"], rows))
        else:
            out.append(f"no |r| above {report.screening.get('threshold')}")
        dropped = report.screening.get("dropped_terms", [])
        if dropped:
            out.append("dropped terms: " + ", ".join(dropped))
        for warn in report.screening.get("unresolved", []):
            out.append(f"unresolved pair: {warn}")
        if report.screening.get("gvif"):
            gv = report.screening["gvif"]
            rows = [
                [
                    e["term"],
                    "inf" if e["gvif"] is None else e["gvif"],
                    e["df"],
                    "inf" if e["gvif_scaled"] is None else e["gvif_scaled"],
                    "FLAG" if e["flagged"] else "",
                ]
                for e in gv["terms"]
            ]
            out.append(f"GVIF (cutoff {gv['threshold']:.2f} on GVIF^(1/2df)):")
            out.append(_text_table(["term", "GVIF", "df", "GVIF^(1/2df)", ""], rows))
    if report.aggregate is not None:
        agg = report.aggregate
        if "fit" in agg:
            out.append("\n-- aggregate model --")
            _render_fit(agg["fit"], out, "coefficients (classical and robust):")
        for key in ("breusch_pagan", "white"):
            if agg.get(key):
                t = agg[key]
                out.append(
                    f"{t['test']}: statistic {_fmt(t['statistic'])} on {t['df']} df, "
                    f"p = {_fmt(t['p_value'])}"
                )
                for note in t["notes"]:
                    out.append(f"  note: {note}")
    for seg_doc in report.segmentations:
        out.append(f"\n-- segmentation by {seg_doc['by']} --")
        rows = [
            [s["label"], s["n"], "fitted" if s["fitted"] else (s["note"] or "unfitted")]
            for s in seg_doc["segments"]
        ]
        out.append(_text_table(["segment", "n", "status"], rows))
        _render_chow(seg_doc["chow"], out, "pairwise structural-difference tests:")
        merged = seg_doc.get("merged", [])
        labels = [m["label"] for m in merged]
        out.append("after merging: " + ", ".join(labels))
    if report.nested is not None:
        out.append("\n-- nested segmentation --")
        for parent in report.nested["tree"]["children"]:
            kids = parent.get("children", [])
            desc = ", ".join(
                f"{c['label']} (n={c['n']}{'' if c['fitted'] else ', unfitted'})"
                for c in kids
            )
            out.append(f"{parent['label']}: {desc}")
        _render_chow(report.nested["chow"], out, "nested pairwise tests:")
    if report.comparison:
        out.append("\n-- model comparison --")
        rows = [
            [
                r["label"],
                r["n"],
                r["r2"],
                r["adj_r2"],
                r["mse"],
                r["bp_p"],
            ]
            for r in report.comparison
        ]
        out.append(_text_table(["segment", "n", "R^2", "adj R^2", "MSE", "BP p"], rows))
    if report.price_summary:
        out.append("\n-- price summary --")
        rows = [
            [r["label"], r["n"], r["mean"], r["sd"], r["min"], r["max"]]
            for r in report.price_summary
        ]
        out.append(_text_table(["segment", "n", "mean", "sd", "min", "max"], rows))
    if report.notes:
        out.append("\n-- notes --")
        for note in report.notes:
            out.append(f"  {note}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# plot data


def _csv_text(headers, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    writer.writerows(rows)
    return buf.getvalue()


def pred_vs_actual_csv(nodes) -> str:
    """Per-row actual and predicted response for every fitted node, in
    the log (model) scale and back-transformed to the price scale."""
    rows = []
    for node in nodes:
        if not node.fitted:
            continue
        is_log = node.spec is not None and node.spec.response.transform == "ln"
        offset = node.spec.response.offset if node.spec is not None else 0.0
        fit = node.fit
        for pos, row_index in enumerate(node.rows):
            pred = float(fit.fitted[pos])
            actual = pred + float(fit.residuals[pos])
            if is_log:
                a_price = math.exp(actual) - offset
                p_price = math.exp(pred) - offset
            else:
                a_price, p_price = actual, pred
            rows.append(
                [node.label, row_index, repr(actual), repr(pred), repr(a_price), repr(p_price)]
            )
    return _csv_text(
        ["segment", "row", "actual_log", "predicted_log", "actual_price", "predicted_price"],
        rows,
    )


def metric_bars_csv(comparison_rows) -> str:
    rows = [
        [
            r["label"],
            r["n"],
            "" if r["r2"] is None else repr(r["r2"]),
            "" if r["adj_r2"] is None else repr(r["adj_r2"]),
            "" if r["mse"] is None else repr(r["mse"]),
            "" if r["bp_p"] is None else repr(r["bp_p"]),
        ]
        for r in comparison_rows
    ]
    return _csv_text(["segment", "n", "r2", "adj_r2", "mse", "bp_pvalue"], rows)


def price_hist_csv(values) -> str:
    """Binned counts of the raw values and of their natural logs.

    Bin count follows the Sturges rule; each scale's counts sum to the
    number of values.
    """
    values = [float(v) for v in values if v is not None]
    rows = []
    for scale, data in (("price", values), ("log_price", [math.log(v) for v in values if v > 0])):
        if not data:
            continue
        n = len(data)
        bins = max(1, math.ceil(math.log2(n)) + 1) if n > 1 else 1
        lo, hi = min(data), max(data)
        if hi == lo:
            rows.append([scale, repr(lo), repr(hi), n])
            continue
        width = (hi - lo) / bins
        counts = [0] * bins
        for v in data:
            j = min(int((v - lo) / width), bins - 1)
            counts[j] += 1
        for j in range(bins):
            rows.append(
                [scale, repr(lo + j * width), repr(lo + (j + 1) * width), counts[j]]
            )
    return _csv_text(["scale", "bin_left", "bin_right", "count"], rows)


def correlation_csv(cm: CorrelationMatrix) -> str:
    headers = ["column"] + list(cm.names)
    rows = []
    for i, name in enumerate(cm.names):
        rows.append([name] + [repr(float(cm.r[i, j])) for j in range(len(cm.names))])
    return _csv_text(headers, rows)


def cleaning_dict(rep: CleaningReport) -> dict:
    return rep.to_dict()


# ---------------------------------------------------------------------------
# output


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_artifacts(out_dir, artifacts: dict) -> list:
    """Write every artifact atomically under ``out_dir``; returns paths."""
    written = []
    for rel, text in artifacts.items():
        path = os.path.join(out_dir, rel)
        write_atomic(path, text)
        written.append(path)
    return written

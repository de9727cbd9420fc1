"""Multicollinearity screening and heteroskedasticity machinery.

Screening: pairwise Pearson correlations over complete cases between
numeric columns, plus generalized variance inflation factors computed
per term group on the correlation matrix of the centered design
(Fox-Monette determinant ratio). Single-column groups reduce to the
classical VIF = 1/(1 - R_j^2).

Heteroskedasticity: the White sandwich covariance (HC0, optionally the
n/(n-k) scaled HC1), the LM form of the Breusch-Pagan test (squared
residuals on the original regressors), and the White test on the
expanded design of regressors, squares, and cross products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dist
from .errors import DataError, NumericalError, RankDeficiencyError
from .estimate import FitResult, _back_substitute, _check_rank, _householder
from .formula import DesignMatrix
from .tabular import NUMERIC, Dataset

GVIF_THRESHOLD = math.sqrt(5.0)  # the conventional sqrt(5) ~ 2.24 screening cutoff


@dataclass(eq=False)
class CorrelationMatrix:
    names: tuple
    r: np.ndarray

    def value(self, a: str, b: str) -> float:
        return float(self.r[self.names.index(a), self.names.index(b)])


def _pairwise_r(xa, xb, ma, mb, name_a, name_b) -> float:
    keep = [i for i in range(len(xa)) if not (ma[i] or mb[i])]
    if len(keep) < 2:
        raise DataError(
            f"correlation {name_a!r}/{name_b!r}: fewer than 2 complete pairs"
        )
    a = np.asarray([xa[i] for i in keep], dtype=float)
    b = np.asarray([xb[i] for i in keep], dtype=float)
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0:
        raise DataError(f"correlation: column {name_a!r} has zero variance")
    if vb == 0.0:
        raise DataError(f"correlation: column {name_b!r} has zero variance")
    return float(da @ db) / math.sqrt(va * vb)


def pearson_matrix(ds: Dataset, columns) -> CorrelationMatrix:
    """Pairwise Pearson correlations over complete cases."""
    columns = tuple(columns)
    cols = {}
    for name in columns:
        col = ds.column(name)
        if col.kind != NUMERIC:
            raise DataError(f"correlation requires numeric columns, {name!r} is not")
        cols[name] = col
    m = len(columns)
    r = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            a, b = columns[i], columns[j]
            rij = _pairwise_r(
                cols[a].values, cols[b].values, cols[a].missing, cols[b].missing, a, b
            )
            r[i, j] = r[j, i] = rij
    return CorrelationMatrix(columns, r)


def correlation_from_columns(names, matrix) -> CorrelationMatrix:
    """Correlation matrix of already-realized design columns."""
    X = np.asarray(matrix, dtype=float)
    centered = X - X.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    for j, nrm in enumerate(norms):
        if nrm == 0.0:
            raise DataError(f"correlation: column {names[j]!r} has zero variance")
    Z = centered / norms
    return CorrelationMatrix(tuple(names), Z.T @ Z)


def high_correlation_pairs(cm: CorrelationMatrix, threshold: float = 0.8):
    """Off-diagonal pairs with |r| above the threshold, strongest first."""
    pairs = []
    m = len(cm.names)
    for i in range(m):
        for j in range(i + 1, m):
            rij = float(cm.r[i, j])
            if abs(rij) > threshold:
                pairs.append((cm.names[i], cm.names[j], rij))
    pairs.sort(key=lambda t: (-abs(t[2]), t[0], t[1]))
    return tuple(pairs)


@dataclass(frozen=True)
class VifEntry:
    term: str
    gvif: float
    df: int
    gvif_scaled: float  # GVIF^(1/(2 df)); comparable to sqrt(VIF)
    flagged: bool


@dataclass(frozen=True)
class VifReport:
    entries: tuple
    threshold: float


def _logdet(matrix: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(matrix)
    if sign <= 0:
        return -math.inf
    return float(value)


def gvif(dm: DesignMatrix, threshold: float = GVIF_THRESHOLD) -> VifReport:
    """Generalized variance inflation factors per design term.

    GVIF_g = det(R_gg) det(R_others) / det(R) over the correlation
    matrix of the centered non-intercept design columns, with
    df = number of columns in the group. A singular correlation matrix
    reports an infinite GVIF rather than raising.
    """
    offset = 1 if dm.has_intercept else 0
    names = dm.names[offset:]
    if not names:
        raise DataError("gvif: design has no non-intercept columns")
    groups = [(term, tuple(j - offset for j in idx)) for term, idx in dm.groups]
    if len(groups) < 2:
        raise DataError("gvif needs at least 2 term groups")
    cm = correlation_from_columns(names, dm.X[:, offset:])
    log_det_full = _logdet(cm.r)
    entries = []
    all_idx = set(range(len(names)))
    for term, idx in groups:
        own = list(idx)
        rest = sorted(all_idx - set(own))
        if not rest:
            raise DataError(f"gvif: group {term!r} covers the whole design")
        log_num = _logdet(cm.r[np.ix_(own, own)]) + _logdet(cm.r[np.ix_(rest, rest)])
        if log_det_full == -math.inf:
            value = math.inf
        else:
            value = math.exp(log_num - log_det_full)
        df = len(own)
        scaled = value ** (1.0 / (2.0 * df)) if math.isfinite(value) else math.inf
        entries.append(VifEntry(term, value, df, scaled, scaled > threshold))
    return VifReport(tuple(entries), threshold)


@dataclass(eq=False)
class RobustInference:
    variant: str
    cov: np.ndarray
    se: np.ndarray
    t_stat: np.ndarray
    p_value: np.ndarray


def white_cov(fit: FitResult, dm: DesignMatrix, variant: str = "HC0") -> RobustInference:
    """Heteroskedasticity-consistent sandwich covariance.

    (X'X)^-1 X' diag(e^2) X (X'X)^-1; HC1 multiplies by n/(n-k).
    Robust t statistics keep n-k degrees of freedom.
    """
    if variant not in ("HC0", "HC1"):
        raise DataError(f"unknown robust variant {variant!r}")
    X = dm.X
    e = fit.residuals
    meat = (X * (e * e)[:, None]).T @ X
    cov = fit.xtx_inv @ meat @ fit.xtx_inv
    if variant == "HC1":
        cov = cov * (fit.n / (fit.n - fit.k))
    se = np.sqrt(np.diag(cov))
    t = np.empty(fit.k)
    for j in range(fit.k):
        if se[j] > 0:
            t[j] = fit.beta[j] / se[j]
        else:
            t[j] = math.inf if fit.beta[j] > 0 else (-math.inf if fit.beta[j] < 0 else 0.0)
    p = np.array([dist.t_two_sided_p(float(v), fit.df_resid) for v in t])
    return RobustInference(variant, cov, se, t, p)


@dataclass(frozen=True)
class HeteroTestResult:
    name: str
    statistic: float
    df: int
    p_value: float
    notes: tuple = ()


def _aux_r2(X: np.ndarray, y: np.ndarray, names) -> float:
    """R^2 of an auxiliary regression; zero when y has no variance."""
    ybar = float(y.mean())
    sst = float(((y - ybar) ** 2).sum())
    # constant within floating noise: rounding residue is not variation
    if sst <= 0.0 or math.sqrt(sst / len(y)) <= 1e-12 * abs(ybar):
        return 0.0
    R, qty, _ = _householder(X, y)
    try:
        _check_rank(R, names)
    except RankDeficiencyError as exc:
        raise NumericalError(f"auxiliary design rank-deficient: {exc}") from None
    beta = _back_substitute(R, qty)
    resid = y - X @ beta
    return 1.0 - float(resid @ resid) / sst


def breusch_pagan(fit: FitResult, dm: DesignMatrix) -> HeteroTestResult:
    """LM form: n R^2 from regressing e^2 on the original regressors,
    referred to chi-squared with (regressors - intercept) df."""
    e2 = fit.residuals**2
    df = dm.k - (1 if dm.has_intercept else 0)
    if df < 1:
        raise DataError("breusch-pagan needs at least one non-intercept regressor")
    r2_aux = _aux_r2(dm.X, e2, dm.names)
    lm = dm.n * r2_aux
    return HeteroTestResult("breusch_pagan", lm, df, dist.chi2_sf(lm, df))


def _dedup_columns(names, cols):
    kept_names: list = []
    kept: list = []
    dropped = 0
    for name, col in zip(names, cols):
        if np.ptp(col) == 0.0:  # constant: intercept already covers it
            dropped += 1
            continue
        duplicate = any(np.array_equal(col, other) for other in kept)
        if duplicate:
            dropped += 1
            continue
        kept_names.append(name)
        kept.append(col)
    return kept_names, kept, dropped


def white_test(fit: FitResult, dm: DesignMatrix) -> HeteroTestResult:
    """White test: n R^2 from regressing e^2 on regressors, their squares
    and cross products (deduplicated), chi-squared df = columns - 1."""
    offset = 1 if dm.has_intercept else 0
    base_names = list(dm.names[offset:])
    base_cols = [dm.X[:, offset + j] for j in range(dm.k - offset)]
    if not base_cols:
        raise DataError("white test needs at least one non-intercept regressor")
    cand_names = list(base_names)
    cand_cols = list(base_cols)
    for i in range(len(base_cols)):
        for j in range(i, len(base_cols)):
            if i == j:
                cand_names.append(f"{base_names[i]}^2")
            else:
                cand_names.append(f"{base_names[i]}*{base_names[j]}")
            cand_cols.append(base_cols[i] * base_cols[j])
    kept_names, kept_cols, dropped = _dedup_columns(cand_names, cand_cols)
    if not kept_cols:
        raise DataError("white test: all auxiliary columns degenerate")
    aux = np.column_stack([np.ones(dm.n)] + kept_cols)
    if dm.n <= aux.shape[1]:
        raise DataError(
            f"white test needs n > auxiliary columns (n={dm.n}, cols={aux.shape[1]})"
        )
    e2 = fit.residuals**2
    r2_aux = _aux_r2(aux, e2, ["(aux intercept)"] + kept_names)
    df = aux.shape[1] - 1
    lm = dm.n * r2_aux
    notes = (f"{dropped} degenerate auxiliary columns removed",) if dropped else ()
    return HeteroTestResult("white", lm, df, dist.chi2_sf(lm, df), notes)

"""Ordinary least squares with classical inference.

The solver uses Householder reflections applied to the augmented matrix
[X | y], never forming X'X, and reports the dependent column set when
the triangular factor signals rank deficiency. The explicit
normal-equation route (X'X)^-1 X'y exists only as an independent test
oracle, not here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dist
from .errors import DataError, RankDeficiencyError
from .formula import DesignMatrix

RANK_RTOL = 1e-10  # column dependent when |R_jj| < RANK_RTOL * max |R_ii|


def _householder(X: np.ndarray, y: np.ndarray):
    """Reduce [X | y] to upper-triangular form.

    Returns (R, qty, tail_ss): the k-by-k triangular factor, the first k
    entries of Q'y, and the squared norm of the remaining entries of
    Q'y (the residual sum of squares of the full-rank problem).
    """
    n, k = X.shape
    A = np.column_stack([X.astype(float, copy=True), y.astype(float, copy=True)])
    for j in range(k):
        col = A[j:, j]
        norm = math.sqrt(float(col @ col))
        if norm == 0.0:
            continue
        v = col.copy()
        v[0] += math.copysign(norm, v[0])
        vnorm2 = float(v @ v)
        if vnorm2 == 0.0:
            continue
        A[j:, j:] -= np.outer(v, (2.0 / vnorm2) * (v @ A[j:, j:]))
    R = np.triu(A[:k, :k])
    qty = A[:k, k]
    tail = A[k:, k]
    return R, qty, float(tail @ tail)


def _check_rank(R: np.ndarray, names):
    diag = np.abs(np.diag(R))
    scale = diag.max(initial=0.0)
    bad = diag < RANK_RTOL * scale if scale > 0 else np.ones_like(diag, dtype=bool)
    if bad.any():
        labels = names if names is not None else [f"col{j}" for j in range(len(diag))]
        raise RankDeficiencyError([labels[j] for j in np.flatnonzero(bad)])


def _back_substitute(R: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = R.shape[0]
    x = np.zeros(k)
    for i in range(k - 1, -1, -1):
        x[i] = (b[i] - R[i, i + 1 :] @ x[i + 1 :]) / R[i, i]
    return x


def solve_least_squares(X: np.ndarray, y: np.ndarray, names=None) -> np.ndarray:
    """Minimize ||y - X b||^2 via Householder QR.

    Requires n >= k and full column rank; raises RankDeficiencyError
    naming the dependent columns otherwise.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DataError(f"incompatible shapes X{X.shape}, y{y.shape}")
    n, k = X.shape
    if n < k:
        raise DataError(f"need at least as many rows as columns (n={n}, k={k})")
    R, qty, _ = _householder(X, y)
    _check_rank(R, names)
    return _back_substitute(R, qty)


def _inv_from_r(R: np.ndarray) -> np.ndarray:
    """(X'X)^-1 = R^-1 R^-T from the triangular factor."""
    k = R.shape[0]
    rinv = np.zeros((k, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = 1.0
        rinv[:, j] = _back_substitute(R, e)
    return rinv @ rinv.T


@dataclass(eq=False)
class FitResult:
    names: tuple
    beta: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    ssr: float
    sigma2: float
    cov: np.ndarray
    se: np.ndarray
    t_stat: np.ndarray
    p_value: np.ndarray
    r2: float
    adj_r2: float
    f_stat: float | None
    f_df: tuple
    f_p: float | None
    n: int
    k: int
    has_intercept: bool
    xtx_inv: np.ndarray

    @property
    def df_resid(self) -> int:
        return self.n - self.k

    @property
    def mse(self) -> float:
        """Training mean squared error, SSR / n."""
        return self.ssr / self.n


def adjusted_r2(r2: float, n: int, k: int) -> float:
    """1 - (1 - R^2)(n - 1)/(n - k), with k counting the intercept."""
    if n <= k:
        raise DataError(f"adjusted R^2 needs n > k (n={n}, k={k})")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - k)


def fit_ols(dm: DesignMatrix) -> FitResult:
    """Fit by least squares and compute the classical inference set.

    sigma^2 is SSR/(n-k); the coefficient covariance is sigma^2 (X'X)^-1;
    t statistics use n-k degrees of freedom; R^2 compares against the
    intercept-only model; the F statistic jointly tests all non-intercept
    coefficients with (k-1, n-k) degrees of freedom.
    """
    X, y, names = dm.X, dm.y, dm.names
    n, k = X.shape
    if n <= k:
        raise DataError(f"inference needs n > k (n={n}, k={k})")
    R, qty, _ = _householder(X, y)
    _check_rank(R, names)
    beta = _back_substitute(R, qty)
    fitted = X @ beta
    residuals = y - fitted
    ssr = float(residuals @ residuals)
    dof = n - k
    sigma2 = ssr / dof
    xtx_inv = _inv_from_r(R)
    cov = sigma2 * xtx_inv
    se = np.sqrt(np.diag(cov))
    t_stat = np.empty(k)
    for j in range(k):
        if se[j] > 0:
            t_stat[j] = beta[j] / se[j]
        else:  # zero residual variance: exact fit
            t_stat[j] = math.inf if beta[j] > 0 else (-math.inf if beta[j] < 0 else 0.0)
    p_value = np.array([dist.t_two_sided_p(float(t), dof) for t in t_stat])

    ybar = float(y.mean())
    sst = float(((y - ybar) ** 2).sum())
    if sst > 0:
        r2 = 1.0 - ssr / sst
    else:
        r2 = 1.0 if ssr <= 1e-30 else 0.0
    adj = adjusted_r2(r2, n, k)

    q = k - 1 if dm.has_intercept else k
    if q >= 1:
        if r2 < 1.0:
            f_stat = (r2 / q) / ((1.0 - r2) / dof)
            f_p = dist.f_sf(f_stat, q, dof)
        else:
            f_stat = math.inf
            f_p = 0.0
    else:
        f_stat = None
        f_p = None

    return FitResult(
        names=names,
        beta=beta,
        fitted=fitted,
        residuals=residuals,
        ssr=ssr,
        sigma2=sigma2,
        cov=cov,
        se=se,
        t_stat=t_stat,
        p_value=p_value,
        r2=r2,
        adj_r2=adj,
        f_stat=f_stat,
        f_df=(q, dof),
        f_p=f_p,
        n=n,
        k=k,
        has_intercept=dm.has_intercept,
        xtx_inv=xtx_inv,
    )


def predict(fit: FitResult, dm: DesignMatrix) -> np.ndarray:
    """X beta-hat on a design whose columns match the fit by name and order."""
    if dm.names != fit.names:
        raise DataError(
            f"design columns {dm.names} do not match fit columns {fit.names}"
        )
    return dm.X @ fit.beta


def back_transform(values) -> np.ndarray:
    """Element-wise exp, mapping log-scale predictions back to levels.

    This is the naive retransformation; no smearing correction is
    applied.
    """
    return np.exp(np.asarray(values, dtype=float))


def mse(actual, predicted) -> float:
    """Mean squared error between two equal-length vectors."""
    a = np.asarray(actual, dtype=float)
    b = np.asarray(predicted, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"mse needs equal-length vectors, got {a.shape} and {b.shape}")
    if a.size == 0:
        raise DataError("mse of empty vectors is undefined")
    d = a - b
    return float(d @ d) / a.size


def significance_stars(p: float) -> str:
    """Table-note convention: *** p<0.01, ** p<0.05, * p<0.1."""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""

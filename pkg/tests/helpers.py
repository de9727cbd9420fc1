"""Independent oracles and fixture builders for the test suite.

Everything here deliberately avoids the library's own computation
paths: least squares goes through explicit normal-equation inversion,
distribution values come from closed forms or numerical quadrature, and
the sandwich covariance is assembled as the literal triple product.
"""

from __future__ import annotations

import math

import numpy as np

from hedonic.tabular import Dataset, categorical_column, numeric_column


# ---------------------------------------------------------------------------
# least-squares oracles (normal equations, never QR)


def ols_normal_equations(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.linalg.inv(X.T @ X) @ X.T @ y


def classical_cov_bruteforce(X, y):
    """sigma^2 (X'X)^-1 with sigma^2 = SSR/(n-k), via explicit inversion."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = ols_normal_equations(X, y)
    e = y - X @ beta
    n, k = X.shape
    sigma2 = float(e @ e) / (n - k)
    return beta, e, sigma2 * np.linalg.inv(X.T @ X)


def sandwich_bruteforce(X, e, hc1=False):
    """(X'X)^-1 X' diag(e^2) X (X'X)^-1 assembled literally."""
    X = np.asarray(X, dtype=float)
    e = np.asarray(e, dtype=float)
    n, k = X.shape
    bread = np.linalg.inv(X.T @ X)
    meat = X.T @ np.diag(e * e) @ X
    cov = bread @ meat @ bread
    if hc1:
        cov = cov * n / (n - k)
    return cov


def r2_bruteforce(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = ols_normal_equations(X, y)
    e = y - X @ beta
    sst = float(((y - y.mean()) ** 2).sum())
    return 1.0 - float(e @ e) / sst


def ssr_bruteforce(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = ols_normal_equations(X, y)
    e = y - X @ beta
    return float(e @ e)


# ---------------------------------------------------------------------------
# distribution oracles


def chi2_cdf_closed(x: float, df: int) -> float:
    """Chi-squared CDF for integer df via the erf / exponential closed
    forms and the two-step downward recurrence (no incomplete gamma)."""
    if x <= 0:
        return 0.0
    if df == 1:
        return math.erf(math.sqrt(x / 2.0))
    if df == 2:
        return 1.0 - math.exp(-x / 2.0)
    prev = chi2_cdf_closed(x, df - 2)
    k = df - 2
    return prev - (x / 2.0) ** (k / 2.0) * math.exp(-x / 2.0) / math.gamma(k / 2.0 + 1.0)


def adaptive_quad(f, a: float, b: float, tol: float = 1e-12) -> float:
    """Adaptive Simpson integration."""

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, eps, depth):
        mid = (lo + hi) / 2.0
        lmid = (lo + mid) / 2.0
        rmid = (mid + hi) / 2.0
        fl = f(lmid)
        fr = f(rmid)
        left = simpson(lo, mid, flo, fl, fmid)
        right = simpson(mid, hi, fmid, fr, fhi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(lo, mid, flo, fl, fmid, left, eps / 2.0, depth - 1) + recurse(
            mid, hi, fmid, fr, fhi, right, eps / 2.0, depth - 1
        )

    mid = (a + b) / 2.0
    fa, fm, fb = f(a), f(mid), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 48)


def t_cdf_quad(x: float, df: float) -> float:
    """Student-t CDF by quadrature of the density."""
    c = math.gamma((df + 1.0) / 2.0) / (math.sqrt(df * math.pi) * math.gamma(df / 2.0))

    def density(t):
        return c * (1.0 + t * t / df) ** (-(df + 1.0) / 2.0)

    if x == 0:
        return 0.5
    sign = 1.0 if x > 0 else -1.0
    return 0.5 + sign * adaptive_quad(density, 0.0, abs(x))


def f_cdf_quad(x: float, d1: float, d2: float) -> float:
    """F CDF by quadrature (d1 >= 2 keeps the density bounded at 0)."""
    assert d1 >= 2
    log_c = (
        (d1 / 2.0) * math.log(d1 / d2)
        - (math.lgamma(d1 / 2.0) + math.lgamma(d2 / 2.0) - math.lgamma((d1 + d2) / 2.0))
    )

    def density(v):
        if v <= 0:
            return 0.0 if d1 > 2 else math.exp(log_c)
        return math.exp(
            log_c + (d1 / 2.0 - 1.0) * math.log(v) - ((d1 + d2) / 2.0) * math.log(1.0 + d1 * v / d2)
        )

    if x <= 0:
        return 0.0
    return adaptive_quad(density, 0.0, x)


def invert_cdf(cdf, p: float, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Bisection inverse of a monotone CDF (test utility)."""
    flo, fhi = cdf(lo), cdf(hi)
    assert flo <= p <= fhi, (flo, p, fhi)
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if hi - lo < tol:
            return mid
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


# ---------------------------------------------------------------------------
# dataset builders


def make_dataset(**columns) -> Dataset:
    """Numeric columns from lists of numbers/None, categorical from lists
    of strings/None."""
    out = {}
    for name, values in columns.items():
        non_missing = [v for v in values if v is not None]
        if non_missing and all(isinstance(v, str) for v in non_missing):
            out[name] = categorical_column(values)
        else:
            out[name] = numeric_column(values)
    return Dataset(out)


def design_from_arrays(X, y, names=None, with_intercept=True):
    """Wrap plain arrays as a DesignMatrix (single-column groups)."""
    from hedonic.formula import DesignMatrix, INTERCEPT

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    k = X.shape[1]
    if names is None:
        names = [INTERCEPT] + [f"x{j}" for j in range(1, k)] if with_intercept else [
            f"x{j}" for j in range(1, k + 1)
        ]
    offset = 1 if with_intercept else 0
    groups = tuple((names[j], (j,)) for j in range(offset, k))
    return DesignMatrix(
        X=X,
        y=y,
        names=tuple(names),
        groups=groups,
        response_name="y",
        response_column="y",
    )

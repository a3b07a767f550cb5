"""Rank correlation, t-tests and the Student-t distribution, without a stats dependency."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXITER = 100_000


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def _lgamma_shift(a: float, b: float) -> float:
    """``lgamma(a + b) - lgamma(a)`` without cancellation when ``a`` is large."""
    if a < 30.0:
        return math.lgamma(a + b) - math.lgamma(a)

    def stirling_tail(z: float) -> float:
        z2 = z * z
        return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z

    return ((a + b - 0.5) * math.log1p(b / a) + b * math.log(a) - b
            + stirling_tail(a + b) - stirling_tail(a))


def betainc(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta function I_x(a, b).

    ``y`` may carry ``1 - x`` computed without rounding when ``x`` is close to 1.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    if a >= b:
        log_beta = _lgamma_shift(a, b) - math.lgamma(b)
    else:
        log_beta = _lgamma_shift(b, a) - math.lgamma(a)
    log_x = math.log1p(-y) if y < 0.5 else math.log(x)
    log_y = math.log1p(-x) if x < 0.5 else math.log(y)
    log_front = log_beta + a * log_x + b * log_y
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, y) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-tailed p-value ``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    t2 = t * t
    x = df / (df + t2)
    y = t2 / (df + t2)
    return min(1.0, max(0.0, betainc(0.5 * df, 0.5, x, y)))


def t_cdf(t: float, df: float) -> float:
    half = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - half if t > 0 else half


def t_ppf(q: float, df: float) -> float:
    """Quantile of Student's t by bisection on :func:`t_cdf`."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -t_ppf(1.0 - q, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < q:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TestResult:
    t: float
    df: float
    p: float
    effect_size_d: float
    n: int
    mean: float
    degenerate: bool = False
    ci_low: float | None = None
    ci_high: float | None = None

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Correlation:
    rho: float
    degenerate: bool = False


def rankdata(x: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share their average rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    ranks = np.empty(len(x), dtype=float)
    i = 0
    n = len(x)
    while i < n:
        j = i
        while j + 1 < n and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def pearson(x: np.ndarray, y: np.ndarray) -> Correlation:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx <= 0.0 or syy <= 0.0:
        return Correlation(0.0, True)
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return Correlation(min(1.0, max(-1.0, r)))


def spearman(x: Sequence[float], y: Sequence[float]) -> Correlation:
    """Spearman rank correlation with average ranks for ties.

    A constant input has no defined correlation: the result is ``rho=0`` with
    ``degenerate=True``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    return pearson(rankdata(x), rankdata(y))


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    return spearman(x, y).rho


def _location_test(diffs: np.ndarray, mu0: float, with_ci: bool) -> TestResult:
    n = len(diffs)
    if n < 2:
        raise ValueError("need at least two observations")
    if not np.all(np.isfinite(diffs)):
        raise ValueError("observations must be finite")
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    df = float(n - 1)
    shift = mean - mu0
    if sd == 0.0 or not math.isfinite(sd):
        # zero spread: report the limiting values and flag
        t = 0.0 if shift == 0.0 else math.copysign(math.inf, shift)
        p = 1.0 if shift == 0.0 else 0.0
        ci = (mean, mean) if with_ci else (None, None)
        return TestResult(t, df, p, t, n, mean, True, *ci)
    se = sd / math.sqrt(n)
    t = shift / se
    ci = (None, None)
    if with_ci:
        half = t_ppf(0.975, df) * se
        ci = (mean - half, mean + half)
    return TestResult(t, df, t_sf_two_sided(t, df), shift / sd, n, mean, False, *ci)


def paired_t(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Paired-samples t-test on ``a - b``; ``mean`` is the mean difference."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    return _location_test(a - b, 0.0, with_ci=False)


def one_sample_t(x: Sequence[float], mu0: float = 0.0) -> TestResult:
    """One-sample t-test against ``mu0`` with a 95% confidence interval for the mean."""
    return _location_test(np.asarray(x, dtype=float), float(mu0), with_ci=True)


def mean_sem(x: Sequence[float]) -> tuple[float, float | None]:
    """Mean and standard error of the mean; the SEM is ``None`` for a single value."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise ValueError("empty sample")
    mean = float(x.mean())
    if len(x) < 2:
        return mean, None
    return mean, float(x.std(ddof=1) / math.sqrt(len(x)))


def bonferroni(p: float, m: int) -> float:
    return min(1.0, p * m)

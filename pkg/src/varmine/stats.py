"""Statistical machinery: developer classification, concentration
(Lorenz, Gini, moments, Shapiro-Wilk), correlation/regression, and
precision/recall evaluation of expertise metrics.

Everything here is implemented from first principles on top of the
standard library and numpy array plumbing; reference implementations
(scipy) appear only as oracles in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import (
    AllZero,
    DegenerateX,
    EmptyCorpus,
    LengthMismatch,
    SampleSizeOutOfRange,
    StatsError,
    TooFewSamples,
)

_NORMAL = NormalDist()

# Switch-over point between the exact pairwise Gini and the O(n log n)
# sorted-prefix identity.
_GINI_PAIRWISE_LIMIT = 10_000


@dataclass(frozen=True)
class DeveloperClass:
    developer_key: str
    category: str  # generalist | specialist | mixed
    variable_touches_total: int
    mandatory_touches_total: int


@dataclass(frozen=True)
class ConcentrationResult:
    lorenz_points: tuple[tuple[float, float], ...]
    gini: float
    n: int
    skewness: float | None
    kurtosis: float | None
    shapiro_w: float | None
    shapiro_p: float | None


@dataclass(frozen=True)
class EvaluationResult:
    metric: str  # doa | ownership
    aggregation: str  # micro | macro
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class AssociationResult:
    x_name: str
    y_name: str
    method: str  # pearson | spearman
    coefficient: float
    p_value: float
    slope: float | None = None
    intercept: float | None = None
    slope_se: float | None = None
    r_squared: float | None = None


# ---------------------------------------------------------------------------
# developer classification
# ---------------------------------------------------------------------------

def classify_developers(ledger) -> list[DeveloperClass]:
    """Partition developers with at least one source touch into
    generalists (mandatory only), specialists (variable only) and mixed."""
    out: list[DeveloperClass] = []
    for key, totals in sorted(ledger.developer_totals().items()):
        var, mand = totals.variable_touches, totals.mandatory_touches
        if var == 0 and mand == 0:
            continue
        if var == 0:
            category = "generalist"
        elif mand == 0:
            category = "specialist"
        else:
            category = "mixed"
        out.append(DeveloperClass(key, category, var, mand))
    return out


# ---------------------------------------------------------------------------
# concentration statistics
# ---------------------------------------------------------------------------

def lorenz(values) -> list[tuple[float, float]]:
    """Lorenz polygon points: (population share, cumulative value share),
    ascending-sorted values, starting at (0, 0)."""
    vals = sorted(float(v) for v in values)
    n = len(vals)
    if n == 0:
        raise TooFewSamples("lorenz requires at least one value")
    if any(v < 0 for v in vals):
        raise StatsError("lorenz requires non-negative values")
    total = sum(vals)
    if total == 0:
        raise AllZero("lorenz undefined for an all-zero vector")
    points = [(0.0, 0.0)]
    acc = 0.0
    for k, v in enumerate(vals, start=1):
        acc += v
        points.append((k / n, acc / total))
    return points


def gini(values) -> float:
    """Gini coefficient g = sum_ij |xi - xj| / (2 n^2 mean)."""
    vals = np.asarray(list(values), dtype=float)
    n = vals.size
    if n == 0:
        raise TooFewSamples("gini requires at least one value")
    if np.any(vals < 0):
        raise StatsError("gini requires non-negative values")
    total = float(vals.sum())
    if total == 0:
        raise AllZero("gini undefined for an all-zero vector")
    if n <= _GINI_PAIRWISE_LIMIT:
        num = 0.0
        # row-chunked pairwise sums keep memory flat for the larger n
        chunk = 512
        for lo in range(0, n, chunk):
            block = vals[lo : lo + chunk, None]
            num += float(np.abs(block - vals[None, :]).sum())
        return num / (2.0 * n * total)
    srt = np.sort(vals)
    ranks = np.arange(1, n + 1, dtype=float)
    return float((2.0 * (ranks * srt).sum() - (n + 1) * total) / (n * total))


def lorenz_auc(points) -> float:
    """Trapezoid area under a Lorenz polygon."""
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def moments(values) -> tuple[float, float | None]:
    """Sample (bias-adjusted) skewness and excess kurtosis.

    Kurtosis is None when n < 4.
    """
    vals = np.asarray(list(values), dtype=float)
    n = vals.size
    if n < 3:
        raise TooFewSamples("skewness requires n >= 3")
    mean = vals.mean()
    d = vals - mean
    m2 = float((d**2).mean())
    if m2 == 0:
        raise StatsError("moments undefined for constant data")
    m3 = float((d**3).mean())
    g1 = m3 / m2**1.5
    skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
    if n < 4:
        return skew, None
    m4 = float((d**4).mean())
    g2 = m4 / m2**2 - 3.0
    kurt = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))
    return skew, kurt


# ---------------------------------------------------------------------------
# Shapiro-Wilk (Royston's AS R94 approximation)
# ---------------------------------------------------------------------------

def _poly(coeffs, x: float) -> float:
    """coeffs[0] + coeffs[1]*x + coeffs[2]*x^2 + ..."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


_SW_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_C3 = (0.5440, -0.39978, 0.025054, -0.0006714)
_SW_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_C6 = (-0.4803, -0.082676, 0.0030302)
_SW_G = (-2.273, 0.459)


def shapiro_wilk(values) -> tuple[float, float]:
    """W statistic and p-value for the null of normality, 3 <= n <= 5000."""
    x = sorted(float(v) for v in values)
    n = len(x)
    if n < 3 or n > 5000:
        raise SampleSizeOutOfRange(f"shapiro_wilk needs 3 <= n <= 5000, got {n}")
    if x[-1] - x[0] == 0.0:
        raise StatsError("shapiro_wilk undefined for constant data")

    m = [_NORMAL.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)]
    ssm = sum(v * v for v in m)
    rsqrt = 1.0 / math.sqrt(ssm)

    if n == 3:
        a = [-math.sqrt(0.5), 0.0, math.sqrt(0.5)]
    else:
        u = 1.0 / math.sqrt(n)
        a_n = m[-1] * rsqrt + _poly(_SW_C1, u)
        if n > 5:
            a_n1 = m[-2] * rsqrt + _poly(_SW_C2, u)
            phi = (ssm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (
                1 - 2 * a_n**2 - 2 * a_n1**2
            )
        else:
            a_n1 = None
            phi = (ssm - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
        sphi = math.sqrt(phi)
        a = [v / sphi for v in m]
        a[-1] = a_n
        a[0] = -a_n
        if a_n1 is not None:
            a[-2] = a_n1
            a[1] = -a_n1

    mean = sum(x) / n
    ssd = sum((v - mean) ** 2 for v in x)
    num = sum(ai * xi for ai, xi in zip(a, x))
    w = num * num / ssd
    w = min(w, 1.0)

    if n == 3:
        stqr = math.asin(math.sqrt(0.75))
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - stqr)
        return w, min(max(p, 0.0), 1.0)

    one_minus_w = max(1.0 - w, 1e-300)
    if n <= 11:
        gamma = _poly(_SW_G, float(n))
        if gamma - math.log(one_minus_w) <= 0:
            return w, 0.0
        y = -math.log(gamma - math.log(one_minus_w))
        mu = _poly(_SW_C3, float(n))
        sigma = math.exp(_poly(_SW_C4, float(n)))
    else:
        y = math.log(one_minus_w)
        ln_n = math.log(n)
        mu = _poly(_SW_C5, ln_n)
        sigma = math.exp(_poly(_SW_C6, ln_n))
    z = (y - mu) / sigma
    p = 0.5 * math.erfc(z / math.sqrt(2.0))  # upper tail
    return w, min(max(p, 0.0), 1.0)


# ---------------------------------------------------------------------------
# t-distribution tail via continued-fraction incomplete beta
# ---------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-15:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= t) for Student's t with df degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


# ---------------------------------------------------------------------------
# correlation and regression
# ---------------------------------------------------------------------------

def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float((dx * dx).sum())
    syy = float((dy * dy).sum())
    if sxx == 0 or syy == 0:
        raise DegenerateX("pearson undefined for a constant series")
    return float((dx * dy).sum() / math.sqrt(sxx * syy))


def _average_ranks(v: np.ndarray) -> np.ndarray:
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=float)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _corr_p(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    return t_two_sided_p(t, n - 2)


def correlate(
    x,
    y,
    force_method: str | None = None,
    x_name: str = "x",
    y_name: str = "y",
) -> AssociationResult:
    """Pearson's r or Spearman's rho with a two-sided t-test p-value.

    Unless forced, the method follows the normality of both series:
    Pearson when Shapiro-Wilk gives p > 0.05 for each, Spearman otherwise.
    """
    xa = np.asarray(list(x), dtype=float)
    ya = np.asarray(list(y), dtype=float)
    if xa.size != ya.size:
        raise LengthMismatch(f"series differ in length: {xa.size} vs {ya.size}")
    n = xa.size
    if n < 3:
        raise TooFewSamples("correlation requires n >= 3")

    method = force_method
    if method is None:
        _, px = shapiro_wilk(xa)
        _, py = shapiro_wilk(ya)
        method = "pearson" if (px > 0.05 and py > 0.05) else "spearman"
    if method not in ("pearson", "spearman"):
        raise StatsError(f"unknown correlation method {method!r}")

    if method == "pearson":
        r = _pearson(xa, ya)
    else:
        r = _pearson(_average_ranks(xa), _average_ranks(ya))
    return AssociationResult(x_name, y_name, method, r, _corr_p(r, n))


def ols(x, y, x_name: str = "x", y_name: str = "y") -> AssociationResult:
    """Simple least-squares regression of y on x."""
    xa = np.asarray(list(x), dtype=float)
    ya = np.asarray(list(y), dtype=float)
    if xa.size != ya.size:
        raise LengthMismatch(f"series differ in length: {xa.size} vs {ya.size}")
    n = xa.size
    if n < 3:
        raise TooFewSamples("regression requires n >= 3")
    dx = xa - xa.mean()
    sxx = float((dx * dx).sum())
    if sxx == 0:
        raise DegenerateX("regression undefined for constant x")
    dy = ya - ya.mean()
    slope = float((dx * dy).sum() / sxx)
    intercept = float(ya.mean() - slope * xa.mean())
    resid = ya - (intercept + slope * xa)
    sse = float((resid * resid).sum())
    syy = float((dy * dy).sum())
    r_squared = 0.0 if syy == 0 else 1.0 - sse / syy
    var_hat = sse / (n - 2)
    slope_se = math.sqrt(var_hat / sxx)
    if syy == 0:
        coefficient = 0.0
        p = 1.0
    else:
        coefficient = _pearson(xa, ya)
        p = _corr_p(coefficient, n)
    return AssociationResult(
        x_name,
        y_name,
        "pearson",
        coefficient,
        p,
        slope=slope,
        intercept=intercept,
        slope_se=slope_se,
        r_squared=r_squared,
    )


# ---------------------------------------------------------------------------
# precision / recall of expert sets against the ground truth
# ---------------------------------------------------------------------------

def evaluate_metric(
    experts_by_file: dict[str, set],
    truth_by_file: dict[str, set],
    aggregation: str = "micro",
    metric: str = "",
) -> EvaluationResult:
    """Compare recommended experts with actual variable-code contributors.

    micro pools true/false positives over all (file, developer) pairs;
    macro averages per-file precision over files with a non-empty expert
    set and per-file recall over files with a non-empty truth set.
    """
    files = sorted(set(experts_by_file) | set(truth_by_file))
    if not files:
        raise EmptyCorpus("no files to evaluate")
    if aggregation not in ("micro", "macro"):
        raise StatsError(f"unknown aggregation {aggregation!r}")

    tp = fp = fn = 0
    per_file_p: list[float] = []
    per_file_r: list[float] = []
    for f in files:
        experts = set(experts_by_file.get(f, ()))
        truth = set(truth_by_file.get(f, ()))
        f_tp = len(experts & truth)
        f_fp = len(experts - truth)
        f_fn = len(truth - experts)
        tp += f_tp
        fp += f_fp
        fn += f_fn
        if experts:
            per_file_p.append(f_tp / (f_tp + f_fp))
        if truth:
            per_file_r.append(f_tp / (f_tp + f_fn))

    if aggregation == "micro":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
    else:
        precision = sum(per_file_p) / len(per_file_p) if per_file_p else 0.0
        recall = sum(per_file_r) / len(per_file_r) if per_file_r else 0.0
    return EvaluationResult(metric, aggregation, precision, recall, tp, fp, fn)


def partition_by_variability(
    summaries: dict[str, float],
    high_threshold: float = 40.0,
    low_threshold: float = 10.0,
) -> dict[str, set]:
    """Split projects into high (> 40% variable) and low (< 10%) groups;
    projects in between belong to neither."""
    high = {name for name, pct in summaries.items() if pct > high_threshold}
    low = {name for name, pct in summaries.items() if pct < low_threshold}
    return {"high": high, "low": low}


def concentration(values) -> ConcentrationResult:
    """Bundle the RQ2 concentration statistics for one workload vector.

    Moments and the normality test are reported only when the sample is
    large enough for them (n >= 3, kurtosis n >= 4).
    """
    vals = [float(v) for v in values]
    points = lorenz(vals)
    g = gini(vals)
    skew = kurt = w = p = None
    if len(vals) >= 3:
        try:
            skew, kurt = moments(vals)
        except StatsError:
            skew = kurt = None
        try:
            w, p = shapiro_wilk(vals)
        except StatsError:
            w = p = None
    return ConcentrationResult(
        lorenz_points=tuple(points),
        gini=g,
        n=len(vals),
        skewness=skew,
        kurtosis=kurt,
        shapiro_w=w,
        shapiro_p=p,
    )

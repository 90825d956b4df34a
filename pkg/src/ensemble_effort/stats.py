"""Accuracy metrics and hypothesis tests for comparing effort models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from . import kernels
from .errors import (
    AllZeroDifferences,
    EffortError,
    EmptyInput,
    LengthMismatch,
    NonPositiveBaseline,
    TooFewValues,
    ZeroVariance,
)
from .rng import make_rng

EXACT_MAX_N = 20
LILLIEFORS_REPLICATES = 10_000
_LILLIEFORS_CHUNK = 1000


@dataclass(frozen=True)
class MetricValue:
    value: float
    n: int

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    alternative: str
    exact: bool
    n: int = 0
    note: str = ""

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise EffortError(f"p-value {self.p_value} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            "alternative": self.alternative,
            "exact": self.exact,
            "n": self.n,
            "note": self.note,
        }


@dataclass(frozen=True)
class BoxplotSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    outliers: tuple = field(default=())

    def to_dict(self) -> dict:
        return {"min": self.min, "q1": self.q1, "median": self.median, "q3": self.q3,
                "max": self.max, "outliers": list(self.outliers)}


def _vec(v):
    return np.asarray(v, dtype=float).ravel()


def mar(y, yhat) -> MetricValue:
    """Mean absolute residual: ``sum |y_i - yhat_i| / n``."""
    y, yhat = _vec(y), _vec(yhat)
    if y.size != yhat.size:
        raise LengthMismatch(f"{y.size} actual vs {yhat.size} predicted values")
    if y.size == 0:
        raise EmptyInput("mar of an empty sample")
    if not (np.isfinite(y).all() and np.isfinite(yhat).all()):
        raise EffortError("mar requires finite values")
    return MetricValue(float(np.abs(y - yhat).sum() / y.size), int(y.size))


def relative_gain(error_a: float, error_b: float) -> float:
    """Percent reduction of ``error_b`` relative to the baseline ``error_a``."""
    if not error_a > 0:
        raise NonPositiveBaseline(f"baseline error must be > 0, got {error_a}")
    return 100.0 * (error_a - error_b) / error_a


# -- Lilliefors --------------------------------------------------------------------

def _ks_normal_stat(sorted_z: np.ndarray) -> np.ndarray:
    """KS distance to N(mean, sd) along the last axis of pre-sorted samples."""
    n = sorted_z.shape[-1]
    mu = sorted_z.mean(axis=-1, keepdims=True)
    sd = sorted_z.std(axis=-1, ddof=1, keepdims=True)
    cdf = ndtr((sorted_z - mu) / sd)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return np.maximum(upper.max(axis=-1), lower.max(axis=-1))


@lru_cache(maxsize=64)
def _lilliefors_null(n: int, replicates: int, seed: int) -> np.ndarray:
    out = np.empty(replicates)
    for start in range(0, replicates, _LILLIEFORS_CHUNK):
        stop = min(start + _LILLIEFORS_CHUNK, replicates)
        rng = make_rng(seed, "lilliefors", n, start // _LILLIEFORS_CHUNK)
        z = np.sort(rng.standard_normal((stop - start, n)), axis=1)
        out[start:stop] = _ks_normal_stat(z)
    out.setflags(write=False)
    return out


def lilliefors_test(sample, replicates: int = LILLIEFORS_REPLICATES, seed: int = 0) -> TestResult:
    """Kolmogorov-Smirnov normality test with estimated mean and variance.

    The null distribution of the statistic at the sample's size is simulated
    from ``replicates`` seeded standard-normal samples (the statistic is
    location-scale invariant) and cached per ``(n, replicates, seed)``.  The
    p-value is ``(1 + #{null >= D}) / (1 + replicates)``.
    """
    x = _vec(sample)
    if x.size < 5:
        raise TooFewValues(x.size, 5)
    if not np.isfinite(x).all():
        raise EffortError("lilliefors_test requires finite values")
    if np.ptp(x) == 0.0 or np.std(x, ddof=1) == 0.0:
        raise ZeroVariance("normality test of a constant sample")
    D = float(_ks_normal_stat(np.sort(x)))
    null = _lilliefors_null(int(x.size), int(replicates), int(seed))
    exceed = int(np.count_nonzero(null >= D))
    p = (1 + exceed) / (1 + replicates)
    return TestResult(D, p, "lilliefors", "two-sided", False, int(x.size))


# -- Wilcoxon signed-rank -------------------------------------------------------------

def _exact_signed_rank_p(ranks, w_plus, alternative):
    r2 = np.rint(2 * np.asarray(ranks)).astype(np.int64)
    counts = kernels.signed_rank_counts(r2)
    total = float(counts.sum())
    w2 = int(round(2 * w_plus))
    p_le = counts[: w2 + 1].sum() / total
    if alternative == "less":
        return float(p_le)
    p_ge = counts[w2:].sum() / total
    return float(min(1.0, 2.0 * min(p_le, p_ge)))


def _normal_signed_rank_p(abs_d, ranks, w_plus, alternative):
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(abs_d, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((tie_counts ** 3 - tie_counts).sum()) / 48.0
    sd = math.sqrt(var)
    if alternative == "less":
        return float(ndtr((w_plus - mean + 0.5) / sd))
    z = (abs(w_plus - mean) - 0.5) / sd
    return float(min(1.0, 2.0 * ndtr(-z)))


def wilcoxon_signed_rank(a, b, alternative: str = "two-sided", exact_max_n: int = EXACT_MAX_N) -> TestResult:
    """Paired Wilcoxon signed-rank test on ``d = a - b``.

    Zero differences are dropped and tied ``|d|`` receive midranks.  The
    statistic is the sum of ranks of positive differences.  Up to
    ``exact_max_n`` nonzero pairs the p-value comes from the full
    distribution over all sign assignments; beyond that a tie- and
    continuity-corrected normal approximation is used.  ``"less"`` tests
    whether ``a`` tends to be smaller than ``b``.
    """
    if alternative not in ("less", "two-sided"):
        raise EffortError(f"alternative must be 'less' or 'two-sided', got {alternative!r}")
    a, b = _vec(a), _vec(b)
    if a.size != b.size:
        raise LengthMismatch(f"paired samples of lengths {a.size} and {b.size}")
    d = a - b
    d = d[d != 0.0]
    if d.size == 0:
        raise AllZeroDifferences("every paired difference is zero")
    if d.size < 5:
        raise TooFewValues(d.size, 5)
    abs_d = np.abs(d)
    ranks = rankdata(abs_d)
    w_plus = float(ranks[d > 0].sum())
    exact = d.size <= exact_max_n
    if exact:
        p = _exact_signed_rank_p(ranks, w_plus, alternative)
    else:
        p = _normal_signed_rank_p(abs_d, ranks, w_plus, alternative)
    return TestResult(w_plus, min(1.0, max(0.0, p)), "wilcoxon-signed-rank", alternative, exact, int(d.size))


# -- boxplots ---------------------------------------------------------------------------

def boxplot_summary(sample) -> BoxplotSummary:
    """Five-number summary with 1.5 IQR outlier fences.

    Quartiles interpolate linearly between order statistics (position
    ``1 + (n - 1) q``); ``min`` and ``max`` are the whisker ends, i.e. the
    extremes of the non-outlying values.
    """
    x = _vec(sample)
    if x.size < 5:
        raise TooFewValues(x.size, 5)
    q1, med, q3 = (float(v) for v in np.percentile(x, [25, 50, 75]))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo) & (x <= hi)]
    outliers = tuple(float(v) for v in np.sort(x[(x < lo) | (x > hi)]))
    return BoxplotSummary(float(inside.min()), q1, med, q3, float(inside.max()), outliers)

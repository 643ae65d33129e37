"""
Seed-sweep aggregation and significance testing: sample mean/std, Welch's
t-test, pooled Cohen's d and Bonferroni correction.
"""

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.special import betainc, stdtrit

from errors import StatisticsError
from models import Tail, TestResult

CI_LEVEL = 0.95


@dataclass(frozen=True)
class RunSeries:
    """One metric across a seed sweep, values aligned with seeds."""

    label: str
    values: List[float]
    seeds: List[int] = field(default_factory=list)

    def __post_init__(self):
        if self.seeds and len(self.seeds) != len(self.values):
            raise StatisticsError(
                f"series {self.label!r}: {len(self.values)} values for {len(self.seeds)} seeds"
            )
        if len(set(self.seeds)) != len(self.seeds):
            raise StatisticsError(f"series {self.label!r}: seeds must be distinct")


SeriesLike = Union[RunSeries, Sequence[float]]


def _values(series: SeriesLike, minimum: int = 2) -> np.ndarray:
    raw = series.values if isinstance(series, RunSeries) else series
    values = np.asarray(raw, dtype=float)
    if values.ndim != 1 or values.size < minimum:
        raise StatisticsError(f"need at least {minimum} values, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise StatisticsError("series contains non-finite values")
    return values


def summarize(series: SeriesLike) -> Tuple[float, float]:
    """Arithmetic mean and sample standard deviation (n - 1 denominator)."""
    values = _values(series)
    return float(values.mean()), float(values.std(ddof=1))


def _upper_tail(t: float, df: float) -> float:
    """P(T > |t|) via the regularized incomplete beta function."""
    return float(0.5 * betainc(0.5 * df, 0.5, df / (df + t * t)))


def t_cdf(t: float, df: float) -> float:
    """Student t distribution function."""
    if df <= 0:
        raise StatisticsError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = _upper_tail(t, df)
    return tail if t < 0 else 1.0 - tail


def t_sf(t: float, df: float) -> float:
    """Student t survival function, computed without cancellation for t > 0."""
    if df <= 0:
        raise StatisticsError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = _upper_tail(t, df)
    return tail if t >= 0 else 1.0 - tail


def bonferroni(alpha: float = 0.05, m: int = 1) -> float:
    if m < 1:
        raise StatisticsError(f"number of comparisons must be >= 1, got {m}")
    if not 0.0 < alpha < 1.0:
        raise StatisticsError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha / m


def cohens_d(a: SeriesLike, b: SeriesLike) -> float:
    """
    Standardized mean difference (mean_a - mean_b) / pooled std, the pooled
    variance weighting each sample variance by its n - 1.

    Raises:
        StatisticsError: pooled std is zero while the means differ
    """
    x, y = _values(a), _values(b)
    nx, ny = x.size, y.size
    pooled_var = ((nx - 1) * x.var(ddof=1) + (ny - 1) * y.var(ddof=1)) / (nx + ny - 2)
    diff = float(x.mean() - y.mean())
    if pooled_var == 0.0:
        if diff == 0.0:
            return 0.0
        raise StatisticsError("Cohen's d is undefined: zero pooled variance with unequal means")
    return diff / math.sqrt(pooled_var)


def t_test(
    a: SeriesLike,
    b: SeriesLike,
    tail: Tail = Tail.ONE_SIDED,
    alpha: float = 0.05,
    m: int = 1,
) -> TestResult:
    """
    Welch's unequal-variance t-test of mean(a) against mean(b).

    The one-sided alternative is mean(a) > mean(b). The interval is the 95%
    two-sided interval of the mean difference; ``significant`` compares p
    with the Bonferroni-corrected alpha for ``m`` comparisons.
    """
    tail = Tail(tail)
    x, y = _values(a), _values(b)
    nx, ny = x.size, y.size
    vx, vy = x.var(ddof=1) / nx, y.var(ddof=1) / ny
    diff = float(x.mean() - y.mean())
    se2 = vx + vy
    corrected = bonferroni(alpha, m)

    if se2 == 0.0:
        # Both series constant: the statistic degenerates.
        df = float(nx + ny - 2)
        if diff == 0.0:
            t_stat = 0.0
            p_value = 1.0 if tail is Tail.TWO_SIDED else 0.5
        else:
            t_stat = math.copysign(math.inf, diff)
            if tail is Tail.TWO_SIDED:
                p_value = 0.0
            else:
                p_value = 0.0 if diff > 0 else 1.0
        low = high = diff
    else:
        se = math.sqrt(se2)
        t_stat = diff / se
        df = se2 ** 2 / (vx ** 2 / (nx - 1) + vy ** 2 / (ny - 1))
        if tail is Tail.TWO_SIDED:
            p_value = min(1.0, 2.0 * _upper_tail(t_stat, df))
        else:
            p_value = t_sf(t_stat, df)
        half_width = float(stdtrit(df, 0.5 + CI_LEVEL / 2.0)) * se
        low, high = diff - half_width, diff + half_width

    try:
        effect = cohens_d(x, y)
    except StatisticsError:
        effect = None

    return TestResult(
        t_stat=t_stat,
        df=float(df),
        p_value=float(p_value),
        ci95_low=low,
        ci95_high=high,
        mean_difference=diff,
        cohens_d=effect,
        corrected_alpha=corrected,
        tail=tail,
        significant=bool(p_value < corrected),
    )

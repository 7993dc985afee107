"""Statistical battery over per-user attributes.

Ordinary least squares with a t-test on the slope, one-way ANOVA with an
F-test, Tukey-Kramer honest significant differences, and percentile
bootstrap confidence intervals for group medians.  P-values come from the
distribution kernels in ``_dist``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._dist import f_sf, student_t_two_sided, studentized_range_critical
from .errors import DegenerateStatisticWarning


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    t_stat: float
    p_value: float
    r_squared: float
    n: int


def linreg(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    """Simple least squares fit of y on x with a two-sided slope t-test.

    Requires n >= 3 and non-constant x.  A perfect fit gives p = 0 for a
    nonzero slope and p = 1 when y is constant.
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("x and y must be one-dimensional and equally long")
    n = xs.size
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
        raise ValueError("inputs must be finite")
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("x is constant, slope is undefined")
    sxy = float(np.sum((xs - xs.mean()) * (ys - ys.mean())))
    syy = float(np.sum((ys - ys.mean()) ** 2))
    slope = sxy / sxx
    intercept = float(ys.mean()) - slope * float(xs.mean())
    sse = max(syy - slope * sxy, 0.0)
    df = n - 2
    r_squared = 1.0 if syy == 0.0 else 1.0 - sse / syy
    if sse == 0.0:
        if slope == 0.0:
            return RegressionResult(slope, intercept, 0.0, 1.0, r_squared, n)
        return RegressionResult(slope, intercept, math.inf, 0.0, r_squared, n)
    se = math.sqrt(sse / df / sxx)
    t_stat = slope / se
    return RegressionResult(
        slope, intercept, t_stat, student_t_two_sided(t_stat, df), r_squared, n
    )


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    p_value: float
    df_between: int
    df_within: int
    ms_between: float
    ms_within: float
    degenerate: bool


def _validated_groups(groups: Sequence[Sequence[float]]) -> list[np.ndarray]:
    if len(groups) < 2:
        raise ValueError(f"need at least 2 groups, got {len(groups)}")
    arrays = []
    for i, group in enumerate(groups):
        arr = np.asarray(group, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError(f"group {i} must hold at least 2 values")
        if not np.isfinite(arr).all():
            raise ValueError(f"group {i} contains non-finite values")
        arrays.append(arr)
    return arrays


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """One-way fixed-effects ANOVA.

    Degenerate variance splits are guarded: all values identical gives
    F = 0 with p = 1; zero within-group variance with real between-group
    spread gives F = inf with p = 0.  Both set the degenerate flag and
    warn.
    """
    arrays = _validated_groups(groups)
    all_values = np.concatenate(arrays)
    grand = float(all_values.mean())
    ss_between = float(sum(a.size * (a.mean() - grand) ** 2 for a in arrays))
    ss_within = float(sum(np.sum((a - a.mean()) ** 2) for a in arrays))
    df_between = len(arrays) - 1
    df_within = all_values.size - len(arrays)
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    if ms_within == 0.0:
        warnings.warn(
            "zero within-group variance in ANOVA",
            DegenerateStatisticWarning,
            stacklevel=2,
        )
        if ms_between == 0.0:
            return AnovaResult(0.0, 1.0, df_between, df_within, 0.0, 0.0, True)
        return AnovaResult(
            math.inf, 0.0, df_between, df_within, ms_between, 0.0, True
        )
    f_stat = ms_between / ms_within
    return AnovaResult(
        f_stat,
        f_sf(f_stat, df_between, df_within),
        df_between,
        df_within,
        ms_between,
        ms_within,
        False,
    )


@dataclass(frozen=True)
class PairwiseDifference:
    group_a: int
    group_b: int
    mean_diff: float
    q_stat: float
    q_critical: float
    significant: bool


def tukey_hsd(
    groups: Sequence[Sequence[float]], alpha: float = 0.05
) -> list[PairwiseDifference]:
    """Tukey-Kramer pairwise comparisons after a one-way layout.

    For groups i < j, q = |mean_i - mean_j| / sqrt(MSW * (1/n_i + 1/n_j) / 2)
    against the studentized range critical value at ``alpha``.  With zero
    within-group variance, any nonzero difference is significant.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    arrays = _validated_groups(groups)
    df_within = sum(a.size for a in arrays) - len(arrays)
    ms_within = (
        sum(float(np.sum((a - a.mean()) ** 2)) for a in arrays) / df_within
    )
    q_crit = studentized_range_critical(alpha, len(arrays), df_within)
    out: list[PairwiseDifference] = []
    for i in range(len(arrays)):
        for j in range(i + 1, len(arrays)):
            diff = float(arrays[i].mean() - arrays[j].mean())
            if ms_within > 0.0:
                se = math.sqrt(
                    ms_within * (1.0 / arrays[i].size + 1.0 / arrays[j].size) / 2.0
                )
                q = abs(diff) / se
            else:
                q = math.inf if diff != 0.0 else 0.0
            out.append(PairwiseDifference(i, j, diff, q, q_crit, q > q_crit))
    return out


@dataclass(frozen=True)
class GroupSummary:
    n: int
    median: float
    ci_low: float
    ci_high: float


def group_summary(
    values: Sequence[float],
    n_bootstrap: int = 2000,
    seed: int | Sequence[int] = 0,
    ci: float = 0.95,
) -> GroupSummary:
    """Median with a seeded percentile-bootstrap confidence interval.

    Values are sorted before resampling so the result depends only on the
    multiset of inputs, not their order.
    """
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("need at least one value")
    if not np.isfinite(arr).all():
        raise ValueError("values must be finite")
    if n_bootstrap < 1:
        raise ValueError(f"n_bootstrap must be >= 1, got {n_bootstrap}")
    if not 0.0 < ci < 1.0:
        raise ValueError(f"ci must be in (0, 1), got {ci}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(n_bootstrap, arr.size))
    medians = np.median(arr[idx], axis=1)
    tail = 100.0 * (1.0 - ci) / 2.0
    lo, hi = np.percentile(medians, [tail, 100.0 - tail])
    return GroupSummary(int(arr.size), float(np.median(arr)), float(lo), float(hi))

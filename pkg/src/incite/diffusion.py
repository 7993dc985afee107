"""Belief diffusion over the retweet graph and danger categorization.

Each user's initial belief is their dangerous tweet count; repeated
application of the row-stochastic transition matrix mixes beliefs along
retweet endorsements.  The resulting amplification scores are normalized
and split into categories with exact Jenks natural breaks.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .corpus import EventLabel
from .graph import RetweetGraph, TransitionMatrix, adjacency, transition

DEFAULT_CATEGORIES = ("N", "M", "V")


def _transition_of(t) -> sparse.csr_matrix:
    return t.matrix if isinstance(t, TransitionMatrix) else t


def degroot_step(t, beliefs: np.ndarray) -> np.ndarray:
    """One DeGroot update: every belief becomes its row's weighted average."""
    matrix = _transition_of(t)
    vec = np.asarray(beliefs, dtype=float)
    if vec.ndim != 1 or vec.shape[0] != matrix.shape[0]:
        raise ValueError(
            f"belief vector of length {vec.shape} does not match {matrix.shape}"
        )
    return matrix @ vec


@dataclass(frozen=True)
class DabResult:
    """Danger amplification scores for one graph."""

    nodes: tuple[str, ...]
    raw: np.ndarray
    normalized: np.ndarray
    zero_mass: bool  # no dangerous tweets anywhere, normalization skipped

    def raw_by_user(self) -> dict[str, float]:
        return {u: float(v) for u, v in zip(self.nodes, self.raw)}

    def normalized_by_user(self) -> dict[str, float]:
        return {u: float(v) for u, v in zip(self.nodes, self.normalized)}


def compute_dab(
    g: RetweetGraph, counts: Mapping[str, int], steps: int = 2
) -> DabResult:
    """Diffuse dangerous tweet counts for ``steps`` rounds and normalize.

    ``counts`` maps users to initial dangerous tweet counts; missing users
    start at zero, unknown users raise ``ValueError``.  Raw scores are the
    diffused beliefs; normalized scores divide by the maximum raw score
    (all zeros stay zero and are flagged).
    """
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    index = g.index
    unknown = [u for u in counts if u not in index]
    if unknown:
        raise ValueError(f"count for user(s) not in graph: {sorted(unknown)[:5]}")
    beliefs = np.zeros(g.n_nodes)
    for user, count in counts.items():
        if count < 0:
            raise ValueError(f"negative dangerous tweet count for {user}")
        beliefs[index[user]] = float(count)
    t = transition(adjacency(g))
    for _ in range(steps):
        beliefs = degroot_step(t, beliefs)
    peak = float(beliefs.max()) if g.n_nodes else 0.0
    if peak > 0.0:
        normalized = beliefs / peak
        zero_mass = False
    else:
        normalized = np.zeros_like(beliefs)
        zero_mass = g.n_nodes > 0
    return DabResult(g.nodes, beliefs, normalized, zero_mass)


def _interval_cost(prefix: np.ndarray, prefix_sq: np.ndarray, i: int, j: int) -> float:
    """Within-class sum of squared deviations of x[i..j], inclusive."""
    count = j - i + 1
    total = prefix[j + 1] - prefix[i]
    total_sq = prefix_sq[j + 1] - prefix_sq[i]
    return max(total_sq - total * total / count, 0.0)


def _cost_rows(
    values: np.ndarray, k: int
) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    """Optimal prefix costs per class count via divide and conquer.

    ``rows[r - 1][j]`` is the minimal within-class SSE over partitions of
    ``values[0..j]`` into r classes.  The interval SSE cost satisfies the
    quadrangle inequality, so the optimal split position is monotone in
    the right endpoint and each layer needs only O(n log n) cost
    evaluations.
    """
    n = values.size
    centered = values - values.mean()  # conditioning only, SSE is shift invariant
    prefix = np.concatenate([[0.0], np.cumsum(centered)])
    prefix_sq = np.concatenate([[0.0], np.cumsum(centered * centered)])
    rows = [np.array([_interval_cost(prefix, prefix_sq, 0, j) for j in range(n)])]
    for c in range(2, k + 1):
        prev = rows[-1]
        cur = np.full(n, np.inf)
        stack = [(c - 1, n - 1, c - 1, n - 1)]
        while stack:
            jlo, jhi, slo, shi = stack.pop()
            if jlo > jhi:
                continue
            j = (jlo + jhi) // 2
            best = np.inf
            best_s = -1
            for s in range(slo, min(shi, j) + 1):
                val = prev[s - 1] + _interval_cost(prefix, prefix_sq, s, j)
                if val < best:
                    best, best_s = val, s
            cur[j] = best
            stack.append((jlo, j - 1, slo, best_s))
            stack.append((j + 1, jhi, best_s, shi))
        rows.append(cur)
    return rows, prefix, prefix_sq


def _thin(values: np.ndarray, size: int) -> np.ndarray:
    """Evenly spaced order statistics, extremes included."""
    n = values.size
    idx = np.floor(np.arange(size) * (n - 1) / (size - 1)).astype(np.int64)
    return values[idx]


def jenks_breaks(
    values: Iterable[float],
    k: int = 3,
    thin_above: int | None = 5000,
    thin_to: int = 2000,
) -> tuple[float, ...]:
    """Jenks natural breaks: k - 1 class upper bounds minimizing total
    within-class SSE.

    Thresholds are actual data values (the largest member of each lower
    class); the global maximum is never a threshold.  Cost ties resolve
    to the lexicographically smallest split positions, with a rounding
    allowance so mathematically equal partitions compare as ties.  Inputs
    larger than ``thin_above`` are first reduced to ``thin_to`` evenly
    spaced order statistics, which keeps the dynamic program fast on
    large samples; pass ``thin_above=None`` to force the exact
    computation.
    """
    vals = np.sort(np.asarray(list(values), dtype=float))
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if np.unique(vals).size < k:
        raise ValueError(f"need at least {k} distinct values, got {np.unique(vals).size}")
    if thin_above is not None and vals.size > thin_above:
        thinned = _thin(vals, thin_to)
        if np.unique(thinned).size >= k:
            vals = thinned
    n = vals.size
    rows, prefix, prefix_sq = _cost_rows(vals, k)
    # suffix_rows[r - 1][n - 1 - s] is the optimal cost of vals[s:] in r classes
    suffix_rows, _, _ = _cost_rows(vals[::-1].copy(), k - 1)
    optimum = float(rows[k - 1][n - 1])
    tol = 64.0 * np.finfo(float).eps * n * max(1.0, float(prefix_sq[-1]))
    breaks: list[float] = []
    pos = 0
    acc = 0.0
    for remaining in range(k - 1, 0, -1):
        chosen = None
        fallback, fallback_cost = pos + 1, np.inf
        for s in range(pos + 1, n - remaining + 1):
            head = acc + _interval_cost(prefix, prefix_sq, pos, s - 1)
            total = head + float(suffix_rows[remaining - 1][n - 1 - s])
            if total <= optimum + tol:
                chosen = s
                break
            if total < fallback_cost:
                fallback, fallback_cost = s, total
        s = fallback if chosen is None else chosen
        breaks.append(float(vals[s - 1]))
        acc += _interval_cost(prefix, prefix_sq, pos, s - 1)
        pos = s
    return tuple(breaks)


def assign_dac(
    scores: Mapping[str, float],
    thresholds: Sequence[float],
    labels: Sequence[str] = DEFAULT_CATEGORIES,
) -> dict[str, str]:
    """Map each user's score to a category by threshold position.

    A score equal to a threshold belongs to the lower class.  ``labels``
    must have one more entry than ``thresholds``.
    """
    if len(labels) != len(thresholds) + 1:
        raise ValueError(
            f"{len(thresholds)} thresholds need {len(thresholds) + 1} labels"
        )
    cuts = list(thresholds)
    if any(cuts[i] > cuts[i + 1] for i in range(len(cuts) - 1)):
        raise ValueError("thresholds must be nondecreasing")
    return {user: labels[bisect_left(cuts, score)] for user, score in scores.items()}


def average_dab(
    per_event: Mapping[EventLabel, Mapping[str, float]]
) -> dict[str, float]:
    """Average each user's normalized score over the events they appear in."""
    totals: dict[str, float] = {}
    seen: dict[str, int] = {}
    for scores in per_event.values():
        for user, value in scores.items():
            totals[user] = totals.get(user, 0.0) + float(value)
            seen[user] = seen.get(user, 0) + 1
    return {user: totals[user] / seen[user] for user in totals}


def ecdf(values: Iterable[float]) -> list[tuple[float, float]]:
    """Empirical CDF as (value, fraction <= value) over distinct values."""
    vals = np.sort(np.asarray(list(values), dtype=float))
    n = vals.size
    if n == 0:
        return []
    distinct, first_index = np.unique(vals, return_index=True)
    # count <= d_i is where the next distinct value starts (n for the last)
    counts = np.append(first_index[1:], n)
    return [(float(v), float(c) / n) for v, c in zip(distinct, counts)]

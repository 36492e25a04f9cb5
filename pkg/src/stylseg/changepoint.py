"""
PELT changepoint search and the variance-normalized threshold multiplier.

The default cost is the L2 change-in-mean cost, evaluated in O(1) from prefix
sums. ``pelt`` and ``optimal_partitioning`` share the recursion and the
tie-breaking rule (earliest last-changepoint wins), so on the same input they
return the same segmentation; PELT only skips candidates that are provably
dominated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

MARGIN = 1e-2
MIN_SEGMENT_LENGTH = 2
START_MULTIPLIER = 1.0
MAX_DOUBLINGS = 200

# Relative slack on the pruning test; only makes pruning more conservative.
_PRUNE_RTOL = 1e-9


class SeriesTooShort(ValueError):
    pass


class IndexOutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class Series:
    """A series for the changepoint search plus the variance used to scale penalties."""

    values: np.ndarray
    variance: float

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "Series":
        v = np.asarray(values, dtype=float)
        return cls(v, float(np.var(v)) if len(v) else 0.0)

    @classmethod
    def from_word_odds(cls, word_odds: Sequence[float], signal: str = "cumsum") -> "Series":
        """Build from per-word log odds.

        ``signal="cumsum"`` searches the running sum; ``"increments"`` searches
        the per-word values. The variance is always that of the per-word values.
        """
        w = np.asarray(word_odds, dtype=float)
        var = float(np.var(w)) if len(w) else 0.0
        if signal == "cumsum":
            return cls(np.cumsum(w), var)
        if signal == "increments":
            return cls(w, var)
        raise ValueError(f"unknown signal {signal!r}")


@dataclass(frozen=True)
class PeltResult:
    changepoints: list[int]
    penalty: float
    cost_total: float


@dataclass(frozen=True)
class ThresholdResult:
    multiplier: float
    margin: float = MARGIN
    passes: int = 0
    doublings: int = 0
    never_segments: bool = False
    unit_changepoints: list[int] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Costs
# ---------------------------------------------------------------------------

def segment_cost(values: Sequence[float], i: int, j: int) -> float:
    """L2 cost of the inclusive segment ``values[i..j]`` (two-pass)."""
    n = len(values)
    if not (0 <= i <= j < n):
        raise IndexOutOfRange(f"segment [{i}, {j}] outside series of length {n}")
    seg = np.asarray(values[i:j + 1], dtype=float)
    return float(np.sum((seg - seg.mean()) ** 2))


def _prefix_sums(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # centering first keeps the prefix-sum cost well conditioned
    x = values - values.mean()
    s1 = np.concatenate(([0.0], np.cumsum(x)))
    s2 = np.concatenate(([0.0], np.cumsum(x * x)))
    return s1, s2


@numba.njit(cache=True)
def _l2(s1, s2, a, b):
    d = s1[b] - s1[a]
    c = (s2[b] - s2[a]) - d * d / (b - a)
    return c if c > 0.0 else 0.0


@numba.njit(cache=True)
def _search_l2(s1, s2, penalty, min_size, prune):
    n = len(s1) - 1
    F = np.full(n + 1, np.inf)
    F[0] = -penalty
    last = np.zeros(n + 1, dtype=np.int64)
    dead_at = np.full(n + 1, n + 1, dtype=np.int64)
    cand = np.empty(n + 1, dtype=np.int64)
    vals = np.empty(n + 1)
    cand[0] = 0
    nc = 1
    for t in range(min_size, n + 1):
        new = t - min_size
        if new >= min_size:
            cand[nc] = new
            nc += 1
        # drop candidates whose domination has become effective
        k = 0
        for r in range(nc):
            if dead_at[cand[r]] > t:
                cand[k] = cand[r]
                k += 1
        nc = k
        best = np.inf
        arg = -1
        for r in range(nc):
            tau = cand[r]
            v = F[tau] + _l2(s1, s2, tau, t)
            vals[r] = v
            if v < best:
                best = v
                arg = tau
        F[t] = best + penalty
        last[t] = arg
        if prune:
            tol = _PRUNE_RTOL * (abs(F[t]) + penalty + 1.0)
            for r in range(nc):
                if vals[r] > F[t] + tol:
                    tau = cand[r]
                    if dead_at[tau] > t + min_size:
                        dead_at[tau] = t + min_size
    return F, last


def _backtrack(last: np.ndarray, n: int) -> list[int]:
    cps = []
    t = n
    while t > 0:
        t = int(last[t])
        if t > 0:
            cps.append(t)
    return cps[::-1]


def _search_generic(values: np.ndarray, cost: Callable[[int, int], float], penalty: float,
                    min_size: int, prune: bool, k_const: float) -> tuple[np.ndarray, np.ndarray]:
    n = len(values)
    F = np.full(n + 1, np.inf)
    F[0] = -penalty
    last = np.zeros(n + 1, dtype=np.int64)
    dead_at: dict[int, int] = {}
    cand = [0]
    for t in range(min_size, n + 1):
        if t - min_size >= min_size:
            cand.append(t - min_size)
        cand = [c for c in cand if dead_at.get(c, n + 1) > t]
        vals = [F[c] + cost(c, t) for c in cand]
        i = int(np.argmin(vals))
        F[t] = vals[i] + penalty
        last[t] = cand[i]
        if prune:
            tol = _PRUNE_RTOL * (abs(F[t]) + penalty + 1.0)
            for c, v in zip(cand, vals):
                if v + k_const > F[t] + tol:
                    dead_at[c] = min(dead_at.get(c, n + 1), t + min_size)
    return F, last


def _run(series: Series | Sequence[float], penalty: float, min_segment_length: int,
         prune: bool, cost) -> PeltResult:
    values = series.values if isinstance(series, Series) else np.asarray(series, dtype=float)
    n = len(values)
    if min_segment_length < 1:
        raise ValueError("min_segment_length must be >= 1")
    if n < 2 * min_segment_length:
        raise SeriesTooShort(f"series of length {n} needs at least {2 * min_segment_length} points")
    if penalty < 0 or math.isnan(penalty):
        raise ValueError("penalty must be non-negative")
    if cost == "l2":
        s1, s2 = _prefix_sums(values)
        F, last = _search_l2(s1, s2, float(penalty), int(min_segment_length), prune)
    else:
        fn = cost(values)
        F, last = _search_generic(values, fn, float(penalty), min_segment_length, prune,
                                  getattr(cost, "pruning_constant", 0.0))
    return PeltResult(_backtrack(last, n), float(penalty), float(F[n]))


def pelt(series: Series | Sequence[float], penalty: float,
         min_segment_length: int = MIN_SEGMENT_LENGTH, cost="l2") -> PeltResult:
    """Exact penalized changepoint search with candidate pruning.

    ``cost`` is ``"l2"`` or a factory ``cost(values) -> fn(start, end)`` over
    half-open segments; a factory may carry a ``pruning_constant`` attribute
    (the K of the pruning rule, 0 for costs that never increase when split).
    """
    return _run(series, penalty, min_segment_length, True, cost)


def optimal_partitioning(series: Series | Sequence[float], penalty: float,
                         min_segment_length: int = MIN_SEGMENT_LENGTH, cost="l2") -> PeltResult:
    """O(n^2) reference search: the same recursion with no pruning."""
    return _run(series, penalty, min_segment_length, False, cost)


def segmentation_cost(values: Sequence[float], changepoints: Sequence[int], penalty: float) -> float:
    bounds = [0, *changepoints, len(values)]
    return sum(segment_cost(values, a, b - 1) for a, b in zip(bounds, bounds[1:])) + penalty * len(changepoints)


# ---------------------------------------------------------------------------
# Threshold multiplier
# ---------------------------------------------------------------------------

def normalized_penalty(series: Series, multiplier: float) -> float:
    if multiplier < 0:
        raise ValueError("multiplier must be non-negative")
    return multiplier * series.variance


def threshold_search(series: Series, min_segment_length: int = MIN_SEGMENT_LENGTH,
                     margin: float = MARGIN, start: float = START_MULTIPLIER, cost="l2") -> ThresholdResult:
    """Smallest penalty multiplier at which PELT stops finding changepoints.

    The multiplier is doubled from ``start`` until the search returns no
    changepoints, then the bracket is bisected until narrower than ``margin``;
    the midpoint is returned. A zero-variance series, or one that does not
    segment even at multiplier 0, yields multiplier 0 with ``never_segments``.
    """
    n = len(series)
    if n < 2 * min_segment_length:
        raise SeriesTooShort(f"series of length {n} needs at least {2 * min_segment_length} points")
    if series.variance <= 0:
        return ThresholdResult(0.0, margin, 0, 0, True, [])

    passes = 0

    def changepoints(m):
        nonlocal passes
        passes += 1
        return pelt(series, normalized_penalty(series, m), min_segment_length, cost).changepoints

    hi = start
    unit = changepoints(hi)
    cps = unit
    lo = None
    doublings = 0
    while cps:
        if doublings >= MAX_DOUBLINGS:
            raise RuntimeError("threshold search did not terminate")
        lo = hi
        hi *= 2
        doublings += 1
        cps = changepoints(hi)
    if lo is None:
        lo = 0.0
        if not changepoints(0.0):
            return ThresholdResult(0.0, margin, passes, 0, True, unit)
    while hi - lo > margin:
        mid = 0.5 * (lo + hi)
        if changepoints(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), margin, passes, doublings, False, unit)


def normalize_threshold_for_length(multiplier: float, length: int, scheme: str = "per_length") -> float:
    """Length adjustment of a single multiplier (``identity`` or ``per_length``).

    The binned z-score scheme needs the whole population; see
    ``normalize_thresholds``.
    """
    if length <= 0:
        raise ValueError("length must be positive")
    if scheme == "identity":
        return multiplier
    if scheme == "per_length":
        return multiplier / length
    raise ValueError(f"scheme {scheme!r} is not defined for a single document")


def normalize_thresholds(multipliers: Sequence[float], lengths: Sequence[int], scheme: str = "zscore",
                         bins: int = 25, binning: str = "quantile") -> np.ndarray:
    if scheme == "zscore":
        from .stats import zscore_by_length_bins
        return zscore_by_length_bins(lengths, multipliers, bins, binning)
    return np.array([normalize_threshold_for_length(m, n, scheme) for m, n in zip(multipliers, lengths)])

"""Group summaries, t-tests, Pearson correlation and length-binned z-scores."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import special


class DegenerateSample(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class TooFewPoints(ValueError):
    pass


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class GroupSummary:
    label: str
    mean: float
    sd: float
    n: int
    degenerate: bool = False


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: float


@dataclass(frozen=True)
class CorrelationRecord:
    x: str
    y: str
    r: float
    p: float
    n: int


def t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t via the regularized incomplete beta."""
    if math.isinf(t):
        return 0.0
    return float(special.betainc(0.5 * df, 0.5, df / (df + t * t)))


def _sample(a, name) -> np.ndarray:
    x = np.asarray(a, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DegenerateSample(f"{name} needs at least 2 observations")
    return x


def welch_t(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Welch's unequal-variance t-test, two-sided, Welch-Satterthwaite df."""
    x, y = _sample(a, "a"), _sample(b, "b")
    vx, vy = x.var(ddof=1), y.var(ddof=1)
    if vx == 0 or vy == 0:
        raise DegenerateSample("both samples need nonzero variance")
    sx, sy = vx / len(x), vy / len(y)
    t = (x.mean() - y.mean()) / math.sqrt(sx + sy)
    df = (sx + sy) ** 2 / (sx * sx / (len(x) - 1) + sy * sy / (len(y) - 1))
    return TTestResult(float(t), t_sf2(t, df), float(df))


def student_t(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Pooled-variance two-sample t-test."""
    x, y = _sample(a, "a"), _sample(b, "b")
    nx, ny = len(x), len(y)
    df = nx + ny - 2
    pooled = ((nx - 1) * x.var(ddof=1) + (ny - 1) * y.var(ddof=1)) / df
    if pooled == 0:
        raise DegenerateSample("pooled variance is zero")
    t = (x.mean() - y.mean()) / math.sqrt(pooled * (1 / nx + 1 / ny))
    return TTestResult(float(t), t_sf2(t, df), float(df))


def pearson(x: Sequence[float], y: Sequence[float], labels: tuple[str, str] = ("x", "y")) -> CorrelationRecord:
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} != {len(b)}")
    n = len(a)
    if n < 3:
        raise TooFewPoints("pearson needs at least 3 pairs")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(da @ da))
    sb = math.sqrt(float(db @ db))
    if sa == 0 or sb == 0:
        raise DegenerateSample("both variables need nonzero variance")
    r = float(da @ db) / (sa * sb)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1 - r * r))
        p = t_sf2(t, n - 2)
    return CorrelationRecord(labels[0], labels[1], r, p, n)


def _bin_assignments(lengths: np.ndarray, bins: int, binning: str) -> list[np.ndarray]:
    n = len(lengths)
    bins = max(1, min(bins, n // 2))
    # stable sort so equal lengths keep input order
    order = np.argsort(lengths, kind="stable")
    if binning == "quantile":
        groups = [g for g in np.array_split(order, bins) if len(g)]
    elif binning == "width":
        lo, hi = float(lengths.min()), float(lengths.max())
        edges = np.linspace(lo, hi, bins + 1)
        idx = np.clip(np.searchsorted(edges, lengths, side="right") - 1, 0, bins - 1)
        groups = [order[idx[order] == k] for k in range(bins)]
        groups = [g for g in groups if len(g)]
    else:
        raise ValueError(f"unknown binning {binning!r}")
    # fold bins with fewer than 2 points into a neighbour
    merged: list[np.ndarray] = []
    for g in groups:
        if merged and (len(g) < 2 or len(merged[-1]) < 2):
            merged[-1] = np.concatenate((merged[-1], g))
        else:
            merged.append(g)
    if len(merged) > 1 and len(merged[-1]) < 2:
        tail = merged.pop()
        merged[-1] = np.concatenate((merged[-1], tail))
    return merged


def zscore_by_length_bins(lengths: Sequence[float], values: Sequence[float], bins: int = 25,
                          binning: str = "quantile") -> np.ndarray:
    """Z-score each value against the documents of similar length.

    Points are split into ``bins`` equal-count groups by length (``binning=
    "width"`` uses equal-width bins). Each group is standardized with its own
    mean and population sd; a group with zero sd maps to zeros. Output order
    matches the input.
    """
    ln = np.asarray(lengths, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(ln) != len(v):
        raise LengthMismatch(f"{len(ln)} != {len(v)}")
    if len(v) < 2:
        raise TooFewPoints("need at least 2 points to z-score")
    out = np.zeros(len(v))
    for g in _bin_assignments(ln, bins, binning):
        sd = v[g].std()
        if sd > 0:
            out[g] = (v[g] - v[g].mean()) / sd
    return out


def group_summaries(groups: Mapping[str, Sequence[float]]) -> list[GroupSummary]:
    out = []
    for label, values in groups.items():
        x = np.asarray(values, dtype=float)
        if len(x) == 0:
            raise ValueError(f"group {label!r} is empty")
        if len(x) == 1:
            out.append(GroupSummary(label, float(x[0]), 0.0, 1, True))
        else:
            out.append(GroupSummary(label, float(x.mean()), float(x.std(ddof=1)), len(x)))
    return out


def section_correlation_matrix(per_section: Mapping[str, Mapping[str, float]]) -> dict[tuple[str, str], CorrelationRecord]:
    """Pairwise Pearson correlations between sections, aligned by document id.

    ``per_section`` maps section name to ``{doc_id: score}``. The result is
    keyed by (row, column) and is symmetric with r = 1 on the diagonal.
    """
    names = list(per_section)
    out: dict[tuple[str, str], CorrelationRecord] = {}
    for i, a in enumerate(names):
        out[a, a] = CorrelationRecord(a, a, 1.0, 0.0, len(per_section[a]))
        for b in names[i + 1:]:
            ids = sorted(set(per_section[a]) & set(per_section[b]))
            if len(ids) < 3:
                raise AlignmentError(f"sections {a!r} and {b!r} share only {len(ids)} documents")
            rec = pearson([per_section[a][k] for k in ids], [per_section[b][k] for k in ids], (a, b))
            out[a, b] = rec
            out[b, a] = CorrelationRecord(b, a, rec.r, rec.p, rec.n)
    return out


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def p_bucket(p: float) -> str:
    for cut in (0.001, 0.01, 0.05):
        if p < cut:
            return f"< {cut:g}"
    if p > 0.2:
        return "> 0.2"
    return "> 0.05"

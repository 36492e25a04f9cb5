"""Plain-text renderings of the result tables (raw numbers stay in the CSVs)."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from .stats import CorrelationRecord, GroupSummary, TTestResult, p_bucket, significance_stars


def _table(title: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    line = "  ".join("-" * w for w in widths)

    def fmt_row(r):
        return "  ".join(str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(r, widths)))

    out = [title, line, fmt_row(header), line]
    out += [fmt_row(r) for r in rows]
    out.append(line)
    return "\n".join(out) + "\n"


def group_summary_table(summaries: Sequence[GroupSummary], title: str) -> str:
    rows = [(s.label.capitalize(), f"{s.mean:.4f}", f"{s.sd:.4f}", str(s.n)) for s in summaries]
    return _table(title, ("Group", "Mean", "Standard Deviation", "n"), rows)


def ttest_table(tests: Sequence[tuple[str, str, TTestResult]], title: str) -> str:
    rows = [(f"{a.capitalize()} vs. {b.capitalize()}", f"{t.t:.3f}", p_bucket(t.p)) for a, b, t in tests]
    return _table(title, ("Comparison", "t-statistic", "p-value"), rows)


def correlation_table(raw: Sequence[CorrelationRecord], normalized: Sequence[CorrelationRecord]) -> str:
    rows = [("Original Variables", "", "")]
    rows += [(f"{c.x} vs. {c.y}", f"{c.r:.4f}", p_bucket(c.p)) for c in raw]
    rows += [("Z-Score Normalized Variables on Length", "", "")]
    rows += [(f"{c.x} vs. {c.y}", f"{c.r:.4f}", p_bucket(c.p)) for c in normalized]
    return _table("Pearson correlation coefficients and p-values",
                  ("Variable Pair", "Correlation (r)", "p-value"), rows)


def section_matrix_table(matrix: dict, names: Sequence[str]) -> str:
    rows = []
    for a in names:
        cells = []
        for b in names:
            rec = matrix[a, b]
            cells.append(f"{rec.r:.3f}" + ("" if a == b else significance_stars(rec.p)))
        rows.append((a, *cells))
    return _table("Pearson correlations between length-normalized section log-odds "
                  "(* p<0.05, ** p<0.01, *** p<0.001)", ("Section", *names), rows)


def word_table(words: Sequence[tuple[str, float]], title: str) -> str:
    return _table(title, ("Word", "Value"), [(w, f"{v:.2f}") for w, v in words])


def render_csv_as_table(path: Path, title: str | None = None) -> str:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return ""
    body = [[_short(c) for c in r] for r in rows[1:]]
    return _table(title or Path(path).stem, rows[0], body)


def _short(cell: str) -> str:
    try:
        v = float(cell)
    except ValueError:
        return cell
    if cell.isdigit():
        return cell
    return f"{v:.4g}"

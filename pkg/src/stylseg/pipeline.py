"""Corpus-level glue between the classifier, the changepoint search and the statistics."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import stats
from .changepoint import Series, normalize_thresholds, threshold_search
from .classifier import LogOddsModel, build_profile, score, train
from .config import RunConfig
from .corpus import SECTIONS, EmptyTokenStream, SectionedDocument, TokenStream, tokenize

GROUPS = ("original", "regenerated", "segmented")

SEGMENT_COLUMNS = ("id", "length", "total", "variance", "threshold_multiplier", "passes",
                   "changepoints_at_unit_multiplier", "never_segments")
SECTION_COLUMNS = tuple(f"{s}_{c}" for s in SECTIONS for c in ("length", "total"))


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def load_training_streams(directory: Path, unit: str = "section") -> list[TokenStream]:
    """Token streams from ``*.sections.json`` (one per section or per document) or ``*.txt`` files."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    streams = []
    for path in sorted(directory.glob("*.sections.json")):
        doc = SectionedDocument.from_json(json.loads(path.read_text(encoding="utf-8")))
        texts = [getattr(doc, s) for s in SECTIONS] if unit == "section" else [doc.combined]
        streams.extend(_tokens_or_none(t) for t in texts)
    for path in sorted(directory.glob("*.txt")):
        streams.append(_tokens_or_none(path.read_text(encoding="utf-8")))
    return [s for s in streams if s is not None]


def _tokens_or_none(text: str) -> TokenStream | None:
    try:
        return tokenize(text)
    except EmptyTokenStream:
        return None


def train_from_dirs(human_dir: Path, llm_dir: Path, cfg: RunConfig) -> LogOddsModel:
    human = load_training_streams(human_dir, cfg.training_unit)
    llm = load_training_streams(llm_dir, cfg.training_unit)
    return train(build_profile(human, cfg.min_doc_freq), build_profile(llm, cfg.min_doc_freq), cfg.smoothing)


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentRow:
    id: str
    length: int
    total: float
    variance: float
    threshold_multiplier: float
    passes: int
    changepoints_at_unit_multiplier: tuple[int, ...]
    never_segments: bool
    sections: tuple[tuple[int, float], ...] = ()

    def as_csv(self) -> list:
        cps = ";".join(map(str, self.changepoints_at_unit_multiplier))
        row = [self.id, self.length, repr(self.total), repr(self.variance), repr(self.threshold_multiplier),
               self.passes, cps, int(self.never_segments)]
        for n, t in self.sections:
            row += [n, repr(t)]
        return row


def segment_text(model: LogOddsModel, doc_id: str, text: str, cfg: RunConfig,
                 sections: Sequence[str] = ()) -> SegmentRow:
    scored = score(model, tokenize(text), doc_id)
    series = Series.from_word_odds(scored.word_odds, cfg.signal)
    res = threshold_search(series, cfg.min_segment_length, cfg.margin, cfg.start_multiplier, cfg.cost)
    sec = []
    for s in sections:
        ts = _tokens_or_none(s)
        sec.append((0, 0.0) if ts is None else (len(ts), score(model, ts).total))
    return SegmentRow(doc_id, scored.length, scored.total, series.variance, res.multiplier, res.passes,
                      tuple(res.unit_changepoints), res.never_segments, tuple(sec))


def _segment_job(args):
    return segment_text(*args)


def parallel_map(fn, jobs: Sequence, workers: int = 1) -> list:
    """Order-preserving map; ``workers > 1`` fans out to processes."""
    if workers <= 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def segment_corpus(model: LogOddsModel, docs: Sequence[SectionedDocument], cfg: RunConfig) -> list[SegmentRow]:
    jobs = [(model, d.id, d.combined, cfg, tuple(getattr(d, s) for s in SECTIONS))
            for d in sorted(docs, key=lambda d: d.id)]
    return parallel_map(_segment_job, jobs, cfg.workers)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_segment_outputs(rows: Sequence[SegmentRow], out: Path) -> None:
    out = Path(out)
    write_csv(out / "scores.csv", ("id", "length", "total"),
              ([r.id, r.length, repr(r.total)] for r in rows))
    write_csv(out / "thresholds.csv", SEGMENT_COLUMNS[:1] + SEGMENT_COLUMNS[1:2] + SEGMENT_COLUMNS[3:],
              ([c for i, c in enumerate(r.as_csv()[:8]) if i != 2] for r in rows))
    write_csv(out / "segments.csv", SEGMENT_COLUMNS + SECTION_COLUMNS, (r.as_csv() for r in rows))


def write_series(model: LogOddsModel, doc_id: str, text: str, out_dir: Path) -> None:
    scored = score(model, tokenize(text), doc_id)
    write_csv(Path(out_dir) / f"{doc_id}.series.csv", ("index", "token", "log_odds", "cumsum"),
              ([i, t, repr(float(v)), repr(float(c))]
               for i, (t, v, c) in enumerate(zip(scored.tokens, scored.word_odds, scored.cumsum))))


def read_segments_csv(path: Path, required: Sequence[str] = ("id", "length", "total", "threshold_multiplier")) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for c in required:
            if c not in cols:
                raise SchemaError(f"missing column {c!r} in {Path(path).name}")
        return list(reader)


# ---------------------------------------------------------------------------
# Validation (three groups)
# ---------------------------------------------------------------------------

@dataclass
class ValidationResult:
    rows: list[tuple[str, SegmentRow]]
    normalized: np.ndarray
    summaries: dict[str, list[stats.GroupSummary]]
    tests: dict[str, list[tuple[str, str, stats.TTestResult]]]
    confusion: list[list[int]]

    def values(self, group: str, metric: str = "threshold") -> np.ndarray:
        idx = [i for i, (g, _) in enumerate(self.rows) if g == group]
        if metric == "threshold":
            return np.array([self.rows[i][1].threshold_multiplier for i in idx])
        if metric == "threshold_normalized":
            return self.normalized[idx]
        if metric == "total_log_odds":
            return np.array([self.rows[i][1].total for i in idx])
        raise KeyError(metric)


METRICS = ("threshold", "threshold_normalized", "total_log_odds")
PAIRS = (("original", "regenerated"), ("segmented", "original"), ("segmented", "regenerated"))


def validate_sets(model: LogOddsModel, sets: Mapping[str, Mapping[str, str]], cfg: RunConfig) -> ValidationResult:
    jobs, labels = [], []
    for g in GROUPS:
        for doc_id in sorted(sets[g]):
            jobs.append((model, doc_id, sets[g][doc_id], cfg, ()))
            labels.append(g)
    seg = parallel_map(_segment_job, jobs, cfg.workers)
    rows = list(zip(labels, seg))
    mult = [r.threshold_multiplier for r in seg]
    lens = [r.length for r in seg]
    normalized = normalize_thresholds(mult, lens, cfg.length_scheme, cfg.bins, cfg.binning)
    res = ValidationResult(rows, normalized, {}, {}, [])
    test = stats.welch_t if cfg.ttest == "welch" else stats.student_t
    for metric in METRICS:
        res.summaries[metric] = stats.group_summaries({g: res.values(g, metric) for g in GROUPS})
        res.tests[metric] = [(a, b, test(res.values(a, metric), res.values(b, metric))) for a, b in PAIRS]
    # classifier check on the unmodified pairs: rows actual (human, llm), columns predicted
    orig = res.values("original", "total_log_odds") > cfg.decision_threshold
    regen = res.values("regenerated", "total_log_odds") > cfg.decision_threshold
    res.confusion = [[int((~orig).sum()), int(orig.sum())], [int((~regen).sum()), int(regen.sum())]]
    return res


# ---------------------------------------------------------------------------
# Correlation analysis
# ---------------------------------------------------------------------------

@dataclass
class AnalysisResult:
    lengths: np.ndarray
    log_odds: np.ndarray
    threshold: np.ndarray
    z_log_odds: np.ndarray
    z_threshold: np.ndarray
    raw: list[stats.CorrelationRecord]
    normalized: list[stats.CorrelationRecord]
    section_matrix: dict | None = None


def analyze_rows(rows: Sequence[dict], cfg: RunConfig, per_section: bool = False) -> AnalysisResult:
    if len(rows) < 3:
        raise stats.TooFewPoints("analysis needs at least 3 documents")
    ln = np.array([float(r["length"]) for r in rows])
    lo = np.array([float(r["total"]) for r in rows])
    th = np.array([float(r["threshold_multiplier"]) for r in rows])
    zlo = stats.zscore_by_length_bins(ln, lo, cfg.bins, cfg.binning)
    zth = stats.zscore_by_length_bins(ln, th, cfg.bins, cfg.binning)
    raw = [stats.pearson(ln, lo, ("Length", "Log Odds")),
           stats.pearson(ln, th, ("Length", "Threshold")),
           stats.pearson(lo, th, ("Log Odds", "Threshold"))]
    norm = [stats.pearson(ln, zlo, ("Length", "Z-Score Log Odds")),
            stats.pearson(ln, zth, ("Length", "Z-Score Threshold")),
            stats.pearson(zlo, zth, ("Z-Score Log Odds", "Z-Score Threshold"))]
    res = AnalysisResult(ln, lo, th, zlo, zth, raw, norm)
    if per_section:
        for c in SECTION_COLUMNS:
            if c not in rows[0]:
                raise SchemaError(f"missing column {c!r} required for per-section analysis")
        ids = [r["id"] for r in rows]
        per = {}
        for s in SECTIONS:
            sl = np.array([float(r[f"{s}_length"]) for r in rows])
            st = np.array([float(r[f"{s}_total"]) for r in rows])
            per[s.capitalize()] = dict(zip(ids, stats.zscore_by_length_bins(sl, st, cfg.bins, cfg.binning)))
        per["Combined"] = dict(zip(ids, zlo))
        res.section_matrix = stats.section_correlation_matrix(per)
    return res


# ---------------------------------------------------------------------------
# Provenance
# ---------------------------------------------------------------------------

def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def tree_digest(path: Path) -> str:
    """Digest of a file, or of every file under a directory (names relative to it)."""
    path = Path(path)
    if path.is_file():
        return file_digest(path)
    h = hashlib.sha256()
    for p in sorted(q for q in path.rglob("*") if q.is_file()):
        h.update(p.relative_to(path).as_posix().encode() + b"\0" + bytes.fromhex(file_digest(p)))
    return h.hexdigest()


def fmt(x: float, digits: int = 4) -> str:
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return str(x)
    return f"{x:.{digits}f}"

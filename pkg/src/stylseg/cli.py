"""
Command line entry point.

    stylseg prepare INPUT_DIR --out DIR
    stylseg regenerate CORPUS_DIR --out DIR
    stylseg train HUMAN_DIR LLM_DIR --out DIR
    stylseg segment MODEL CORPUS_DIR --out DIR
    stylseg validate MODEL CORPUS_DIR --out DIR
    stylseg analyze SEGMENTS_CSV --out DIR [--per-section]
    stylseg report RUN_DIR... --out DIR
    stylseg fixture DIR

Exit codes: 0 success, 1 degenerate analysis (e.g. every threshold is 0),
2 usage or IO error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import fields
from pathlib import Path

from . import __version__, plotting, report
from .changepoint import SeriesTooShort
from .classifier import EmptyCorpus, MalformedModelFile, export_top_words, load_model, serialize_model
from .config import RunConfig, dumps_config, load_config
from .corpus import (
    SECTIONS, Cleaner, CorpusError, DEFAULT_INLINE_PATTERNS, DEFAULT_LINE_PATTERNS,
    load_sectioned_corpus, prepare_corpus, write_rejections, write_sections,
)
from .pipeline import (
    GROUPS, METRICS, SchemaError, analyze_rows, read_segments_csv, segment_corpus, train_from_dirs,
    tree_digest, validate_sets, write_csv, write_segment_outputs, write_series,
)
from .regen import ProviderError, build_validation_sets, make_provider, regenerate_document, write_manifest
from .stats import DegenerateSample, TooFewPoints
from .synth import write_fixture

logger = logging.getLogger("stylseg")

EXIT_OK, EXIT_DEGENERATE, EXIT_USAGE = 0, 1, 2


class Degenerate(Exception):
    pass


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _require_dir(path: Path, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise FileNotFoundError(f"{what} directory not found: {p}")
    return p


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(out: Path, command: str, cfg: RunConfig, inputs: dict[str, Path]) -> None:
    """Write the config snapshot and the run manifest (no timestamps, no absolute paths)."""
    (out / "config_snapshot.ini").write_text(dumps_config(cfg), encoding="utf-8")
    outputs = {}
    for p in sorted(q for q in out.rglob("*") if q.is_file()):
        rel = p.relative_to(out).as_posix()
        if rel != "run_manifest.json":
            outputs[rel] = hashlib.sha256(p.read_bytes()).hexdigest()
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config_digest": hashlib.sha256(dumps_config(cfg).encode()).hexdigest(),
        "inputs": {k: tree_digest(v) for k, v in inputs.items()},
        "outputs": outputs,
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _cleaner(cfg: RunConfig) -> Cleaner:
    return Cleaner(DEFAULT_LINE_PATTERNS + tuple(cfg.patterns("line")),
                   DEFAULT_INLINE_PATTERNS + tuple(cfg.patterns("inline")))


def _split(ids: list[str], ratios: str, seed: int) -> dict[str, list[str]]:
    names = ("train", "classify", "pelt")
    parts = [float(x) for x in ratios.split(",")]
    if len(parts) != 3 or min(parts) < 0 or sum(parts) <= 0:
        raise ValueError("split must be three non-negative ratios, e.g. 4,1,1")
    order = sorted(ids, key=lambda i: hashlib.sha256(f"{seed}\0{i}".encode()).hexdigest())
    total = sum(parts)
    bounds, acc = [], 0.0
    for p in parts:
        acc += p
        bounds.append(round(len(order) * acc / total))
    out, start = {}, 0
    for name, end in zip(names, bounds):
        out[name] = sorted(order[start:end])
        start = end
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_fixture(args, cfg: RunConfig) -> int:
    paths = write_fixture(Path(args.directory), args.n_docs, cfg.seed)
    logger.info("wrote %d synthetic papers to %s", len(paths), args.directory)
    return EXIT_OK


def cmd_prepare(args, cfg: RunConfig) -> int:
    src = _require_dir(args.input_dir, "input")
    out = _out_dir(args)
    res = prepare_corpus(src, cleaner=_cleaner(cfg), min_chars=cfg.min_section_chars)
    if not res.accepted and not res.rejected:
        logger.warning("no *.txt documents in %s", src)
    by_id = {d.id: d for d in res.accepted}
    groups = _split(sorted(by_id), cfg.split, cfg.seed) if cfg.split else {"": sorted(by_id)}
    for name, ids in groups.items():
        d = out / "corpus" / name if name else out / "corpus"
        d.mkdir(parents=True, exist_ok=True)
        for i in ids:
            write_sections(by_id[i], d)
    write_rejections(res.rejected, out / "rejections.csv")
    logger.info("accepted %d, rejected %d", len(res.accepted), len(res.rejected))
    _finish(out, "prepare", cfg, {"input_dir": src})
    return EXIT_OK


def cmd_regenerate(args, cfg: RunConfig) -> int:
    src = _require_dir(args.corpus, "corpus")
    docs = load_sectioned_corpus(src)
    out = _out_dir(args)
    corpus_out = out / "corpus"
    corpus_out.mkdir(exist_ok=True)
    provider = make_provider(cfg.provider_config())
    records, skipped = [], []
    pdig = provider.config.digest()
    prompt_dig = hashlib.sha256(provider.config.rewrite_prompt.encode()).hexdigest()
    for doc in docs:
        try:
            regen = regenerate_document(provider, doc)
        except ProviderError as exc:
            skipped.append((doc.id, f"{type(exc).__name__}: {exc}"))
            continue
        write_sections(regen, corpus_out)
        records.append({"id": doc.id, "kind": "regenerated", "prompt_digest": prompt_dig, "provider_digest": pdig,
                        "provider": {k: v for k, v in provider.config.public().items()
                                     if k not in ("rewrite_prompt", "inject_prompt")}})
    write_manifest(records, out / "manifest.jsonl")
    write_manifest(provider.archive, out / "provider_archive.jsonl")
    write_csv(out / "skipped.csv", ("id", "reason"), skipped)
    _finish(out, "regenerate", cfg, {"corpus": src})
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    human = _require_dir(args.human_dir, "human")
    llm = _require_dir(args.llm_dir, "llm")
    model = train_from_dirs(human, llm, cfg)
    out = _out_dir(args)
    fd, tmp = tempfile.mkstemp(dir=out, prefix=".model-", suffix=".tmp")
    os.close(fd)
    try:
        serialize_model(model, Path(tmp))
        os.replace(tmp, out / "model.tsv")
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    llm_words, human_words = export_top_words(model, cfg.top_words_threshold)
    write_csv(out / "top_words.csv", ("association", "word", "log_odds"),
              [("llm", w, repr(v)) for w, v in llm_words] + [("human", w, repr(v)) for w, v in human_words])
    text = report.word_table(llm_words, f"LLM-associated words, log odds > {cfg.top_words_threshold}")
    text += "\n" + report.word_table(human_words, f"Human-associated words, log odds < -{cfg.top_words_threshold}")
    (out / "top_words.txt").write_text(text, encoding="utf-8")
    logger.info("trained model over %d words", len(model))
    _finish(out, "train", cfg, {"human_dir": human, "llm_dir": llm})
    return EXIT_OK


def cmd_segment(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    src = _require_dir(args.corpus, "corpus")
    docs = load_sectioned_corpus(src)
    out = _out_dir(args)
    rows = segment_corpus(model, docs, cfg)
    write_segment_outputs(rows, out)
    if args.series:
        sdir = out / "series"
        sdir.mkdir(exist_ok=True)
        for d in docs:
            write_series(model, d.id, d.combined, sdir)
    _finish(out, "segment", cfg, {"model": Path(args.model), "corpus": src})
    if rows and all(r.threshold_multiplier == 0 for r in rows):
        raise Degenerate("every threshold multiplier is zero")
    return EXIT_OK


def cmd_validate(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    src = _require_dir(args.corpus, "corpus")
    docs = load_sectioned_corpus(src)
    out = _out_dir(args)
    provider = make_provider(cfg.provider_config())
    sets = build_validation_sets(docs, provider, cfg.seed, cfg.target_fraction)
    write_manifest(sets.manifest, out / "manifest.jsonl")
    write_manifest(provider.archive, out / "provider_archive.jsonl")
    write_csv(out / "skipped.csv", ("id", "reason"), sets.skipped)
    if len(sets.original) < 2:
        _finish(out, "validate", cfg, {"model": Path(args.model), "corpus": src})
        raise Degenerate("fewer than two documents survived regeneration")
    groups = {"original": sets.original, "regenerated": sets.regenerated, "segmented": sets.segmented}
    if args.write_texts:
        for g, texts in groups.items():
            (out / "texts" / g).mkdir(parents=True, exist_ok=True)
            for k, t in texts.items():
                (out / "texts" / g / f"{k}.txt").write_text(t, encoding="utf-8")
    res = validate_sets(model, groups, cfg)

    write_csv(out / "validation_scores.csv",
              ("id", "group", "length", "total", "variance", "threshold_multiplier", "threshold_normalized",
               "passes", "never_segments"),
              ([r.id, g, r.length, repr(r.total), repr(r.variance), repr(r.threshold_multiplier),
                repr(float(z)), r.passes, int(r.never_segments)] for (g, r), z in zip(res.rows, res.normalized)))
    write_csv(out / "summary.csv", ("metric", "group", "mean", "sd", "n"),
              ([m, s.label, repr(s.mean), repr(s.sd), s.n] for m in METRICS for s in res.summaries[m]))
    write_csv(out / "ttests.csv", ("metric", "comparison", "t", "p", "df"),
              ([m, f"{a} vs {b}", repr(t.t), repr(t.p), repr(t.df)] for m in METRICS for a, b, t in res.tests[m]))
    write_csv(out / "confusion.csv", ("actual", "predicted_human", "predicted_llm"),
              [("human", *res.confusion[0]), ("llm", *res.confusion[1])])
    spans = [(k, a, b, b - a, len(sets.original[k])) for k, (a, b) in sorted(sets.spans.items())]
    write_csv(out / "spans.csv", ("id", "start", "end", "inserted_chars", "original_chars"), spans)

    titles = {"threshold": "PELT threshold multiplier",
              "threshold_normalized": f"PELT threshold, length-normalized ({cfg.length_scheme})",
              "total_log_odds": "total log odds"}
    text = ""
    for m in METRICS:
        text += report.group_summary_table(res.summaries[m], f"Summary statistics by group: {titles[m]}") + "\n"
        text += report.ttest_table(res.tests[m], f"Pairwise {cfg.ttest} t-tests: {titles[m]}") + "\n"
    (out / "tables.txt").write_text(text, encoding="utf-8")

    plotting.threshold_histogram({g: res.values(g, "threshold") for g in GROUPS}, out / "threshold_hist.svg")
    plotting.threshold_histogram({g: res.values(g, "threshold_normalized") for g in GROUPS},
                                 out / "threshold_normalized_hist.svg", xlabel=titles["threshold_normalized"])
    plotting.score_histogram({g: res.values(g, "total_log_odds") for g in ("original", "regenerated")},
                             out / "classifier_hist.svg")
    plotting.confusion_plot(res.confusion, ("human", "llm"), out / "confusion.svg")
    _finish(out, "validate", cfg, {"model": Path(args.model), "corpus": src})
    return EXIT_OK


def cmd_analyze(args, cfg: RunConfig) -> int:
    rows = read_segments_csv(args.scores_csv)
    out = _out_dir(args)
    res = analyze_rows(rows, cfg, args.per_section)
    write_csv(out / "correlations.csv", ("block", "x", "y", "r", "p", "n"),
              [("original", c.x, c.y, repr(c.r), repr(c.p), c.n) for c in res.raw]
              + [("normalized", c.x, c.y, repr(c.r), repr(c.p), c.n) for c in res.normalized])
    write_csv(out / "normalized_scores.csv", ("id", "length", "z_log_odds", "z_threshold"),
              ([r["id"], r["length"], repr(float(a)), repr(float(b))]
               for r, a, b in zip(rows, res.z_log_odds, res.z_threshold)))
    text = report.correlation_table(res.raw, res.normalized)
    if res.section_matrix is not None:
        names = [s.capitalize() for s in SECTIONS] + ["Combined"]
        write_csv(out / "section_matrix.csv", ("row", "column", "r", "p", "n"),
                  ([a, b, repr(res.section_matrix[a, b].r), repr(res.section_matrix[a, b].p),
                    res.section_matrix[a, b].n] for a in names for b in names))
        text += "\n" + report.section_matrix_table(res.section_matrix, names)
    (out / "tables.txt").write_text(text, encoding="utf-8")
    plotting.length_scatter(res.lengths, {"total log odds": res.log_odds, "threshold": res.threshold},
                            out / "scatter_raw.svg", "Original variables")
    plotting.length_scatter(res.lengths, {"z-score log odds": res.z_log_odds, "z-score threshold": res.z_threshold},
                            out / "scatter_zscore.svg", "After length z-scoring")
    plotting.pair_scatter(res.z_log_odds, res.z_threshold, out / "zscore_pair.svg",
                          "z-score log odds", "z-score threshold")
    _finish(out, "analyze", cfg, {"scores_csv": Path(args.scores_csv)})
    if (res.threshold == 0).all():
        raise Degenerate("every threshold multiplier is zero")
    return EXIT_OK


_REPORT_FILES = (("tables.txt", None), ("top_words.txt", None), ("confusion.csv", "Classifier confusion matrix"),
                 ("rejections.csv", "Rejected documents"))


def cmd_report(args, cfg: RunConfig) -> int:
    out = _out_dir(args)
    parts = ["# stylseg report\n"]
    for d in args.run_dirs:
        d = _require_dir(d, "run")
        manifest = d / "run_manifest.json"
        cmd = json.loads(manifest.read_text())["command"] if manifest.exists() else "unknown"
        parts.append(f"\n## {cmd}: {d.name}\n")
        for name, title in _REPORT_FILES:
            p = d / name
            if not p.exists():
                continue
            body = p.read_text(encoding="utf-8") if p.suffix == ".txt" else report.render_csv_as_table(p, title)
            parts.append("\n```\n" + body.rstrip("\n") + "\n```\n")
        for svg in sorted(d.glob("*.svg")):
            parts.append(f"\n![{svg.stem}]({os.path.relpath(svg, out)})\n")
    (out / "report.md").write_text("".join(parts), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI config file")
    g = p.add_argument_group("config overrides")
    for f in fields(RunConfig):
        typ = {"int": int, "float": float}.get(f.type if isinstance(f.type, str) else f.type.__name__, str)
        g.add_argument("--" + f.name.replace("_", "-"), dest=f"cfg_{f.name}", type=typ, default=None,
                       help=f.metadata.get("help"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stylseg", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="write the synthetic paper fixture")
    p.add_argument("directory")
    p.add_argument("--n-docs", type=int, default=200)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("prepare", help="extract and clean sections from raw texts")
    p.add_argument("input_dir")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("regenerate", help="regenerate a sectioned corpus through the provider")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_regenerate)

    p = sub.add_parser("train", help="train the word log-odds model")
    p.add_argument("human_dir")
    p.add_argument("llm_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="score documents and search threshold multipliers")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("--series", action="store_true", help="also write per-document series CSVs")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("validate", help="original / regenerated / segmented comparison")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("--write-texts", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="length-confound and section correlation analysis")
    p.add_argument("scores_csv")
    p.add_argument("--per-section", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="collect run directories into one markdown report")
    p.add_argument("run_dirs", nargs="+")
    p.set_defaults(func=cmd_report)

    for name, sp in sub.choices.items():
        if name != "fixture":
            sp.add_argument("--out", required=True, help="output directory")
        _add_config_flags(sp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(
            **{k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_")})
        return args.func(args, cfg)
    except Degenerate as exc:
        print(f"stylseg: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (OSError, ValueError, SchemaError, MalformedModelFile, CorpusError, EmptyCorpus,
            SeriesTooShort, DegenerateSample, TooFewPoints, ProviderError) as exc:
        print(f"stylseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

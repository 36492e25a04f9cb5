"""
Seeded generator of synthetic paper texts.

Produces plain-text "papers" with an abstract, introduction, body sections and
a conclusion, using a mix of header styles and the clutter that cleaning has
to remove (keyword lines, links, journal lines). A fraction of documents is
deliberately malformed so the acceptance filter has something to reject.
"""

from __future__ import annotations

import random
from pathlib import Path

# Words the mock provider rewrites; they carry the "human" side of the signal.
HUMAN_MARKED = (
    "use", "uses", "used", "show", "shows", "showed", "big", "help", "helps", "because",
    "get", "gets", "try", "look", "need", "needs", "also", "about", "many", "new",
    "good", "part", "way", "check", "fast", "think", "come", "expect", "shall",
    "thank", "recent", "great", "main", "so", "lot", "find", "found", "keep",
)

CONTENT = (
    "model", "data", "method", "results", "analysis", "system", "network", "approach",
    "problem", "training", "set", "function", "performance", "paper", "work", "algorithm",
    "structure", "process", "value", "values", "time", "error", "sample", "samples",
    "measure", "signal", "field", "energy", "state", "states", "parameter", "parameters",
    "distribution", "theory", "experiment", "experiments", "case", "cases", "point", "points",
    "task", "tasks", "feature", "features", "layer", "layers", "graph", "matrix", "space",
    "rate", "loss", "noise", "image", "images", "text", "language", "user", "users",
    "protein", "cell", "cells", "galaxy", "star", "stars", "particle", "mass", "flow",
    "surface", "group", "groups", "order", "level", "scale", "test", "benchmark", "dataset",
    "estimate", "bound", "limit", "equation", "solution", "policy", "agent", "reward",
)

FUNCTION = (
    "the", "of", "and", "to", "in", "a", "is", "we", "for", "that", "this", "on", "with",
    "are", "by", "as", "be", "an", "from", "which", "it", "can", "our", "these", "at",
    "has", "have", "not", "or", "its", "their", "more", "than", "between", "each", "into",
    "when", "while", "both", "over", "under", "such", "then", "only", "all", "two", "one",
)

VERBS = (
    "propose", "study", "consider", "present", "describe", "compare", "derive", "obtain",
    "compute", "measure", "observe", "report", "train", "evaluate", "apply", "extend",
    "reduce", "increase", "improve", "learn", "predict", "solve", "model", "estimate",
)

ADJECTIVES = (
    "simple", "large", "small", "linear", "general", "standard", "previous", "first",
    "second", "local", "global", "different", "similar", "high", "low", "strong", "weak",
    "single", "multiple", "open", "common", "random", "physical", "statistical",
)

_ABSTRACT_HEADERS = ("Abstract", "ABSTRACT", "Abstract:", "\\begin{abstract}")
_INTRO_HEADERS = ("1 Introduction", "1. Introduction", "Introduction", "I. INTRODUCTION",
                  "\\section{Introduction}", "# 1 Introduction", "INTRODUCTION")
_CONCL_HEADERS = ("{n} Conclusion", "{n} Conclusions", "{n}. Discussion", "Conclusions",
                  "{roman}. CONCLUSION", "Concluding Remarks", "\\section{Conclusion}",
                  "{n} Discussion and Conclusions", "DISCUSSION")
_BODY_TITLES = ("Related Work", "Methods", "Model", "Experiments", "Results", "Data",
                "Theory", "Setup", "Evaluation", "Background")
_ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII")


class PaperGenerator:
    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)
        r = self.rng
        pool = list(FUNCTION) * 6 + list(CONTENT) * 2 + list(VERBS) + list(ADJECTIVES) + list(HUMAN_MARKED) * 2
        self.pool = pool
        self.weights = [1.0 / (1 + (i % 97)) ** 0.6 for i in range(len(pool))]
        r.shuffle(self.weights)

    def sentence(self) -> str:
        r = self.rng
        n = r.randint(10, 26)
        words = r.choices(self.pool, self.weights, k=n)
        if r.random() < 0.5:
            words[0] = r.choice(("we", "this", "the", "our", "in"))
        s = " ".join(words)
        return s[0].upper() + s[1:] + "."

    def paragraph(self, n_sentences: int | None = None) -> str:
        n = n_sentences or self.rng.randint(3, 7)
        return " ".join(self.sentence() for _ in range(n))

    def section_text(self, min_chars: int, max_paragraphs: int) -> str:
        paras = [self.paragraph()]
        while len("\n\n".join(paras)) < min_chars or (len(paras) < max_paragraphs and self.rng.random() < 0.55):
            paras.append(self.paragraph())
        return "\n\n".join(paras)

    def clutter(self) -> str:
        r = self.rng
        return r.choice((
            "Keywords: " + ", ".join(r.sample(CONTENT, 4)),
            "Index Terms: " + ", ".join(r.sample(CONTENT, 3)),
            f"arXiv:21{r.randint(10, 99)}.{r.randint(10000, 99999)}v{r.randint(1, 3)} [cs.LG] {r.randint(1, 28)} May 2021",
            f"Journal of Synthetic Studies, Vol. {r.randint(1, 40)}, No. {r.randint(1, 12)}, pp. {r.randint(1, 200)}-{r.randint(201, 400)}",
        ))

    def paper(self, scale: float = 1.0, defect: str | None = None) -> str:
        """One paper; ``defect`` is None, 'no_conclusion', 'short_abstract' or 'no_introduction'."""
        r = self.rng
        out = [" ".join(w.capitalize() for w in r.sample(CONTENT, 5)), ""]
        abs_header = r.choice(_ABSTRACT_HEADERS)
        out.append(abs_header)
        if defect == "short_abstract":
            out.append(self.paragraph(2)[:380])
        else:
            out.append(self.section_text(int(550 * scale), 1))
        if abs_header == "\\begin{abstract}":
            out.append("\\end{abstract}")
        if r.random() < 0.6:
            out.append(self.clutter())
        out.append("")
        n = 1
        if defect != "no_introduction":
            out.append(r.choice(_INTRO_HEADERS))
            intro = self.section_text(int(1100 * scale), 5)
            if r.random() < 0.4:
                intro += f" Code is available at https://example.org/{r.choice(CONTENT)}/{r.randint(1, 999)}."
            out.append(intro)
            out.append("")
        for title in r.sample(_BODY_TITLES, r.randint(1, 3)):
            n += 1
            out.append(f"{n} {title}")
            out.append(self.section_text(int(600 * scale), 3))
            out.append("")
        n += 1
        if defect != "no_conclusion":
            header = r.choice(_CONCL_HEADERS).replace("{n}", str(n)).replace("{roman}", _ROMAN[min(n, len(_ROMAN)) - 1])
            out.append(header)
            out.append(self.section_text(int(650 * scale), 3))
            out.append("")
        out.append("References")
        out.append(f"[1] A. Author. A {r.choice(ADJECTIVES)} {r.choice(CONTENT)}. 2020.")
        return "\n".join(out) + "\n"


DEFECTS = ("no_conclusion", "short_abstract", "no_introduction")


def write_fixture(out_dir: Path, n_docs: int = 200, seed: int = 0, defect_rate: float = 0.15) -> list[Path]:
    """Write ``n_docs`` synthetic papers as ``paper_XXXX.txt``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gen = PaperGenerator(seed)
    paths = []
    for i in range(n_docs):
        defect = gen.rng.choice(DEFECTS) if gen.rng.random() < defect_rate else None
        scale = gen.rng.uniform(1.0, 3.5)
        path = out_dir / f"paper_{i:04d}.txt"
        path.write_text(gen.paper(scale, defect), encoding="utf-8")
        paths.append(path)
    return paths

"""
Smoothed word log-odds model.

Each word gets ``ln(llm_rate + eps) - ln(human_rate + eps)`` where the rates
are per-document frequency rates averaged over each corpus. Scoring a document
maps every token to its log odds; the running sum is the series handed to the
changepoint search.
"""

from __future__ import annotations

import hashlib
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import EmptyTokenStream, TokenStream

SMOOTHING = 1e-4
MODEL_MAGIC = "#stylseg-logodds-model"
MODEL_VERSION = 1


class EmptyCorpus(ValueError):
    pass


class MalformedModelFile(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def frequency_rates(tokens: TokenStream | Sequence[str]) -> dict[str, float]:
    toks = tokens.tokens if isinstance(tokens, TokenStream) else tokens
    n = len(toks)
    if n == 0:
        raise EmptyTokenStream("cannot compute frequency rates of an empty token stream")
    return {w: c / n for w, c in Counter(toks).items()}


@dataclass(frozen=True)
class FrequencyProfile:
    rates: dict[str, float]
    doc_count: int

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.doc_count}\n".encode())
        for w in sorted(self.rates):
            h.update(f"{w}\t{self.rates[w]!r}\n".encode())
        return h.hexdigest()


def build_profile(docs: Sequence[TokenStream | Sequence[str]], min_doc_freq: int = 0) -> FrequencyProfile:
    """Average per-document frequency rates over a corpus.

    A word missing from a document contributes rate 0 for that document.
    ``min_doc_freq`` drops words seen in fewer documents (0 disables).
    """
    if not docs:
        raise EmptyCorpus("cannot build a profile from zero documents")
    per_word: dict[str, list[float]] = {}
    for d in docs:
        for w, r in frequency_rates(d).items():
            per_word.setdefault(w, []).append(r)
    n = len(docs)
    rates = {w: math.fsum(rs) / n for w, rs in per_word.items() if len(rs) >= min_doc_freq}
    return FrequencyProfile(rates, n)


@dataclass(frozen=True)
class LogOddsModel:
    log_odds: dict[str, float]
    smoothing: float = SMOOTHING
    human_profile_digest: str = ""
    llm_profile_digest: str = ""

    def __getitem__(self, word: str) -> float:
        return self.log_odds.get(word, 0.0)

    def __len__(self) -> int:
        return len(self.log_odds)

    def digest(self) -> str:
        return hashlib.sha256(_model_body(self).encode()).hexdigest()


def word_log_odds(llm_rate: float, human_rate: float, eps: float = SMOOTHING) -> float:
    # difference of logs keeps the profile-swap antisymmetry exact
    return math.log(llm_rate + eps) - math.log(human_rate + eps)


def train(human: FrequencyProfile, llm: FrequencyProfile, smoothing: float = SMOOTHING) -> LogOddsModel:
    vocab = set(human.rates) | set(llm.rates)
    lo = {w: word_log_odds(llm.rates.get(w, 0.0), human.rates.get(w, 0.0), smoothing) for w in vocab}
    return LogOddsModel(lo, smoothing, human.digest(), llm.digest())


@dataclass(frozen=True)
class ScoredDocument:
    id: str
    word_odds: np.ndarray
    cumsum: np.ndarray
    tokens: tuple[str, ...] = field(default=(), repr=False)

    @property
    def total(self) -> float:
        return float(self.cumsum[-1])

    @property
    def length(self) -> int:
        return len(self.word_odds)

    @property
    def variance(self) -> float:
        return float(np.var(self.word_odds))


def score(model: LogOddsModel, tokens: TokenStream, id: str = "") -> ScoredDocument:
    """Per-token log odds; out-of-vocabulary tokens score 0."""
    if len(tokens) == 0:
        raise EmptyTokenStream("cannot score an empty token stream")
    lo = model.log_odds
    odds = np.fromiter((lo.get(t, 0.0) for t in tokens.tokens), dtype=float, count=len(tokens))
    return ScoredDocument(id, odds, np.cumsum(odds), tokens.tokens)


def classify(doc: ScoredDocument, threshold: float = 0.0) -> bool:
    """True when the document's total log odds call it LLM-generated."""
    return doc.total > threshold


def export_top_words(model: LogOddsModel, threshold: float) -> tuple[list[tuple[str, float]], list[tuple[str, float]]]:
    """Words with log odds beyond +/-threshold, strongest first."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    llm = sorted(((w, v) for w, v in model.log_odds.items() if v > threshold), key=lambda x: (-x[1], x[0]))
    human = sorted(((w, v) for w, v in model.log_odds.items() if v < -threshold), key=lambda x: (x[1], x[0]))
    return llm, human


# ---------------------------------------------------------------------------
# Model file
# ---------------------------------------------------------------------------
#
#   #stylseg-logodds-model v1 smoothing=0.0001 words=N human=<sha256> llm=<sha256>
#   word<TAB>log_odds        (sorted by word, repr() floats)
#   #end sha256=<digest of the rows>

def _model_body(model: LogOddsModel) -> str:
    return "".join(f"{w}\t{model.log_odds[w]!r}\n" for w in sorted(model.log_odds))


def dumps_model(model: LogOddsModel) -> str:
    body = _model_body(model)
    header = (f"{MODEL_MAGIC} v{MODEL_VERSION} smoothing={model.smoothing!r} words={len(model.log_odds)} "
              f"human={model.human_profile_digest or '-'} llm={model.llm_profile_digest or '-'}\n")
    footer = f"#end sha256={hashlib.sha256(body.encode()).hexdigest()}\n"
    return header + body + footer


def serialize_model(model: LogOddsModel, path: Path) -> None:
    Path(path).write_bytes(dumps_model(model).encode("utf-8"))


def loads_model(data: bytes) -> LogOddsModel:
    stream = io.BytesIO(data)
    offset = 0
    raw = stream.readline()
    try:
        header = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedModelFile("header is not UTF-8", 0) from None
    fields = header.split()
    if not fields or fields[0] != MODEL_MAGIC or not header.endswith("\n"):
        raise MalformedModelFile("missing model header", 0)
    try:
        meta = dict(f.split("=", 1) for f in fields[2:])
        smoothing = float(meta["smoothing"])
        n_words = int(meta["words"])
    except (KeyError, ValueError):
        raise MalformedModelFile("bad header fields", 0) from None
    offset += len(raw)

    log_odds: dict[str, float] = {}
    body = hashlib.sha256()
    for _ in range(n_words):
        raw = stream.readline()
        if not raw.endswith(b"\n"):
            raise MalformedModelFile("truncated model file", offset)
        try:
            word, value = raw.decode("utf-8").rstrip("\n").split("\t")
            log_odds[word] = float(value)
        except ValueError:
            raise MalformedModelFile("bad model row", offset) from None
        body.update(raw)
        offset += len(raw)

    raw = stream.readline()
    if not raw.startswith(b"#end sha256=") or not raw.endswith(b"\n"):
        raise MalformedModelFile("missing end marker", offset)
    if raw[len(b"#end sha256="):].strip().decode() != body.hexdigest():
        raise MalformedModelFile("checksum mismatch", offset)
    offset += len(raw)
    if stream.read(1):
        raise MalformedModelFile("trailing data after end marker", offset)

    human = meta.get("human", "-")
    llm = meta.get("llm", "-")
    return LogOddsModel(log_odds, smoothing, "" if human == "-" else human, "" if llm == "-" else llm)


def load_model(path: Path) -> LogOddsModel:
    return loads_model(Path(path).read_bytes())


def profile_from_corpus(docs: Mapping[str, TokenStream] | Sequence[TokenStream], min_doc_freq: int = 0) -> FrequencyProfile:
    streams = list(docs.values()) if isinstance(docs, Mapping) else list(docs)
    return build_profile(streams, min_doc_freq)

"""
LLM regeneration of human texts and paragraph injection.

Two providers share one small interface, ``complete(prompt) -> str``:

* ``MockProvider``: offline and seeded. It rewrites text by synonym
  substitution toward a fixed set of LLM-flavored words plus light sentence
  reordering, and writes new paragraphs in the same style. The same (seed,
  prompt) always gives the same output, independent of call order.
* ``ChatCompletionProvider``: any HTTP endpoint speaking the chat-completion
  JSON shape (``{"model", "messages"}`` in, ``choices[0].message.content``
  out), with retries on rate limiting and timeouts.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import time
from dataclasses import asdict, dataclass, field
from typing import Protocol, Sequence

import httpx

from .corpus import SECTIONS, SectionedDocument

logger = logging.getLogger(__name__)

TARGET_FRACTION = 0.194
REWRITE_PROMPT = "Rewrite the following academic text preserving its meaning:\n\n{text}"
INJECT_PROMPT = ("Write one new paragraph of about {chars} characters that could appear in the "
                 "following academic text. Return only the paragraph.\n\n{text}")


class ProviderError(RuntimeError):
    pass


class ProviderTimeout(ProviderError):
    pass


class ProviderRefusal(ProviderError):
    pass


class RateLimited(ProviderError):
    def __init__(self, retry_after: float | None = None):
        super().__init__(f"rate limited (retry after {retry_after}s)")
        self.retry_after = retry_after


class EmptyCompletion(ProviderError):
    pass


class NoParagraphBoundary(ValueError):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"  # "mock" or "http"
    endpoint: str = ""
    model: str = "mock-1"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    seed: int = 0
    rewrite_prompt: str = REWRITE_PROMPT
    inject_prompt: str = INJECT_PROMPT

    def public(self) -> dict:
        """Config fields safe to persist (the credential itself is never stored here)."""
        return asdict(self)

    def digest(self) -> str:
        d = self.public()
        d.pop("rewrite_prompt")
        d.pop("inject_prompt")
        d.pop("timeout")
        d.pop("max_retries")
        return _digest(json.dumps(d, sort_keys=True))


def _digest(s: str) -> str:
    return hashlib.sha256(s.encode("utf-8")).hexdigest()


class Provider(Protocol):
    config: ProviderConfig
    archive: list

    def complete(self, prompt: str) -> str: ...


# ---------------------------------------------------------------------------
# Mock provider
# ---------------------------------------------------------------------------

SYNONYMS: dict[str, tuple[str, ...]] = {
    "use": ("utilize", "leverage"), "uses": ("utilizes", "leverages"), "used": ("utilized", "leveraged"),
    "show": ("demonstrate", "showcase"), "shows": ("demonstrates", "underscores"),
    "showed": ("demonstrated", "revealed"), "big": ("substantial", "significant"),
    "help": ("facilitate", "enhance"), "helps": ("facilitates", "enhances"),
    "because": ("given that", "owing to the fact that"), "get": ("obtain", "acquire"),
    "gets": ("obtains", "acquires"), "try": ("endeavor", "strive"), "look": ("examine", "delve"),
    "need": ("require", "necessitate"), "needs": ("requires", "necessitates"),
    "also": ("additionally", "furthermore"), "about": ("approximately", "regarding"),
    "many": ("numerous", "various"), "new": ("innovative", "novel"), "good": ("beneficial", "favorable"),
    "part": ("component", "aspect"), "way": ("approach", "methodology"), "check": ("verification", "validate"),
    "fast": ("efficient", "rapid"), "think": ("posit", "contend"), "come": ("emerge", "arise"),
    "expect": ("anticipate", "envision"), "shall": ("will", "is poised to"), "thank": ("acknowledge",),
    "recent": ("contemporary", "emerging"), "great": ("remarkable", "notable"), "main": ("primary", "pivotal"),
    "so": ("consequently", "thereby"), "lot": ("multitude",), "find": ("identify", "uncover"),
    "found": ("identified", "uncovered"), "keep": ("maintain", "preserve"),
}

FLAVOR_OPENERS = ("Notably,", "Furthermore,", "Moreover,", "Importantly,", "Additionally,",
                  "In this realm,", "Crucially,")
FLAVOR_WORDS = ("comprehensive", "crucial", "robust", "innovative", "significant", "efficiency",
                "efficacy", "utilization", "configuration", "realm", "pivotal", "intricate",
                "seamless", "holistic", "multifaceted", "enhance", "underscore", "delve")

_SENTENCE = re.compile(r"[^.!?]+[.!?]+|[^.!?]+$")
_TOKEN = re.compile(r"[A-Za-z]+|[^A-Za-z]+")


def _match_case(src: str, dst: str) -> str:
    if src.isupper() and len(src) > 1:
        return dst.upper()
    if src[0].isupper():
        return dst[0].upper() + dst[1:]
    return dst


class MockProvider:
    """Seeded offline stand-in for a chat-completion model."""

    def __init__(self, config: ProviderConfig | None = None, substitution_rate: float = 0.85,
                 opener_rate: float = 0.3, swap_rate: float = 0.15):
        self.config = config or ProviderConfig()
        self.substitution_rate = substitution_rate
        self.opener_rate = opener_rate
        self.swap_rate = swap_rate
        self.archive: list[dict] = []

    def _rng(self, prompt: str) -> random.Random:
        h = hashlib.sha256(f"{self.config.seed}\x00{prompt}".encode()).digest()
        return random.Random(int.from_bytes(h[:8], "big"))

    def _rewrite_sentence(self, s: str, rng: random.Random, rate: float) -> str:
        parts = []
        for tok in _TOKEN.findall(s):
            low = tok.lower()
            if low in SYNONYMS and rng.random() < rate:
                tok = _match_case(tok, rng.choice(SYNONYMS[low]))
            parts.append(tok)
        out = "".join(parts).strip()
        if out and rng.random() < self.opener_rate:
            out = rng.choice(FLAVOR_OPENERS) + " " + out[0].lower() + out[1:]
        return out

    def rewrite(self, text: str, rng: random.Random) -> str:
        paragraphs = text.split("\n")
        out = []
        for para in paragraphs:
            sents = [s.strip() for s in _SENTENCE.findall(para) if s.strip()]
            for i in range(len(sents) - 1):
                if rng.random() < self.swap_rate:
                    sents[i], sents[i + 1] = sents[i + 1], sents[i]
            out.append(" ".join(self._rewrite_sentence(s, rng, self.substitution_rate) for s in sents))
        result = "\n".join(out)
        if result == text:
            result = result + " " + rng.choice(FLAVOR_OPENERS) + " this work is comprehensive."
        return result

    def write_paragraph(self, context: str, chars: int, rng: random.Random) -> str:
        words = re.findall(r"[a-z]+", context.lower()) or ["text"]
        sentences: list[str] = []
        total = 0
        while total < chars:
            n = rng.randint(10, 22)
            ws = [rng.choice(words) for _ in range(n)]
            for _ in range(rng.randint(2, 4)):
                ws.insert(rng.randrange(len(ws) + 1), rng.choice(FLAVOR_WORDS))
            s = " ".join(ws)
            s = self._rewrite_sentence(s[0].upper() + s[1:] + ".", rng, 1.0)
            sentences.append(s)
            total += len(s) + 1
        para = " ".join(sentences)
        # trim back to the nearest sentence end within the target
        if len(para) > chars * 1.1 and len(sentences) > 1:
            cut = para.rfind(". ", 0, int(chars * 1.05))
            if cut > chars * 0.8:
                para = para[:cut + 1]
        return para

    def complete(self, prompt: str) -> str:
        rng = self._rng(prompt)
        m = re.match(r"Write one new paragraph of about (\d+) characters", prompt)
        text = prompt.split("\n\n", 1)[1] if "\n\n" in prompt else prompt
        if m:
            out = self.write_paragraph(text, int(m.group(1)), rng)
        else:
            out = self.rewrite(text, rng)
        self.archive.append({"request": {"model": self.config.model, "prompt_digest": _digest(prompt)},
                             "response": {"digest": _digest(out), "chars": len(out)}})
        return out


# ---------------------------------------------------------------------------
# HTTP chat-completion provider
# ---------------------------------------------------------------------------

class ChatCompletionProvider:
    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None,
                 sleep=time.sleep):
        if not config.endpoint:
            raise ValueError("http provider needs an endpoint")
        self.config = config
        self.client = client or httpx.Client(timeout=config.timeout)
        self.sleep = sleep
        self.archive: list[dict] = []

    def _headers(self) -> dict:
        key = os.environ.get(self.config.api_key_env, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _once(self, payload: dict) -> str:
        try:
            resp = self.client.post(self.config.endpoint, json=payload, headers=self._headers(),
                                    timeout=self.config.timeout)
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc)) from exc
        # archived without headers so the credential never lands on disk
        self.archive.append({"request": payload, "status": resp.status_code, "response": resp.text})
        if resp.status_code == 429:
            ra = resp.headers.get("retry-after")
            raise RateLimited(float(ra) if ra else None)
        if resp.status_code >= 500:
            raise ProviderError(f"server error {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderRefusal(f"request rejected with status {resp.status_code}")
        try:
            choice = resp.json()["choices"][0]
            content = choice["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError("malformed completion response") from exc
        if choice.get("finish_reason") == "content_filter":
            raise ProviderRefusal("completion withheld by content filter")
        if not content or not content.strip():
            raise EmptyCompletion("provider returned an empty completion")
        return content.strip()

    def complete(self, prompt: str) -> str:
        payload = {"model": self.config.model, "messages": [{"role": "user", "content": prompt}]}
        delay = 1.0
        for attempt in range(self.config.max_retries + 1):
            try:
                return self._once(payload)
            except (RateLimited, ProviderTimeout) as exc:
                if attempt == self.config.max_retries:
                    raise
                wait = exc.retry_after if isinstance(exc, RateLimited) and exc.retry_after else delay
                logger.warning("provider call failed (%s); retrying in %.1fs", exc, wait)
                self.sleep(wait)
                delay *= 2
        raise AssertionError("unreachable")


def make_provider(config: ProviderConfig) -> Provider:
    if config.kind == "mock":
        return MockProvider(config)
    if config.kind == "http":
        return ChatCompletionProvider(config)
    raise ValueError(f"unknown provider kind {config.kind!r}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def regenerate(provider: Provider, text: str) -> str:
    if not text or not text.strip():
        raise ValueError("text to regenerate must be non-empty")
    out = provider.complete(provider.config.rewrite_prompt.format(text=text))
    if not out.strip():
        raise EmptyCompletion("provider returned an empty completion")
    return out


def paragraph_boundaries(text: str) -> list[int]:
    """Offsets just after each internal line break."""
    return [i + 1 for i, c in enumerate(text) if c == "\n" and 0 < i + 1 < len(text)]


@dataclass(frozen=True)
class Injection:
    text: str
    span: tuple[int, int]

    def remove(self) -> str:
        a, b = self.span
        return self.text[:a] + self.text[b:]


def inject_paragraph(provider: Provider, text: str, target_fraction: float = TARGET_FRACTION,
                     rng: random.Random | None = None) -> Injection:
    """Insert a generated paragraph at a random paragraph boundary.

    The returned span covers the inserted paragraph and its trailing newline,
    so removing it gives back ``text`` exactly.
    """
    if not 0 < target_fraction < 1:
        raise ValueError("target_fraction must be in (0, 1)")
    bounds = paragraph_boundaries(text)
    if len(bounds) < 2:
        raise NoParagraphBoundary("text needs at least two paragraph boundaries")
    chars = max(1, round(target_fraction * len(text)))
    para = provider.complete(provider.config.inject_prompt.format(chars=chars, text=text)).strip()
    if not para:
        raise EmptyCompletion("provider returned an empty paragraph")
    para = " ".join(para.split())
    pos = (rng or random.Random(0)).choice(bounds)
    inserted = para + "\n"
    return Injection(text[:pos] + inserted + text[pos:], (pos, pos + len(inserted)))


def regenerate_document(provider: Provider, doc: SectionedDocument) -> SectionedDocument:
    """Regenerate each section separately, as paired training data."""
    return SectionedDocument(doc.id, *(regenerate(provider, getattr(doc, s)) for s in SECTIONS))


@dataclass
class ValidationSets:
    original: dict[str, str] = field(default_factory=dict)
    regenerated: dict[str, str] = field(default_factory=dict)
    segmented: dict[str, str] = field(default_factory=dict)
    spans: dict[str, tuple[int, int]] = field(default_factory=dict)
    manifest: list[dict] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def _insertion_rng(seed: int, doc_id: str) -> random.Random:
    h = hashlib.sha256(f"insert\x00{seed}\x00{doc_id}".encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


def build_validation_sets(corpus: Sequence[SectionedDocument], provider: Provider, seed: int = 0,
                          target_fraction: float = TARGET_FRACTION) -> ValidationSets:
    """Original, regenerated and segmented versions of every document.

    A provider failure on one document skips that document (recorded in
    ``skipped``); nothing is substituted.
    """
    cfg = provider.config
    pdig = cfg.digest()
    rewrite_dig = _digest(cfg.rewrite_prompt)
    inject_dig = _digest(cfg.inject_prompt)
    provider_meta = {k: v for k, v in cfg.public().items() if k not in ("rewrite_prompt", "inject_prompt")}
    out = ValidationSets()
    for doc in sorted(corpus, key=lambda d: d.id):
        try:
            regen = regenerate_document(provider, doc).combined
            inj = inject_paragraph(provider, doc.combined, target_fraction, _insertion_rng(seed, doc.id))
        except (ProviderError, NoParagraphBoundary, ValueError) as exc:
            logger.warning("skipping %s: %s", doc.id, exc)
            out.skipped.append((doc.id, f"{type(exc).__name__}: {exc}"))
            continue
        out.original[doc.id] = doc.combined
        out.regenerated[doc.id] = regen
        out.segmented[doc.id] = inj.text
        out.spans[doc.id] = inj.span
        base = {"provider": provider_meta, "insertion_seed": seed, "target_fraction": target_fraction}
        out.manifest.append({"id": doc.id, "kind": "original", "prompt_digest": None, "provider_digest": None})
        out.manifest.append({"id": doc.id, "kind": "regenerated", "prompt_digest": rewrite_dig,
                             "provider_digest": pdig, **base})
        out.manifest.append({"id": doc.id, "kind": "segmented", "span": list(inj.span),
                             "prompt_digest": inject_dig, "provider_digest": pdig, **base})
    return out


def write_manifest(records: Sequence[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

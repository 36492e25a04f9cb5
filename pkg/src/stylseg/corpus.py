"""
Section extraction, cleaning and tokenization for raw paper text.

A document is accepted only if an Abstract, an Introduction and a
Conclusion-or-Discussion section can be located, in that order, and each
section holds at least ``MIN_SECTION_CHARS`` characters of raw text.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)

MIN_SECTION_CHARS = 500
SECTIONS = ("abstract", "introduction", "conclusion")


class CorpusError(ValueError):
    pass


class MissingSection(CorpusError):
    def __init__(self, section: str):
        super().__init__(f"missing {section} header")
        self.section = section


class SectionTooShort(CorpusError):
    def __init__(self, section: str, length: int):
        super().__init__(f"{section} section too short ({length} < {MIN_SECTION_CHARS} chars)")
        self.section = section
        self.length = length


class HeaderOrderViolation(CorpusError):
    def __init__(self, detail: str):
        super().__init__(f"header order violation: {detail}")
        self.detail = detail


class EmptyTokenStream(ValueError):
    pass


@dataclass(frozen=True)
class RawDocument:
    id: str
    body: str

    def __post_init__(self):
        if not self.body:
            raise CorpusError(f"document {self.id!r} has an empty body")


@dataclass(frozen=True)
class SectionedDocument:
    id: str
    abstract: str
    introduction: str
    conclusion: str

    @property
    def combined(self) -> str:
        return "\n".join((self.abstract, self.introduction, self.conclusion))

    def to_json(self) -> dict:
        d = asdict(self)
        d["combined"] = self.combined
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SectionedDocument":
        return cls(d["id"], d["abstract"], d["introduction"], d["conclusion"])


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...]
    source_len: int

    def __len__(self) -> int:
        return len(self.tokens)

    def __add__(self, other: "TokenStream") -> "TokenStream":
        return TokenStream(self.tokens + other.tokens, self.source_len + other.source_len)


# ---------------------------------------------------------------------------
# Header criteria
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeaderRule:
    """A line-anchored header matcher.

    ``pattern`` must define a ``title`` group; the section kind is read off the
    title text, so one rule can recognise several section names.
    """

    name: str
    pattern: re.Pattern

    def match(self, line: str) -> str | None:
        m = self.pattern.match(line)
        if m is None:
            return None
        return m.group("title")


def _rule(name: str, regex: str, flags: int = 0) -> HeaderRule:
    return HeaderRule(name, re.compile(regex, flags))


_TITLES = r"(?:abstract|introduction|conclusions?|concluding\s+remarks|discussion|" \
          r"(?:conclusions?|discussion)\s+(?:and|&)\s+(?:conclusions?|discussion|future\s+work|outlook))"

DEFAULT_CRITERIA: tuple[HeaderRule, ...] = (
    _rule("abstract_line", r"^\s*(?P<title>Abstract|ABSTRACT)\s*[:.—-]?\s*$"),
    _rule("numbered_introduction",
          r"^\s*(?:\d+|[A-Z])\.?\s+(?P<title>Introduction|INTRODUCTION)\s*$"),
    _rule("unnumbered_introduction", r"^\s*(?P<title>Introduction)\s*:?\s*$"),
    _rule("roman_heading", r"^\s*[IVXLC]+\.?\s+(?P<title>(?i:" + _TITLES + r"))\s*$"),
    _rule("all_caps_heading", r"^\s*(?:\d+\.?\s+)?(?P<title>[A-Z][A-Z &]{3,60}[A-Z])\s*$"),
    _rule("conclusion",
          r"^\s*(?:\d+(?:\.\d+)*\.?\s+)?(?P<title>Conclusions?(?:\s+(?:and|&)\s+[A-Z][a-z]+(?:\s+[A-Za-z]+)?)?)\s*$"),
    _rule("discussion",
          r"^\s*(?:\d+(?:\.\d+)*\.?\s+)?(?P<title>(?:General\s+)?Discussion(?:\s+(?:and|&)\s+Conclusions?)?)\s*$"),
    _rule("concluding_remarks",
          r"^\s*(?:\d+(?:\.\d+)*\.?\s+)?(?P<title>Concluding\s+[Rr]emarks)\s*$"),
    _rule("markup_section",
          r"^\s*(?:\\(?:sub)*section\*?\{(?P<title>[^}]+)\}|\\begin\{(?P<_env>abstract)\}|#{1,3}\s+(?:\d+\.?\s+)?(?P<_md>.+?))\s*$"),
)

# Lines that end a section without being one of the three targets.
_GENERIC_HEADING = re.compile(
    r"^\s*(?:"
    r"\d+(?:\.\d+)*\.?\s+[A-Z][A-Za-z\-]*(?:\s+[A-Za-z\-&]+){0,7}"
    r"|[IVXLC]+\.\s+[A-Z][A-Za-z\-]*(?:\s+[A-Za-z\-&]+){0,7}"
    r"|(?:References|Bibliography|Acknowledge?ments?|Appendix(?:\s+[A-Z])?|Related\s+Work)"
    r"|\\(?:sub)*section\*?\{[^}]+\}|\\end\{abstract\}|#{1,3}\s+\S.*"
    r"|[A-Z][A-Z &\-]{3,60}[A-Z]"
    r")\s*:?\s*$"
)


def _classify_title(title: str) -> str | None:
    t = " ".join(title.lower().split())
    if t == "abstract":
        return "abstract"
    if t == "introduction":
        return "introduction"
    if t.startswith(("conclusion", "concluding")):
        return "conclusion"
    if "discussion" in t and ("conclusion" in t or t.endswith("discussion")):
        return "discussion"
    return None


def _header_title(rule: HeaderRule, line: str) -> str | None:
    m = rule.pattern.match(line)
    if m is None:
        return None
    gd = m.groupdict()
    for key in ("title", "_env", "_md"):
        if gd.get(key):
            return gd[key]
    return None


@dataclass(frozen=True)
class _Header:
    line_no: int
    kind: str | None  # None for generic headings that only terminate sections
    rule: str


def _scan_headers(lines: Sequence[str], criteria: Sequence[HeaderRule]) -> list[_Header]:
    headers = []
    for i, line in enumerate(lines):
        if not line.strip() or len(line) > 100:
            continue
        found = None
        for rule in criteria:
            title = _header_title(rule, line)
            if title is None:
                continue
            kind = _classify_title(title)
            if kind is not None:
                found = _Header(i, kind, rule.name)
                break
        if found is None and _GENERIC_HEADING.match(line):
            found = _Header(i, None, "generic")
        if found is not None:
            headers.append(found)
    return headers


def detect_sections(doc: RawDocument, criteria: Sequence[HeaderRule] = DEFAULT_CRITERIA,
                    min_chars: int = MIN_SECTION_CHARS, clean: bool = True) -> SectionedDocument:
    """Locate Abstract, Introduction and Conclusion/Discussion sections.

    Each section runs from the line after its header up to the next header of
    any kind. Lengths are checked on the raw text before cleaning. A
    Conclusion-type header is preferred over a Discussion header when both
    follow the introduction.

    Raises MissingSection, HeaderOrderViolation or SectionTooShort.
    """
    if not criteria:
        raise ValueError("criteria must be non-empty")
    lines = doc.body.splitlines()
    headers = _scan_headers(lines, criteria)

    def first(kind, after=-1):
        return next((h for h in headers if h.kind == kind and h.line_no > after), None)

    abstract = first("abstract")
    if abstract is None:
        raise MissingSection("abstract")
    intro = first("introduction", abstract.line_no)
    if intro is None:
        if first("introduction") is not None:
            raise HeaderOrderViolation("introduction precedes abstract")
        raise MissingSection("introduction")
    concl = first("conclusion", intro.line_no) or first("discussion", intro.line_no)
    if concl is None:
        if first("conclusion") is not None or first("discussion") is not None:
            raise HeaderOrderViolation("conclusion precedes introduction")
        raise MissingSection("conclusion")

    def body_after(h: _Header) -> str:
        nxt = next((o.line_no for o in headers if o.line_no > h.line_no), len(lines))
        return "\n".join(lines[h.line_no + 1:nxt]).strip()

    raw = {"abstract": body_after(abstract),
           "introduction": body_after(intro),
           "conclusion": body_after(concl)}
    for name in SECTIONS:
        if len(raw[name]) < min_chars:
            raise SectionTooShort(name, len(raw[name]))
    if clean:
        raw = {k: clean_section(v) for k, v in raw.items()}
    return SectionedDocument(doc.id, raw["abstract"], raw["introduction"], raw["conclusion"])


# ---------------------------------------------------------------------------
# Cleaning
# ---------------------------------------------------------------------------

# Whole lines that are dropped.
DEFAULT_LINE_PATTERNS: tuple[str, ...] = (
    r"^\s*(?:key\s*words?|index\s+terms|subject\s+classification|msc\s*(?:\d{4})?|pacs)\s*[:.—-].*$",
    r"^\s*arxiv:\s*\d{4}\.\d{4,5}.*$",
    r"^.*\b(?:vol(?:ume)?\.?\s*\d+\s*,?\s*(?:no\.?|issue)\s*\d+|pp\.\s*\d+\s*[-–]\s*\d+).*$",
    r"^\s*(?:issn|isbn|e-?issn)\s*:?\s*[\dxX\-]+.*$",
    r"^\s*(?:preprint\s+submitted\s+to|accepted\s+(?:for\s+publication\s+)?in|published\s+in)\b.*$",
    r"^\s*(?:report|technical\s+report)\s+(?:no\.?|number)\s*[\w\-/]+\s*$",
)

# Inline spans that are removed.
DEFAULT_INLINE_PATTERNS: tuple[str, ...] = (
    r"\bhttps?://\S+",
    r"\bwww\.\S+",
    r"\bdoi:\s*10\.\d{4,9}/\S+",
    r"\b10\.\d{4,9}/[-._;()/:A-Za-z0-9]+",
    r"\barxiv:\s*\d{4}\.\d{4,5}(?:v\d+)?",
)


class Cleaner:
    """Regex-driven section cleaner; extra patterns come from configuration."""

    def __init__(self, line_patterns: Iterable[str] = DEFAULT_LINE_PATTERNS,
                 inline_patterns: Iterable[str] = DEFAULT_INLINE_PATTERNS):
        self.line_res = [re.compile(p, re.IGNORECASE) for p in line_patterns]
        self.inline_res = [re.compile(p, re.IGNORECASE) for p in inline_patterns]

    def __call__(self, text: str) -> str:
        out = []
        for line in text.splitlines():
            if any(r.match(line) for r in self.line_res):
                continue
            for r in self.inline_res:
                line = r.sub(" ", line)
            line = " ".join(line.split())
            line = re.sub(r"\s+([.,;:!?)])", r"\1", line)
            line = re.sub(r"\(\s*\)", "", line).strip()
            line = " ".join(line.split())
            if line:
                out.append(line)
        return "\n".join(out)


_default_cleaner = Cleaner()


def clean_section(text: str, cleaner: Cleaner | None = None) -> str:
    """Remove URLs, keyword lists and journal/report-number lines.

    Whitespace inside each line is collapsed and blank lines are dropped, so
    paragraphs survive as one line each.
    """
    return (cleaner or _default_cleaner)(text)


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

_WORD = re.compile(r"[A-Za-z]+")


def tokenize(text: str) -> TokenStream:
    tokens = tuple(m.group(0).lower() for m in _WORD.finditer(text))
    if not tokens:
        raise EmptyTokenStream("no alphabetic tokens in text")
    return TokenStream(tokens, len(text))


# ---------------------------------------------------------------------------
# Corpus IO
# ---------------------------------------------------------------------------

@dataclass
class PrepareResult:
    accepted: list[SectionedDocument] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)


def rejection_reason(exc: Exception) -> str:
    if isinstance(exc, MissingSection):
        return f"missing_section:{exc.section}"
    if isinstance(exc, SectionTooShort):
        return f"section_too_short:{exc.section}:{exc.length}"
    if isinstance(exc, HeaderOrderViolation):
        return "header_order_violation"
    return f"{type(exc).__name__}:{exc}"


def iter_raw_documents(input_dir: Path) -> Iterator[RawDocument | tuple[str, Exception]]:
    """Yield documents from ``*.txt`` files sorted by name; unreadable files yield (id, error)."""
    for path in sorted(Path(input_dir).glob("*.txt")):
        try:
            body = path.read_text(encoding="utf-8")
            yield RawDocument(path.stem, body)
        except (OSError, UnicodeDecodeError, CorpusError) as exc:
            yield path.stem, exc


def prepare_corpus(input_dir: Path, criteria: Sequence[HeaderRule] = DEFAULT_CRITERIA,
                   cleaner: Cleaner | None = None, min_chars: int = MIN_SECTION_CHARS) -> PrepareResult:
    result = PrepareResult()
    for item in iter_raw_documents(input_dir):
        if isinstance(item, tuple):
            result.rejected.append((item[0], rejection_reason(item[1])))
            continue
        try:
            doc = detect_sections(item, criteria, min_chars=min_chars, clean=False)
        except CorpusError as exc:
            result.rejected.append((item.id, rejection_reason(exc)))
            continue
        doc = SectionedDocument(doc.id, *(clean_section(getattr(doc, s), cleaner) for s in SECTIONS))
        result.accepted.append(doc)
    return result


def write_sections(doc: SectionedDocument, out_dir: Path) -> Path:
    path = Path(out_dir) / f"{doc.id}.sections.json"
    path.write_text(json.dumps(doc.to_json(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def write_rejections(rows: Sequence[tuple[str, str]], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "reason"])
        w.writerows(sorted(rows))


def load_sectioned_corpus(corpus_dir: Path) -> list[SectionedDocument]:
    docs = []
    for path in sorted(Path(corpus_dir).glob("*.sections.json")):
        docs.append(SectionedDocument.from_json(json.loads(path.read_text(encoding="utf-8"))))
    return docs

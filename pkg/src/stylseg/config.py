"""
Run configuration: one flat set of keys, grouped into INI sections on disk.

Every key can be overridden on the command line by a flag of the same name
(``min_segment_length`` -> ``--min-segment-length``).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .regen import INJECT_PROMPT, REWRITE_PROMPT, TARGET_FRACTION, ProviderConfig


def _key(section: str, default, help: str = ""):
    return field(default=default, metadata={"section": section, "help": help})


@dataclass(frozen=True)
class RunConfig:
    seed: int = _key("run", 0, "global seed for every stochastic stage")
    workers: int = _key("run", 1, "document-level worker processes")

    min_section_chars: int = _key("corpus", 500, "minimum raw section length")
    extra_line_patterns: str = _key("corpus", "", "extra whole-line removal regexes, one per line")
    extra_inline_patterns: str = _key("corpus", "", "extra inline removal regexes, one per line")
    split: str = _key("corpus", "", "train,classify,pelt split ratios, e.g. 4,1,1")

    smoothing: float = _key("classifier", 1e-4, "log-odds smoothing constant")
    min_doc_freq: int = _key("classifier", 0, "drop words seen in fewer documents (0 = off)")
    training_unit: str = _key("classifier", "section", "section or combined")
    decision_threshold: float = _key("classifier", 0.0, "total log odds above which a document is called LLM")
    top_words_threshold: float = _key("classifier", 5.6, "cutoff for exported word lists")

    signal: str = _key("changepoint", "increments", "increments or cumsum")
    cost: str = _key("changepoint", "l2", "segment cost model")
    min_segment_length: int = _key("changepoint", 2, "minimum PELT segment length")
    margin: float = _key("changepoint", 1e-2, "threshold search bracket width")
    start_multiplier: float = _key("changepoint", 1.0, "first multiplier of the doubling phase")
    length_scheme: str = _key("changepoint", "zscore", "zscore, per_length or identity")

    bins: int = _key("stats", 25, "length bins for z-scoring")
    binning: str = _key("stats", "quantile", "quantile or width")
    ttest: str = _key("stats", "welch", "welch or student")

    provider_kind: str = _key("provider", "mock", "mock or http")
    provider_endpoint: str = _key("provider", "", "chat-completion endpoint URL")
    provider_model: str = _key("provider", "mock-1", "model name sent to the provider")
    provider_api_key_env: str = _key("provider", "OPENAI_API_KEY", "environment variable holding the credential")
    provider_timeout: float = _key("provider", 60.0, "request timeout in seconds")
    provider_max_retries: int = _key("provider", 3, "retries on rate limiting or timeout")
    rewrite_prompt: str = _key("provider", REWRITE_PROMPT, "rewrite prompt template ({text})")
    inject_prompt: str = _key("provider", INJECT_PROMPT, "paragraph prompt template ({chars}, {text})")
    target_fraction: float = _key("provider", TARGET_FRACTION, "injected paragraph length / text length")

    def provider_config(self) -> ProviderConfig:
        return ProviderConfig(kind=self.provider_kind, endpoint=self.provider_endpoint,
                              model=self.provider_model, api_key_env=self.provider_api_key_env,
                              timeout=self.provider_timeout, max_retries=self.provider_max_retries,
                              seed=self.seed, rewrite_prompt=self.rewrite_prompt,
                              inject_prompt=self.inject_prompt)

    def patterns(self, which: str) -> list[str]:
        raw = getattr(self, f"extra_{which}_patterns")
        return [p for p in raw.splitlines() if p.strip()]

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


SECTION_ORDER = ("run", "corpus", "classifier", "changepoint", "stats", "provider")


def config_fields():
    return fields(RunConfig)


def _coerce(f, raw: str):
    if f.type in ("int", int):
        return int(raw)
    if f.type in ("float", float):
        return float(raw)
    return raw


def load_config(path: Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    by_name = {f.name: f for f in config_fields()}
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if key not in by_name:
                raise ValueError(f"unknown config key {section}.{key}")
            values[key] = _coerce(by_name[key], raw)
    return RunConfig(**values)


def dumps_config(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for section in SECTION_ORDER:
        cp.add_section(section)
    for f in config_fields():
        value = getattr(cfg, f.name)
        cp.set(f.metadata["section"], f.name, repr(value) if isinstance(value, float) else str(value))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()

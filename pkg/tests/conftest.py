import random

import numpy as np
import pytest

from stylseg.config import RunConfig
from stylseg.corpus import SectionedDocument, prepare_corpus
from stylseg.synth import PaperGenerator, write_fixture


def filler(n_chars: int, seed: int = 0) -> str:
    """Plain prose of at least ``n_chars`` characters."""
    gen = PaperGenerator(seed)
    text = ""
    while len(text) < n_chars:
        text += gen.sentence() + " "
    return text.strip()


def paper(abstract: int = 600, intro: int = 900, concl: int = 700, seed: int = 0,
          concl_header: str = "5 Conclusion") -> str:
    parts = ["Abstract", filler(abstract, seed), "1 Introduction", filler(intro, seed + 1)]
    if concl_header:
        parts += [concl_header, filler(concl, seed + 2)]
    return "\n".join(parts) + "\n"


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def pyrng():
    return random.Random(7)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("raw")
    write_fixture(d, n_docs=80, seed=3)
    return d


@pytest.fixture(scope="session")
def small_corpus(fixture_dir) -> list[SectionedDocument]:
    return prepare_corpus(fixture_dir).accepted


@pytest.fixture
def cfg():
    return RunConfig()


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_line(request):
    """Record one PASS/FAIL line per criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        print(lines[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

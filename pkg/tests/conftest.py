from pathlib import Path

import pytest

from conslaw import parse_system

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
CORPUS_NAMES = ("heat", "burgers", "kdv", "wave", "u1", "u2")


def load(name: str):
    return parse_system((CORPUS / f"{name}.sys").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def corpus():
    return {name: load(name) for name in CORPUS_NAMES}


@pytest.fixture(scope="session")
def heat(corpus):
    return corpus["heat"]


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

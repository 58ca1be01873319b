from __future__ import annotations

from collections import Counter
from pathlib import Path

import pytest

from qulint.checks import run_all_checks
from qulint.model import extract_circuits
from qulint.problems import ALL_KINDS, ProblemKind
from qulint.source import parse_source

TESTS = Path(__file__).parent
CORPUS = TESTS / "corpus"
FIXTURES = TESTS / "fixtures"
GOLDEN_PROMPTS = TESTS / "golden" / "prompts"
LLM_CORPUS = TESTS / "llm_corpus"

DOUBLE_MEASURE_PROGRAM = (
    "circuit = QuantumCircuit(3, 3)\n"
    "circuit.ccx(0, 1, 2)\n"
    "circuit.measure(0, 0) # Measure qubit 0\n"
    "circuit.measure(2, 2)\n"
    "circuit.measure(0, 1) # Problem: Qubit 0 already measured\n"
)


def lint_text(text: str, kinds=ALL_KINDS, path: str = "t.py"):
    module = parse_source(path, text)
    return run_all_checks(extract_circuits(module), kinds)


def found(text: str, kinds=ALL_KINDS) -> list[tuple[str, int]]:
    return [(w.problem.value, w.line) for w in lint_text(text, kinds)]


def expected_labels(path: Path) -> Counter:
    """The ``# expect:`` header of a corpus file as a multiset of (kind, line)."""
    header = path.read_text(encoding="utf-8").split("\n", 1)[0]
    assert header.startswith("# expect: "), path
    body = header[len("# expect: ") :].strip()
    if body == "none":
        return Counter()
    out = Counter()
    for item in body.split(","):
        kind, line = item.strip().split(":")
        out[(ProblemKind.parse(kind), int(line))] += 1
    return out


def corpus_files() -> list[Path]:
    return sorted(CORPUS.glob("*.py"))


@pytest.fixture
def double_measure_file(tmp_path: Path) -> Path:
    path = tmp_path / "double_measure.py"
    path.write_text(DOUBLE_MEASURE_PROGRAM, encoding="utf-8")
    return path

from __future__ import annotations

from collections import Counter

import pytest

from qulint.checks import CHECKS, run_all_checks
from qulint.llm_lint import problem_description
from qulint.model import extract_circuits
from qulint.problems import ALL_KINDS, ProblemKind, Source
from qulint.source import parse_source

from conftest import DOUBLE_MEASURE_PROGRAM, corpus_files, expected_labels, found, lint_text


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_corpus_file_matches_labels(path):
    text = path.read_text(encoding="utf-8")
    got = Counter((w.problem, w.line) for w in lint_text(text, path=str(path)))
    assert got == expected_labels(path)


def test_corpus_covers_every_check_both_ways():
    files = corpus_files()
    assert len(files) >= 60
    for kind in ProblemKind:
        positive = sum(1 for f in files if any(k is kind for k, _ in expected_labels(f)))
        designed_negative = [f for f in files if "_neg_" in f.stem and not any(k is kind for k, _ in expected_labels(f))]
        assert positive >= 3, kind
        assert len(designed_negative) >= 3, kind


def test_double_measure_only_double_meas():
    assert found(DOUBLE_MEASURE_PROGRAM) == [("DoubleMeas", 5)]


@pytest.mark.parametrize("kind", list(ProblemKind), ids=lambda k: k.value)
def test_description_example_triggers_its_own_check(kind):
    for code in problem_description(kind).example_code():
        module = parse_source("example.py", code)
        warnings = run_all_checks(extract_circuits(module), ALL_KINDS)
        problem_lines = [n for n, line in enumerate(code.splitlines(), 1) if "# Problem:" in line]
        assert [(w.problem, w.line) for w in warnings] == [(kind, n) for n in problem_lines]


def test_enabled_kinds_filter_output():
    text = "qc = QuantumCircuit(3, 1)\nqc.measure(0, 0)\nqc.measure(0, 0)\n"
    assert {p for p, _ in found(text)} == {"DoubleMeas", "ConstClasBit", "OversizedCircuit"}
    assert found(text, {ProblemKind.DoubleMeas}) == [("DoubleMeas", 3)]
    assert found(text, set()) == []


def test_warnings_are_static_and_sorted():
    text = (
        "qc = QuantumCircuit(3, 1)\nqc.h(0)\nqc.measure(0, 0)\nqc.x(0)\nqc.iden(0)\n"
    )
    warnings = lint_text(text)
    assert warnings == sorted(warnings, key=lambda w: (w.file, w.line, w.problem.value))
    assert all(w.source is Source.STATIC and w.rank == 1 for w in warnings)
    assert ("OpAfterMeas", 4) in [(w.problem.value, w.line) for w in warnings]


def test_snippet_and_explanation_filled():
    (w,) = lint_text(DOUBLE_MEASURE_PROGRAM)
    assert w.snippet == "circuit.measure(0, 1) # Problem: Qubit 0 already measured"
    assert "line 3" in w.explanation


def test_checks_registry_is_complete():
    assert set(CHECKS) == set(ProblemKind)


def test_double_meas_needs_dominating_prior_measure():
    text = "qc = QuantumCircuit(1, 2)\nqc.h(0)\nif c:\n    qc.measure(0, 0)\nqc.measure(0, 1)\n"
    assert found(text) == []
    text = "qc = QuantumCircuit(1, 2)\nqc.h(0)\nqc.measure(0, 0)\nif c:\n    qc.measure(0, 1)\n"
    assert found(text) == [("DoubleMeas", 5)]


def test_gate_in_branch_blocks_double_meas():
    text = "qc = QuantumCircuit(1, 2)\nqc.h(0)\nqc.measure(0, 0)\nif c:\n    qc.x(0)\nqc.measure(0, 1)\n"
    assert ("DoubleMeas", 6) not in found(text)


def test_cond_wo_meas_skips_derived_circuits():
    text = (
        "qr = QuantumRegister(1)\ncr = ClassicalRegister(1)\nqc = QuantumCircuit(qr, cr)\n"
        "qc.h(0)\nqc.measure(0, 0)\nt = transpile(qc, b)\nt.x(0).c_if(cr, 1)\n"
    )
    assert ("CondWoMeas", 7) not in found(text)


def test_op_after_meas_reports_gate_once_for_several_qubits():
    text = "qc = QuantumCircuit(2, 2)\nqc.h(0)\nqc.h(1)\nqc.measure([0, 1], [0, 1])\nqc.cx(0, 1)\n"
    assert found(text) == [("OpAfterMeas", 5)]


def test_unresolved_width_disables_resource_checks():
    text = "qc = QuantumCircuit(n, 1)\nqc.h(0)\nqc.measure(0, 0)\n"
    assert found(text) == []

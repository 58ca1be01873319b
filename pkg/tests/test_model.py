from __future__ import annotations

import json

from qulint.model import (
    EventKind,
    OriginKind,
    RegisterKind,
    extract_circuits,
    measured_qubits,
    models_to_json,
    used_qubits,
)
from qulint.source import parse_source

from conftest import DOUBLE_MEASURE_PROGRAM


def models(text: str):
    return extract_circuits(parse_source("m.py", text))


def trace(model) -> list[tuple]:
    out = []
    for e in model.events:
        if e.kind is EventKind.GATE:
            out.append((e.gate, e.qubits))
        elif e.kind is EventKind.MEASURE:
            out.append(("M", e.qubits[0], e.clbit))
        else:
            out.append((e.kind.value,))
    return out


def test_double_measure_event_trace():
    (qc,) = models(DOUBLE_MEASURE_PROGRAM)
    assert (qc.var_name, qc.creation_line, qc.num_qubits, qc.num_clbits) == ("circuit", 1, 3, 3)
    assert trace(qc) == [("ccx", (0, 1, 2)), ("M", 0, 0), ("M", 2, 2), ("M", 0, 1)]
    assert not qc.escaped and not qc.derived


def test_registers_flatten_to_global_indices():
    (qc,) = models(
        "a = QuantumRegister(2)\nb = QuantumRegister(3)\nc = ClassicalRegister(1)\n"
        "d = ClassicalRegister(2)\nqc = QuantumCircuit(a, b, c, d)\n"
        "qc.h(b[1])\nqc.measure(b[2], d[1])\nqc.x(a)\n"
    )
    assert (qc.num_qubits, qc.num_clbits) == (5, 3)
    assert trace(qc) == [("h", (3,)), ("M", 4, 2), ("x", (0, 1))]
    assert qc.bit_offsets(RegisterKind.CLASSICAL) == {c.id: o for c, o in zip(qc.registers[2:], (0, 1))}


def test_measure_lists_pair_up():
    (qc,) = models("qc = QuantumCircuit(3, 3)\nqc.measure([0, 1, 2], [2, 1, 0])\n")
    assert trace(qc) == [("M", 0, 2), ("M", 1, 1), ("M", 2, 0)]


def test_range_and_constants_resolve():
    (qc,) = models("n = 3\nqc = QuantumCircuit(n, n)\nqc.measure(range(n), range(n))\nqc.h(n - 1)\n")
    assert qc.num_qubits == 3
    assert trace(qc)[-1] == ("h", (2,))


def test_loop_variable_is_unknown():
    (qc,) = models("qc = QuantumCircuit(4)\nfor i in range(4):\n    qc.h(i)\n")
    assert trace(qc) == [("h", (None,))]
    assert used_qubits(qc) == (frozenset(), False)


def test_measure_all_adds_implicit_register():
    (qc,) = models("qc = QuantumCircuit(2)\nqc.h(0)\nqc.measure_all()\n")
    assert qc.num_clbits == 2
    assert [r.implicit for r in qc.registers if r.kind is RegisterKind.CLASSICAL] == [True]
    assert measured_qubits(qc) == (frozenset({0, 1}), True)


def test_measure_all_without_new_bits():
    (qc,) = models("qc = QuantumCircuit(2, 2)\nqc.measure_all(add_bits=False)\n")
    assert qc.num_clbits == 2
    assert qc.events[0].add_bits is False


def test_conditions_from_c_if_and_if_test():
    (qc,) = models(
        "qr = QuantumRegister(1)\ncr = ClassicalRegister(1, 'c')\nqc = QuantumCircuit(qr, cr)\n"
        "qc.x(0).c_if(cr, 1)\nwith qc.if_test((cr, 0)):\n    qc.z(0)\n"
    )
    conds = [(e.gate, e.condition.register_name, e.condition.value) for e in qc.events]
    assert conds == [("x", "cr", 1), ("z", "cr", 0)]


def test_transpile_creates_derived_model():
    qc, tqc = models("qc = QuantumCircuit(2, 2)\nqc.h(0)\ntqc = transpile(qc, backend)\ntqc.x(0)\n")
    assert qc.events[-1].kind is EventKind.TRANSPILE
    assert tqc.origin.kind is OriginKind.FROM_TRANSPILE and tqc.origin.parents == (qc.id,)
    assert tqc.num_qubits is None and tqc.num_clbits == 2
    assert tqc.derived


def test_compose_records_binding():
    a, b, c = models(
        "a = QuantumCircuit(1)\nb = QuantumCircuit(1)\nb.compose(a)\nc = b.compose(a)\n"
        "b.compose(a, inplace=True)\n"
    )
    composes = [e for e in b.events if e.kind is EventKind.COMPOSE]
    assert [(e.result_bound, e.inplace) for e in composes] == [(False, False), (True, False), (False, True)]
    assert c.origin.kind is OriginKind.FROM_COMPOSE


def test_alias_shares_one_model():
    (qc,) = models("qc = QuantumCircuit(1, 1)\nalias = qc\nalias.h(0)\nqc.measure(0, 0)\n")
    assert trace(qc) == [("h", (0,)), ("M", 0, 0)]


def test_branch_guards():
    (qc,) = models("qc = QuantumCircuit(1, 1)\nif flag:\n    qc.h(0)\nelse:\n    qc.x(0)\nqc.measure(0, 0)\n")
    h, x, m = qc.events
    assert h.may_occur and x.may_occur and not m.may_occur
    assert h.guard[0][0] == x.guard[0][0] and h.guard != x.guard


def test_unknown_call_and_return_add_opaque_event():
    (qc,) = models("qc = QuantumCircuit(2)\nqc.h(0)\nhelper(qc)\n")
    assert qc.events[-1].opaque and qc.events[-1].line == 3
    assert used_qubits(qc) == (frozenset({0}), False)
    (fn_qc,) = models("def f():\n    qc = QuantumCircuit(2)\n    return qc\n")
    assert fn_qc.events[-1].opaque


def test_module_circuit_used_in_function_is_escaped():
    (qc,) = models("qc = QuantumCircuit(2)\n\ndef f():\n    qc.h(0)\n")
    assert qc.escaped
    assert used_qubits(qc)[1] is False


def test_consumers_do_not_escape():
    (qc,) = models("qc = QuantumCircuit(1, 1)\nqc.h(0)\nqc.measure(0, 0)\nprint(qc)\nbackend.run(qc)\nqc.draw()\n")
    assert not qc.escaped
    assert measured_qubits(qc) == (frozenset({0}), True)


def test_unknown_method_is_opaque():
    (qc,) = models("qc = QuantumCircuit(2)\nqc.my_custom_layer(0)\n")
    assert qc.events[0].opaque
    assert used_qubits(qc)[1] is False


def test_append_maps_instruction_names():
    (qc,) = models("qc = QuantumCircuit(2)\nqc.append(XGate(), [1])\nqc.append(CXGate(), [0, 1])\n")
    assert trace(qc) == [("x", (1,)), ("cx", (0, 1))]


def test_functions_are_separate_scopes():
    found = models("def a():\n    qc = QuantumCircuit(1)\n    qc.h(0)\n\ndef b():\n    qc = QuantumCircuit(2)\n")
    assert [m.num_qubits for m in found] == [1, 2]


def test_models_serialize_to_json():
    data = models_to_json(models(DOUBLE_MEASURE_PROGRAM))
    text = json.dumps(data)
    assert json.loads(text)[0]["events"][1] == {"kind": "Measure", "line": 3, "qubit": 0, "clbit": 0}

"""The ten rule checks, each a pure function from a circuit model to warnings.

Location conventions: sequence problems point at the offending (second)
event, resource problems at the circuit creation line, and ConstClasBit at
the measurement itself.
"""

from __future__ import annotations

from typing import Callable, Iterable

from qulint.model import (
    CircuitEvent,
    CircuitModel,
    EventKind,
    OriginKind,
    RegisterKind,
    measured_qubits,
    used_qubits,
)
from qulint.problems import ProblemKind, Source, Warning
from qulint.vocabulary import default_vocabulary


def _dominates(first: CircuitEvent, second: CircuitEvent) -> bool:
    """Whether ``second`` can only run after ``first`` has run (``first`` precedes it)."""
    return second.guard[: len(first.guard)] == first.guard


def _touches(event: CircuitEvent, qubit: int) -> bool:
    if event.kind in (EventKind.GATE, EventKind.RESET):
        return qubit in event.qubits or None in event.qubits
    return event.kind is EventKind.COMPOSE and event.inplace


def _may_reset(event: CircuitEvent, qubit: int) -> bool:
    if event.kind is EventKind.RESET:
        return qubit in event.qubits or None in event.qubits
    if event.kind is EventKind.GATE:
        return event.opaque
    return event.kind is EventKind.COMPOSE and event.inplace


def _measures(event: CircuitEvent, qubit: int) -> bool:
    if event.kind is EventKind.MEASURE:
        return event.qubits[0] == qubit
    return event.kind is EventKind.MEASURE_ALL


def _name(model: CircuitModel) -> str:
    return model.var_name or f"<circuit@{model.creation_line}>"


def _warning(model: CircuitModel, kind: ProblemKind, line: int, explanation: str) -> Warning:
    return Warning(
        file=model.file,
        problem=kind,
        line=line,
        snippet=model.snippet(line),
        explanation=explanation,
        source=Source.STATIC,
    )


def _previous_measurement(events: tuple[CircuitEvent, ...], index: int, qubit: int) -> CircuitEvent | None:
    """Nearest dominating measurement of ``qubit`` before ``events[index]`` with the state untouched since."""
    current = events[index]
    for prior in reversed(events[:index]):
        if _touches(prior, qubit):
            return None
        if _measures(prior, qubit) and _dominates(prior, current):
            return prior
    return None


def check_double_meas(model: CircuitModel) -> list[Warning]:
    out = []
    events = model.events
    for i, event in enumerate(events):
        if event.kind is EventKind.MEASURE and event.qubits[0] is not None:
            q = event.qubits[0]
            prior = _previous_measurement(events, i, q)
            if prior is not None:
                out.append(
                    _warning(
                        model,
                        ProblemKind.DoubleMeas,
                        event.line,
                        f"Qubit {q} of '{_name(model)}' was already measured at line {prior.line} "
                        "and nothing changed its state since, so this measurement repeats the same result.",
                    )
                )
        elif event.kind is EventKind.MEASURE_ALL:
            repeated = _remeasured_by_measure_all(model, i)
            if repeated:
                q, line = repeated
                out.append(
                    _warning(
                        model,
                        ProblemKind.DoubleMeas,
                        event.line,
                        f"measure_all() measures qubit {q} of '{_name(model)}' again after its "
                        f"measurement at line {line} with no operation in between.",
                    )
                )
    return out


def _remeasured_by_measure_all(model: CircuitModel, index: int) -> tuple[int | str, int] | None:
    current = model.events[index]
    touched: set[int] = set()
    for prior in reversed(model.events[:index]):
        if prior.kind is EventKind.COMPOSE and prior.inplace:
            return None
        if prior.kind in (EventKind.GATE, EventKind.RESET):
            if None in prior.qubits:
                return None
            touched.update(q for q in prior.qubits if q is not None)
        elif prior.kind is EventKind.MEASURE and _dominates(prior, current):
            q = prior.qubits[0]
            if q is not None and q not in touched:
                return q, prior.line
        elif prior.kind is EventKind.MEASURE_ALL and _dominates(prior, current):
            n = model.num_qubits
            if (n is None and not touched) or (n is not None and len(touched & set(range(n))) < n):
                return "all", prior.line
    return None


def check_op_after_meas(model: CircuitModel) -> list[Warning]:
    out = []
    events = model.events
    for i, event in enumerate(events):
        if event.kind is not EventKind.GATE or event.opaque:
            continue
        hits = []
        for q in dict.fromkeys(q for q in event.qubits if q is not None):
            for prior in reversed(events[:i]):
                if _may_reset(prior, q):
                    break
                if _measures(prior, q) and _dominates(prior, event):
                    hits.append((q, prior.line))
                    break
        if hits:
            detail = ", ".join(f"qubit {q} (measured at line {line})" for q, line in hits)
            out.append(
                _warning(
                    model,
                    ProblemKind.OpAfterMeas,
                    event.line,
                    f"Gate '{event.gate}' on '{_name(model)}' acts on {detail} after its measurement.",
                )
            )
    return out


def check_meas_all_abuse(model: CircuitModel) -> list[Warning]:
    existing = [
        r
        for r in model.registers
        if r.kind is RegisterKind.CLASSICAL and not r.implicit and r.size != 0
    ]
    if not existing:
        return []
    names = ", ".join(f"'{r.name}'" if r.name else f"of size {r.size}" for r in existing)
    out = []
    for event in model.events:
        if event.kind is EventKind.MEASURE_ALL and event.add_bits:
            out.append(
                _warning(
                    model,
                    ProblemKind.MeasAllAbuse,
                    event.line,
                    f"measure_all() stores results in a new implicit register although "
                    f"'{_name(model)}' already declares a classical register ({names}).",
                )
            )
    return out


def _may_write(event: CircuitEvent, register: int | None, model: CircuitModel, offsets: dict | None) -> bool:
    if event.kind is EventKind.MEASURE:
        if register is None or event.clbit is None or offsets is None or register not in offsets:
            return True
        reg = model.register(register)
        start = offsets[register]
        return reg is None or reg.size is None or start <= event.clbit < start + reg.size
    if event.kind is EventKind.MEASURE_ALL:
        return register is None or not event.add_bits or event.target_register == register
    if event.kind is EventKind.GATE:
        return event.opaque
    return event.kind is EventKind.COMPOSE and event.inplace


def check_cond_wo_meas(model: CircuitModel) -> list[Warning]:
    if model.derived or model.escaped:
        return []
    offsets = model.bit_offsets(RegisterKind.CLASSICAL)
    out = []
    for i, event in enumerate(model.events):
        if event.kind is not EventKind.GATE or event.condition is None:
            continue
        register = event.condition.register
        if any(_may_write(prior, register, model, offsets) for prior in model.events[:i]):
            continue
        target = event.condition.register_name or "its classical register"
        out.append(
            _warning(
                model,
                ProblemKind.CondWoMeas,
                event.line,
                f"Gate '{event.gate}' is conditioned on {target!s} but nothing was measured into it "
                "beforehand, so the condition tests a constant value.",
            )
        )
    return out


def check_const_clas_bit(model: CircuitModel) -> list[Warning]:
    if model.derived or model.escaped:
        return []
    out = []
    for i, event in enumerate(model.events):
        if event.kind is not EventKind.MEASURE or event.qubits[0] is None:
            continue
        q = event.qubits[0]
        if any(
            (p.kind is EventKind.GATE and (q in p.qubits or None in p.qubits))
            or (p.kind is EventKind.COMPOSE and p.inplace)
            for p in model.events[:i]
        ):
            continue
        out.append(
            _warning(
                model,
                ProblemKind.ConstClasBit,
                event.line,
                f"Qubit {q} of '{_name(model)}' is measured without any prior gate, "
                "so the classical result is always the initial state.",
            )
        )
    return out


def check_insuff_clas_reg(model: CircuitModel) -> list[Warning]:
    measured, complete = measured_qubits(model)
    if model.num_clbits is None or not complete or len(measured) <= model.num_clbits:
        return []
    return [
        _warning(
            model,
            ProblemKind.InsuffClasReg,
            model.creation_line,
            f"'{_name(model)}' measures {len(measured)} qubits {sorted(measured)} "
            f"but has only {model.num_clbits} classical bits to hold the results.",
        )
    ]


def check_oversized_circuit(model: CircuitModel) -> list[Warning]:
    used, complete = used_qubits(model)
    n = model.num_qubits
    if n is None or not complete:
        return []
    unused = sorted(set(range(n)) - used)
    if not unused:
        return []
    return [
        _warning(
            model,
            ProblemKind.OversizedCircuit,
            model.creation_line,
            f"'{_name(model)}' allocates {n} qubits but qubits {unused} are never used.",
        )
    ]


def check_ghost_compose(model: CircuitModel) -> list[Warning]:
    return [
        _warning(
            model,
            ProblemKind.GhostCompose,
            event.line,
            f"The result of composing into '{_name(model)}' is discarded; compose() returns "
            "a new circuit unless inplace=True.",
        )
        for event in model.events
        if event.kind is EventKind.COMPOSE and not event.result_bound and not event.inplace
    ]


def check_op_after_opt(model: CircuitModel) -> list[Warning]:
    if model.origin.kind is not OriginKind.FROM_TRANSPILE:
        return []
    return [
        _warning(
            model,
            ProblemKind.OpAfterOpt,
            event.line,
            f"Gate '{event.gate}' is added to '{_name(model)}' after transpilation, "
            "so it bypasses the optimized, backend-specific layout.",
        )
        for event in model.events
        if event.kind is EventKind.GATE and not event.opaque
    ]


def check_old_iden_gate(model: CircuitModel) -> list[Warning]:
    removed = default_vocabulary().removed_identity
    return [
        _warning(
            model,
            ProblemKind.OldIdenGate,
            event.line,
            f"'{_name(model)}.{event.gate}()' uses a removed identity-gate API; use id() instead.",
        )
        for event in model.events
        if event.kind is EventKind.GATE and not event.opaque and event.gate in removed
    ]


CHECKS: dict[ProblemKind, Callable[[CircuitModel], list[Warning]]] = {
    ProblemKind.DoubleMeas: check_double_meas,
    ProblemKind.OpAfterMeas: check_op_after_meas,
    ProblemKind.MeasAllAbuse: check_meas_all_abuse,
    ProblemKind.CondWoMeas: check_cond_wo_meas,
    ProblemKind.ConstClasBit: check_const_clas_bit,
    ProblemKind.InsuffClasReg: check_insuff_clas_reg,
    ProblemKind.OversizedCircuit: check_oversized_circuit,
    ProblemKind.GhostCompose: check_ghost_compose,
    ProblemKind.OpAfterOpt: check_op_after_opt,
    ProblemKind.OldIdenGate: check_old_iden_gate,
}


def run_all_checks(models: Iterable[CircuitModel], enabled: Iterable[ProblemKind]) -> list[Warning]:
    """Union of every enabled check over every model, sorted by (file, line, problem)."""
    enabled = set(enabled)
    models = list(models)
    kinds = [kind for kind in ProblemKind if kind in enabled]
    warnings = [w for kind in kinds for model in models for w in CHECKS[kind](model)]
    return sorted(warnings, key=Warning.sort_key)

"""Circuit abstraction: registers, circuits and an ordered event trace per circuit.

Extraction is a single pass of abstract interpretation over the lowered
statement tree of one file:

* module level and every function body are separate scopes (no call graph);
* loop bodies run once; branch arms and loop bodies are tagged with a
  *guard* so checks can tell whether one event dominates another;
* ``a = b`` aliases a circuit, any other rebinding drops the name;
* a circuit handed to code we cannot see (unknown calls, containers,
  ``return``) gets an opaque event, which makes usage information incomplete.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Union

from qulint.source import (
    Assign,
    Attribute,
    BinOp,
    Call,
    Expr,
    ExprCall,
    For,
    FuncDef,
    If,
    IntLit,
    Name,
    Other,
    Seq,
    SourceModule,
    Stmt,
    StrLit,
    Subscript,
    Unresolved,
    While,
    dotted_name,
    iter_statements,
    iter_subexprs,
)
from qulint.vocabulary import Vocabulary, default_vocabulary

MAX_RANGE = 4096


class RegisterKind(str, Enum):
    QUANTUM = "quantum"
    CLASSICAL = "classical"


@dataclass(frozen=True)
class RegisterDecl:
    id: int
    kind: RegisterKind
    size: int | None
    name: str | None
    decl_line: int
    implicit: bool = False


@dataclass(frozen=True)
class Condition:
    register: int | None
    register_name: str | None
    value: int | None


class EventKind(str, Enum):
    GATE = "GateApply"
    MEASURE = "Measure"
    MEASURE_ALL = "MeasureAll"
    RESET = "Reset"
    COMPOSE = "Compose"
    TRANSPILE = "Transpile"


Guard = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class CircuitEvent:
    """One step in a circuit's construction.

    ``qubits`` holds flat circuit indices, ``None`` for an index we could not
    resolve.  ``guard`` is the chain of (branch id, arm) choices enclosing the
    event; an empty guard means the event is on the straight-line path of its
    scope.
    """

    kind: EventKind
    line: int
    gate: str | None = None
    qubits: tuple[int | None, ...] = ()
    clbit: int | None = None
    condition: Condition | None = None
    other: int | None = None
    result: int | None = None
    result_bound: bool = False
    inplace: bool = False
    add_bits: bool = True
    target_register: int | None = None
    opaque: bool = False
    guard: Guard = ()

    @property
    def may_occur(self) -> bool:
        return bool(self.guard)


class OriginKind(str, Enum):
    CONSTRUCTED = "Constructed"
    FROM_TRANSPILE = "FromTranspile"
    FROM_COMPOSE = "FromCompose"


@dataclass(frozen=True)
class Origin:
    kind: OriginKind = OriginKind.CONSTRUCTED
    parents: tuple[int | None, ...] = ()


@dataclass(frozen=True)
class CircuitModel:
    id: int
    var_name: str | None
    creation_line: int
    num_qubits: int | None
    num_clbits: int | None
    registers: tuple[RegisterDecl, ...]
    events: tuple[CircuitEvent, ...]
    origin: Origin = Origin()
    escaped: bool = False
    file: str = ""
    module: SourceModule | None = field(default=None, repr=False, compare=False)

    @property
    def derived(self) -> bool:
        """True when the circuit starts with content we did not observe."""
        return self.origin.kind is not OriginKind.CONSTRUCTED

    def register(self, register_id: int | None) -> RegisterDecl | None:
        for reg in self.registers:
            if reg.id == register_id:
                return reg
        return None

    def bit_offsets(self, kind: RegisterKind) -> dict[int, int] | None:
        """Flat start index of every register of ``kind``; ``None`` if any size is unknown."""
        offsets: dict[int, int] = {}
        total = 0
        for reg in self.registers:
            if reg.kind is not kind:
                continue
            if reg.size is None:
                return None
            offsets[reg.id] = total
            total += reg.size
        return offsets

    def snippet(self, line: int) -> str:
        return self.module.line_text(line).strip() if self.module else ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "var_name": self.var_name,
            "creation_line": self.creation_line,
            "num_qubits": self.num_qubits,
            "num_clbits": self.num_clbits,
            "origin": {"kind": self.origin.kind.value, "parents": list(self.origin.parents)},
            "escaped": self.escaped,
            "registers": [
                {
                    "kind": r.kind.value,
                    "size": r.size,
                    "name": r.name,
                    "decl_line": r.decl_line,
                    "implicit": r.implicit,
                }
                for r in self.registers
            ],
            "events": [_event_dict(e) for e in self.events],
        }


def _event_dict(event: CircuitEvent) -> dict:
    data: dict = {"kind": event.kind.value, "line": event.line}
    if event.kind is EventKind.GATE:
        data["gate"] = event.gate
        data["qubits"] = list(event.qubits)
        if event.condition is not None:
            data["condition"] = {
                "register": event.condition.register_name,
                "value": event.condition.value,
            }
        if event.opaque:
            data["opaque"] = True
    elif event.kind is EventKind.MEASURE:
        data["qubit"] = event.qubits[0] if event.qubits else None
        data["clbit"] = event.clbit
    elif event.kind is EventKind.MEASURE_ALL:
        data["add_bits"] = event.add_bits
    elif event.kind is EventKind.RESET:
        data["qubit"] = event.qubits[0] if event.qubits else None
    elif event.kind is EventKind.COMPOSE:
        data.update(other=event.other, result_bound=event.result_bound, inplace=event.inplace)
    elif event.kind is EventKind.TRANSPILE:
        data["result"] = event.result
    if event.guard:
        data["may_occur"] = True
    return data


# --- derived facts ----------------------------------------------------------


def _is_opaque(event: CircuitEvent) -> bool:
    return (event.kind is EventKind.GATE and event.opaque) or (
        event.kind is EventKind.COMPOSE and event.inplace
    )


def measured_qubits(circuit: CircuitModel) -> tuple[frozenset[int], bool]:
    """Known measured qubit indices and whether that set is complete."""
    measured: set[int] = set()
    complete = not (circuit.derived or circuit.escaped)
    for event in circuit.events:
        if event.kind is EventKind.MEASURE:
            q = event.qubits[0]
            if q is None:
                complete = False
            else:
                measured.add(q)
        elif event.kind is EventKind.MEASURE_ALL:
            if circuit.num_qubits is None:
                complete = False
            else:
                measured.update(range(circuit.num_qubits))
        elif _is_opaque(event):
            complete = False
    return frozenset(measured), complete


def used_qubits(circuit: CircuitModel) -> tuple[frozenset[int], bool]:
    """Known qubit indices touched by gates, measurements and resets, plus completeness."""
    used: set[int] = set()
    complete = not (circuit.derived or circuit.escaped)
    for event in circuit.events:
        if event.kind in (EventKind.GATE, EventKind.MEASURE, EventKind.RESET):
            for q in event.qubits:
                if q is None:
                    complete = False
                else:
                    used.add(q)
        elif event.kind is EventKind.MEASURE_ALL:
            if circuit.num_qubits is None:
                complete = False
            else:
                used.update(range(circuit.num_qubits))
        elif event.kind is EventKind.COMPOSE and event.inplace:
            complete = False
    return frozenset(used), complete


# --- interpretation ---------------------------------------------------------


class _Builder:
    """Mutable circuit under construction; frozen into a CircuitModel at the end."""

    def __init__(self, cid: int, var_name: str | None, line: int, origin: Origin):
        self.id = cid
        self.var_name = var_name
        self.creation_line = line
        self.origin = origin
        self.registers: list[RegisterDecl] = []
        self.events: list[CircuitEvent] = []
        self.layout_unknown = False
        self.qubits_unknown = False
        self.escaped = False

    def size(self, kind: RegisterKind) -> int | None:
        if self.layout_unknown or (kind is RegisterKind.QUANTUM and self.qubits_unknown):
            return None
        total = 0
        for reg in self.registers:
            if reg.kind is kind:
                if reg.size is None:
                    return None
                total += reg.size
        return total

    def offset_of(self, reg: RegisterDecl) -> int | None:
        if self.layout_unknown:
            return None
        if reg.kind is RegisterKind.QUANTUM and self.qubits_unknown:
            return None
        total = 0
        for other in self.registers:
            if other.id == reg.id:
                return total
            if other.kind is reg.kind:
                if other.size is None:
                    return None
                total += other.size
        return None

    def freeze(self, module: SourceModule) -> CircuitModel:
        return CircuitModel(
            id=self.id,
            var_name=self.var_name,
            creation_line=self.creation_line,
            num_qubits=self.size(RegisterKind.QUANTUM),
            num_clbits=self.size(RegisterKind.CLASSICAL),
            registers=tuple(self.registers),
            events=tuple(self.events),
            origin=self.origin,
            escaped=self.escaped,
            file=module.path,
            module=module,
        )


Binding = Union[_Builder, RegisterDecl, int, tuple]


def _same(a: Binding, b: Binding) -> bool:
    if isinstance(a, RegisterDecl) and isinstance(b, RegisterDecl):
        return a.id == b.id
    if isinstance(a, _Builder) or isinstance(b, _Builder):
        return a is b
    return type(a) is type(b) and a == b


def _merge(envs: list[dict[str, Binding]]) -> dict[str, Binding]:
    first, *rest = envs
    return {
        k: v for k, v in first.items() if all(k in env and _same(v, env[k]) for env in rest)
    }


def _is_false(expr: Expr | None) -> bool:
    return isinstance(expr, Name) and expr.id == "False"


def _is_true(expr: Expr | None) -> bool:
    return isinstance(expr, Name) and expr.id == "True"


def _callee_name(func: Expr) -> str | None:
    if isinstance(func, Name):
        return func.id
    if isinstance(func, Attribute):
        return func.attr
    return None


class _Interpreter:
    def __init__(self, module: SourceModule, vocab: Vocabulary):
        self.module = module
        self.vocab = vocab
        self.builders: list[_Builder] = []
        self.env: dict[str, Binding] = {}
        self.guard: Guard = ()
        self.condition: Condition | None = None
        self._circuit_ids = itertools.count()
        self._register_ids = itertools.count()
        self._branch_ids = itertools.count()

    # -- scopes --

    def run_module(self) -> None:
        self.run_block(self.module.statements)
        referenced = _names_in_nested_scopes(self.module.statements)
        for name, binding in self.env.items():
            if isinstance(binding, _Builder) and name.split(".")[0] in referenced:
                binding.escaped = True

    def run_scope(self, body: tuple[Stmt, ...]) -> None:
        saved = (self.env, self.guard, self.condition)
        self.env, self.guard, self.condition = {}, (), None
        try:
            self.run_block(body)
        finally:
            self.env, self.guard, self.condition = saved

    def run_block(self, body: Iterable[Stmt]) -> None:
        for stmt in body:
            self.exec(stmt)

    def run_arm(self, body: Iterable[Stmt], branch: int, arm: int, start: dict) -> dict:
        saved_guard = self.guard
        self.env = dict(start)
        self.guard = saved_guard + ((branch, arm),)
        try:
            self.run_block(body)
        finally:
            self.guard = saved_guard
        return self.env

    # -- statements --

    def exec(self, stmt: Stmt) -> None:
        if isinstance(stmt, Assign):
            self.exec_assign(stmt)
        elif isinstance(stmt, ExprCall):
            self.eval_call(stmt.call, bound=False)
        elif isinstance(stmt, If):
            self.scan(stmt.test, safe=True)
            branch = next(self._branch_ids)
            start = dict(self.env)
            then_env = self.run_arm(stmt.body, branch, 0, start)
            else_env = self.run_arm(stmt.orelse, branch, 1, start)
            self.env = _merge([then_env, else_env])
        elif isinstance(stmt, (For, While)):
            self.exec_loop(stmt)
        elif isinstance(stmt, FuncDef):
            self.run_scope(stmt.body)
        elif isinstance(stmt, Other):
            self.exec_other(stmt)

    def exec_loop(self, stmt: For | While) -> None:
        if isinstance(stmt, For):
            self.scan(stmt.iter, safe=False)
            self.unbind(stmt.target)
        else:
            self.scan(stmt.test, safe=True)
        branch = next(self._branch_ids)
        start = dict(self.env)
        body_env = self.run_arm(stmt.body, branch, 0, start)
        merged = _merge([start, body_env])
        if stmt.orelse:
            else_env = self.run_arm(stmt.orelse, branch, 1, merged)
            merged = _merge([merged, else_env])
        self.env = merged

    def exec_other(self, stmt: Other) -> None:
        if stmt.block == "class":
            self.run_scope(stmt.body)
            return
        if stmt.block == "with":
            condition = None
            for item in stmt.values:
                condition = condition or self.if_test_condition(item)
                if condition is None:
                    self.scan(item, safe=True)
            if condition is not None:
                branch = next(self._branch_ids)
                start = dict(self.env)
                saved = self.condition
                self.condition = condition
                try:
                    body_env = self.run_arm(stmt.body, branch, 0, start)
                finally:
                    self.condition = saved
                self.env = _merge([start, body_env])
            else:
                self.run_block(stmt.body)
            return
        for value in stmt.values:
            self.scan(value, safe=stmt.block == "match")
        if stmt.body:
            self.run_block(stmt.body)
        if stmt.alternatives:
            branch = next(self._branch_ids)
            start = dict(self.env)
            envs = [start]
            for arm, alt in enumerate(stmt.alternatives):
                envs.append(self.run_arm(alt, branch, arm, start))
            self.env = _merge(envs)

    def exec_assign(self, stmt: Assign) -> None:
        targets = stmt.targets
        bound = any(dotted_name(t) is not None for t in targets)
        if len(targets) == 1 and isinstance(targets[0], Seq) and isinstance(stmt.value, Seq):
            lhs, rhs = targets[0].items, stmt.value.items
            if len(lhs) == len(rhs):
                values = [self.evaluate(v, bound=dotted_name(t) is not None) for t, v in zip(lhs, rhs)]
                for target, value in zip(lhs, values):
                    self.bind(target, value)
                return
        value = self.evaluate(stmt.value, bound=bound)
        for target in targets:
            self.bind(target, value)

    def bind(self, target: Expr, value: Binding | None) -> None:
        name = dotted_name(target)
        if name is None:
            if isinstance(target, Seq):
                for item in target.items:
                    self.unbind(item)
            else:
                self.scan(target, safe=True)
            if isinstance(value, _Builder):
                self.escape(value, target.line)
            return
        self.drop(name)
        if value is None:
            return
        if isinstance(value, RegisterDecl) and value.name is None:
            value = dataclasses.replace(value, name=name)
        if isinstance(value, _Builder) and value.var_name is None:
            value.var_name = name
        self.env[name] = value

    def drop(self, name: str) -> None:
        self.env.pop(name, None)
        prefix = name + "."
        for key in [k for k in self.env if k.startswith(prefix)]:
            del self.env[key]

    def unbind(self, target: Expr) -> None:
        name = dotted_name(target)
        if name is not None:
            self.drop(name)
        elif isinstance(target, Seq):
            for item in target.items:
                self.unbind(item)

    # -- expressions --

    def lookup(self, expr: Expr) -> Binding | None:
        name = dotted_name(expr)
        return None if name is None else self.env.get(name)

    def evaluate(self, expr: Expr, bound: bool = False) -> Binding | None:
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, Attribute) and self.lookup(expr) is None:
            return self.eval_int(expr)
        if isinstance(expr, Name):
            return self.lookup(expr)
        if isinstance(expr, BinOp):
            return self.eval_int(expr)
        if isinstance(expr, Call) and isinstance(expr.func, Name) and expr.func.id == "len":
            return self.eval_int(expr)
        if isinstance(expr, Call):
            return self.eval_call(expr, bound=bound)
        if isinstance(expr, Seq):
            items = [self.eval_int(item) for item in expr.items]
            if items and all(isinstance(i, int) for i in items):
                return tuple(items)
            self.scan(expr, safe=False)
            return None
        self.scan(expr, safe=False)
        return None

    def eval_int(self, expr: Expr) -> int | None:
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, (Name, Attribute)):
            value = self.lookup(expr)
            if isinstance(expr, Attribute) and value is None:
                owner = self.lookup(expr.value)
                if isinstance(owner, _Builder) and expr.attr == "num_qubits":
                    return owner.size(RegisterKind.QUANTUM)
                if isinstance(owner, _Builder) and expr.attr == "num_clbits":
                    return owner.size(RegisterKind.CLASSICAL)
            return value if isinstance(value, int) else None
        if isinstance(expr, Call) and isinstance(expr.func, Name) and expr.func.id == "len" and expr.args:
            target = self.lookup(expr.args[0])
            if isinstance(target, RegisterDecl):
                return target.size
            if isinstance(target, tuple):
                return len(target)
            return None
        if isinstance(expr, BinOp):
            left, right = self.eval_int(expr.left), self.eval_int(expr.right)
            if left is None or right is None:
                return None
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            if expr.op == "//":
                return left // right if right else None
            if expr.op == "**":
                return left**right if 0 <= right <= 64 else None
        return None

    def scan(self, expr: Expr, safe: bool) -> None:
        """Mark circuits that flow somewhere we cannot follow as escaped."""
        if isinstance(expr, (Name, Attribute)):
            binding = self.lookup(expr)
            if isinstance(binding, _Builder):
                if not safe:
                    self.escape(binding, expr.line)
                return
            if isinstance(expr, Attribute):
                self.scan(expr.value, safe=True)
            return
        if isinstance(expr, Call):
            func = expr.func
            receiver = self.lookup(func.value) if isinstance(func, Attribute) else None
            if isinstance(func, Name):
                consumer = func.id in self.vocab.consumer_functions
            elif isinstance(func, Attribute):
                consumer = func.attr in self.vocab.consumer_methods or (
                    isinstance(receiver, _Builder)
                    and func.attr in self.vocab.compose | self.vocab.append
                )
                self.scan(func, safe=True)
            else:
                consumer = False
                self.scan(func, safe=True)
            for arg in expr.args:
                self.scan(arg, safe=consumer)
            for _, value in expr.keywords:
                self.scan(value, safe=consumer)
            return
        if isinstance(expr, (Seq, Subscript, BinOp)):
            nested_safe = safe if isinstance(expr, Seq) else True
            for child in iter_subexprs(expr):
                self.scan(child, safe=nested_safe)
            return
        for child in iter_subexprs(expr):
            self.scan(child, safe=False)

    def escape(self, builder: _Builder, line: int) -> None:
        self.record(builder, CircuitEvent(EventKind.GATE, line, gate="<escape>", qubits=(None,), opaque=True))

    def record(self, builder: _Builder, event: CircuitEvent) -> None:
        builder.events.append(dataclasses.replace(event, guard=self.guard))

    # -- calls --

    def eval_call(self, call: Call, bound: bool, condition: Condition | None = None) -> Binding | None:
        func = call.func
        vocab = self.vocab
        if isinstance(func, Attribute):
            method = func.attr
            if method in vocab.condition and isinstance(func.value, Call):
                inner = func.value
                target = self.lookup(inner.func.value) if isinstance(inner.func, Attribute) else None
                if isinstance(target, _Builder):
                    cond = self.resolve_condition(call, target)
                    self.eval_call(inner, bound=False, condition=cond)
                    return None
            receiver = self.lookup(func.value)
            if isinstance(receiver, _Builder):
                return self.circuit_method(receiver, method, call, bound, condition)
            if receiver is None and dotted_name(func.value) is not None:
                if method in vocab.circuit_constructors:
                    return self.construct_circuit(call, bound)
                if method in vocab.quantum_registers | vocab.classical_registers:
                    return self.construct_register(call, method)
                if method in vocab.transpile:
                    return self.transpile(call, bound)
        elif isinstance(func, Name) and func.id not in self.env:
            if func.id in vocab.circuit_constructors:
                return self.construct_circuit(call, bound)
            if func.id in vocab.quantum_registers | vocab.classical_registers:
                return self.construct_register(call, func.id)
            if func.id in vocab.transpile:
                return self.transpile(call, bound)
        self.scan(call, safe=False)
        return None

    def construct_register(self, call: Call, ctor: str) -> RegisterDecl:
        kind = RegisterKind.QUANTUM if ctor in self.vocab.quantum_registers else RegisterKind.CLASSICAL
        size_expr = call.args[0] if call.args else call.keyword("size")
        size = self.eval_int(size_expr) if size_expr is not None else None
        if size is not None and size < 0:
            size = None
        return RegisterDecl(next(self._register_ids), kind, size, None, call.line)

    def construct_circuit(self, call: Call, bound: bool) -> _Builder | None:
        if not bound:
            self.scan(call, safe=True)
            return None
        builder = self.new_builder(call.line, Origin())
        args = [self.evaluate(arg) for arg in call.args]
        if any(isinstance(a, RegisterDecl) for a in args):
            for arg in args:
                if isinstance(arg, RegisterDecl):
                    builder.registers.append(arg)
                else:
                    builder.layout_unknown = True
        elif args:
            sizes = [a if isinstance(a, int) and a >= 0 else None for a in args[:2]]
            builder.registers.append(self.anonymous(RegisterKind.QUANTUM, sizes[0], call.line))
            if len(sizes) > 1 and sizes[1] != 0:
                builder.registers.append(self.anonymous(RegisterKind.CLASSICAL, sizes[1], call.line))
            if len(args) > 2:
                builder.layout_unknown = True
        return builder

    def anonymous(self, kind: RegisterKind, size: int | None, line: int, implicit: bool = False) -> RegisterDecl:
        return RegisterDecl(next(self._register_ids), kind, size, None, line, implicit)

    def new_builder(self, line: int, origin: Origin) -> _Builder:
        builder = _Builder(next(self._circuit_ids), None, line, origin)
        self.builders.append(builder)
        return builder

    def transpile(self, call: Call, bound: bool) -> _Builder | None:
        source_expr = call.args[0] if call.args else call.keyword("circuits")
        source = self.lookup(source_expr) if source_expr is not None else None
        for arg in call.args[1:]:
            self.scan(arg, safe=True)
        if source_expr is not None and not isinstance(source, _Builder):
            self.scan(source_expr, safe=True)
        result = None
        if bound and not isinstance(source_expr, Seq):
            parent = source.id if isinstance(source, _Builder) else None
            result = self.new_builder(call.line, Origin(OriginKind.FROM_TRANSPILE, (parent,)))
            result.qubits_unknown = True
            if isinstance(source, _Builder):
                result.registers = [r for r in source.registers if r.kind is RegisterKind.CLASSICAL]
                result.layout_unknown = source.layout_unknown
            else:
                result.layout_unknown = True
        if isinstance(source, _Builder):
            self.record(source, CircuitEvent(EventKind.TRANSPILE, call.line, result=result.id if result else None))
        return result

    def circuit_method(
        self, circuit: _Builder, method: str, call: Call, bound: bool, condition: Condition | None
    ) -> Binding | None:
        vocab = self.vocab
        line = call.line
        if vocab.is_gate(method):
            qubits = self.gate_qubits(circuit, method, call)
            cond = condition or self.condition
            self.record(circuit, CircuitEvent(EventKind.GATE, line, gate=method, qubits=qubits, condition=cond))
            self.scan_args(call)
        elif method in vocab.measure:
            qarg = call.args[0] if call.args else call.keyword("qubit")
            carg = call.args[1] if len(call.args) > 1 else call.keyword("cbit") or call.keyword("clbit")
            qubits = self.resolve_bits(qarg, circuit, RegisterKind.QUANTUM)
            clbits = self.resolve_bits(carg, circuit, RegisterKind.CLASSICAL)
            for q, c in itertools.zip_longest(qubits, clbits):
                self.record(circuit, CircuitEvent(EventKind.MEASURE, line, qubits=(q,), clbit=c))
        elif method in vocab.measure_all:
            add_bits = not _is_false(call.keyword("add_bits"))
            target = None
            if add_bits:
                reg = self.anonymous(
                    RegisterKind.CLASSICAL, circuit.size(RegisterKind.QUANTUM), line, implicit=True
                )
                circuit.registers.append(reg)
                target = reg.id
            self.record(circuit, CircuitEvent(EventKind.MEASURE_ALL, line, add_bits=add_bits, target_register=target))
        elif method in vocab.reset:
            qarg = call.args[0] if call.args else call.keyword("qubit")
            for q in self.resolve_bits(qarg, circuit, RegisterKind.QUANTUM):
                self.record(circuit, CircuitEvent(EventKind.RESET, line, qubits=(q,)))
        elif method in vocab.compose:
            return self.compose(circuit, call, bound)
        elif method in vocab.append:
            self.append(circuit, call, condition)
        elif method in vocab.add_register:
            for arg in call.args:
                reg = self.evaluate(arg)
                if isinstance(reg, RegisterDecl):
                    circuit.registers.append(reg)
                else:
                    circuit.layout_unknown = True
        elif method in vocab.noop_methods or method in vocab.pure_methods:
            self.scan_args(call)
        elif method in vocab.conditional_blocks:
            pass
        else:
            self.record(circuit, CircuitEvent(EventKind.GATE, line, gate=method, qubits=(None,), opaque=True))
            self.scan_args(call)
        return None

    def scan_args(self, call: Call) -> None:
        for arg in call.args:
            self.scan(arg, safe=True)
        for _, value in call.keywords:
            self.scan(value, safe=True)

    def compose(self, circuit: _Builder, call: Call, bound: bool) -> _Builder | None:
        other_expr = call.args[0] if call.args else call.keyword("other")
        other = self.lookup(other_expr) if other_expr is not None else None
        inplace = _is_true(call.keyword("inplace"))
        other_id = other.id if isinstance(other, _Builder) else None
        result = None
        if bound and not inplace:
            result = self.new_builder(call.line, Origin(OriginKind.FROM_COMPOSE, (circuit.id, other_id)))
            result.registers = list(circuit.registers)
            result.layout_unknown = circuit.layout_unknown
            result.qubits_unknown = circuit.qubits_unknown
        self.record(
            circuit,
            CircuitEvent(
                EventKind.COMPOSE,
                call.line,
                other=other_id,
                result=result.id if result else None,
                result_bound=bound,
                inplace=inplace,
            ),
        )
        return result

    def append(self, circuit: _Builder, call: Call, condition: Condition | None) -> None:
        instr = call.args[0] if call.args else call.keyword("instruction")
        qargs = call.args[1] if len(call.args) > 1 else call.keyword("qargs")
        cargs = call.args[2] if len(call.args) > 2 else call.keyword("cargs")
        name = "append"
        if isinstance(instr, Call):
            callee = _callee_name(instr.func) or ""
            name = callee[:-4].lower() if callee.endswith("Gate") and len(callee) > 4 else callee.lower()
        qubits = self.resolve_bits(qargs, circuit, RegisterKind.QUANTUM) if qargs is not None else [None]
        line = call.line
        if name == "measure":
            clbits = self.resolve_bits(cargs, circuit, RegisterKind.CLASSICAL) if cargs is not None else [None]
            for q, c in itertools.zip_longest(qubits, clbits):
                self.record(circuit, CircuitEvent(EventKind.MEASURE, line, qubits=(q,), clbit=c))
        elif name == "reset":
            for q in qubits:
                self.record(circuit, CircuitEvent(EventKind.RESET, line, qubits=(q,)))
        elif name == "barrier":
            pass
        else:
            cond = condition or self.condition
            self.record(circuit, CircuitEvent(EventKind.GATE, line, gate=name, qubits=tuple(qubits), condition=cond))

    def gate_qubits(self, circuit: _Builder, gate: str, call: Call) -> tuple[int | None, ...]:
        n_params = self.vocab.gate_parameters[gate]
        exprs = list(call.args[n_params:])
        exprs += [value for key, value in call.keywords if key in self.vocab.qubit_keywords]
        if not exprs:
            return (None,)
        qubits: list[int | None] = []
        for expr in exprs:
            qubits.extend(self.resolve_bits(expr, circuit, RegisterKind.QUANTUM))
        return tuple(qubits)

    def resolve_bits(self, expr: Expr | None, circuit: _Builder, kind: RegisterKind) -> list[int | None]:
        """Flat circuit indices denoted by a qubit/clbit argument."""
        if expr is None:
            return [None]
        if isinstance(expr, Seq):
            out: list[int | None] = []
            for item in expr.items:
                out.extend(self.resolve_bits(item, circuit, kind))
            return out or [None]
        if isinstance(expr, Call) and isinstance(expr.func, Name) and expr.func.id == "range":
            bounds = [self.eval_int(a) for a in expr.args]
            if expr.args and not expr.keywords and all(b is not None for b in bounds):
                try:
                    values = range(*bounds)
                except ValueError:
                    return [None]
                if len(values) <= MAX_RANGE:
                    return [self.check_index(v, circuit, kind) for v in values] or [None]
            return [None]
        if isinstance(expr, Subscript):
            container = self.lookup(expr.value)
            index = self.eval_int(expr.index)
            if isinstance(container, RegisterDecl) and index is not None:
                if container.kind is not kind:
                    return [None]
                offset = circuit.offset_of(container)
                size = container.size
                if offset is None:
                    return [None]
                if index < 0 and size is not None:
                    index += size
                if index < 0 or (size is not None and index >= size):
                    return [None]
                return [offset + index]
            if isinstance(container, tuple) and index is not None and -len(container) <= index < len(container):
                return [self.check_index(container[index], circuit, kind)]
            return [None]
        binding = self.lookup(expr) if isinstance(expr, (Name, Attribute)) else None
        if isinstance(binding, RegisterDecl):
            offset = circuit.offset_of(binding)
            if binding.kind is not kind or offset is None or binding.size is None:
                return [None]
            return list(range(offset, offset + binding.size)) or [None]
        if isinstance(binding, tuple):
            return [self.check_index(v, circuit, kind) for v in binding] or [None]
        value = self.eval_int(expr)
        if value is not None:
            return [self.check_index(value, circuit, kind)]
        return [None]

    def check_index(self, value: int, circuit: _Builder, kind: RegisterKind) -> int | None:
        size = circuit.size(kind)
        if size is None:
            return value if value >= 0 else None
        if value < 0:
            value += size
        return value if 0 <= value < size else None

    def resolve_condition(self, call: Call, circuit: _Builder) -> Condition:
        target = call.args[0] if call.args else call.keyword("classical")
        value_expr = call.args[1] if len(call.args) > 1 else call.keyword("val")
        value = self.eval_int(value_expr) if value_expr is not None else None
        return self.make_condition(target, value, circuit)

    def make_condition(self, target: Expr | None, value: int | None, circuit: _Builder) -> Condition:
        reg = None
        if isinstance(target, Subscript):
            reg = self.lookup(target.value)
        elif target is not None:
            reg = self.lookup(target)
        if isinstance(reg, RegisterDecl) and reg.kind is RegisterKind.CLASSICAL:
            if any(r.id == reg.id for r in circuit.registers):
                return Condition(reg.id, reg.name, value)
        return Condition(None, dotted_name(target) if target is not None else None, value)

    def if_test_condition(self, item: Expr) -> Condition | None:
        if not (isinstance(item, Call) and isinstance(item.func, Attribute)):
            return None
        if item.func.attr not in self.vocab.conditional_blocks:
            return None
        circuit = self.lookup(item.func.value)
        if not isinstance(circuit, _Builder):
            return None
        arg = item.args[0] if item.args else item.keyword("condition")
        if isinstance(arg, Seq) and len(arg.items) == 2:
            return self.make_condition(arg.items[0], self.eval_int(arg.items[1]), circuit)
        return Condition(None, None, None)


def _names_in_nested_scopes(stmts: tuple[Stmt, ...]) -> set[str]:
    """Identifiers mentioned anywhere inside function or class bodies."""
    names: set[str] = set()

    def collect(expr: Expr) -> None:
        if isinstance(expr, Name):
            names.add(expr.id)
        for child in iter_subexprs(expr):
            collect(child)

    for stmt in iter_statements(stmts):
        if isinstance(stmt, FuncDef) or (isinstance(stmt, Other) and stmt.block == "class"):
            for inner in iter_statements(stmt.children()):
                for expr in inner.exprs:
                    collect(expr)
    return names


def extract_circuits(module: SourceModule, vocab: Vocabulary | None = None) -> list[CircuitModel]:
    """Build one CircuitModel per circuit-producing binding in ``module``."""
    interp = _Interpreter(module, vocab or default_vocabulary())
    interp.run_module()
    return [b.freeze(module) for b in interp.builders]


def models_to_json(models: list[CircuitModel]) -> list[dict]:
    return [m.to_dict() for m in models]


__all__ = [
    "CircuitEvent",
    "CircuitModel",
    "Condition",
    "EventKind",
    "Origin",
    "OriginKind",
    "RegisterDecl",
    "RegisterKind",
    "extract_circuits",
    "measured_qubits",
    "models_to_json",
    "used_qubits",
]

"""Source frontend: lower Python source into a small positioned statement tree.

The analyzer only needs a narrow slice of Python (assignments, calls, loops,
branches, function bodies).  Everything is parsed with :mod:`ast` and lowered
into the node types below; constructs the analyzer does not model become
:class:`Other` (statements) or :class:`Unresolved` (expressions) but keep
their spans and sub-expressions.
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Union


# --- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Name:
    id: str
    line: int


@dataclass(frozen=True)
class Attribute:
    value: "Expr"
    attr: str
    line: int


@dataclass(frozen=True)
class Call:
    func: "Expr"
    args: tuple["Expr", ...]
    keywords: tuple[tuple[str | None, "Expr"], ...]
    line: int

    def keyword(self, name: str) -> "Expr | None":
        for key, value in self.keywords:
            if key == name:
                return value
        return None


@dataclass(frozen=True)
class IntLit:
    value: int
    line: int


@dataclass(frozen=True)
class StrLit:
    value: str
    line: int


@dataclass(frozen=True)
class Seq:
    items: tuple["Expr", ...]
    line: int


@dataclass(frozen=True)
class Subscript:
    value: "Expr"
    index: "Expr"
    line: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    line: int


@dataclass(frozen=True)
class Unresolved:
    """Any expression outside the modeled subset; children are kept for escape analysis."""

    children: tuple["Expr", ...]
    line: int


Expr = Union[Name, Attribute, Call, IntLit, StrLit, Seq, Subscript, BinOp, Unresolved]


def iter_subexprs(expr: Expr) -> Iterator[Expr]:
    """Yield the direct children of ``expr``."""
    if isinstance(expr, Attribute):
        yield expr.value
    elif isinstance(expr, Call):
        yield expr.func
        yield from expr.args
        for _, value in expr.keywords:
            yield value
    elif isinstance(expr, Seq):
        yield from expr.items
    elif isinstance(expr, Subscript):
        yield expr.value
        yield expr.index
    elif isinstance(expr, BinOp):
        yield expr.left
        yield expr.right
    elif isinstance(expr, Unresolved):
        yield from expr.children


def dotted_name(expr: Expr) -> str | None:
    """``a.b.c`` for a pure attribute chain over a name, else ``None``."""
    if isinstance(expr, Name):
        return expr.id
    if isinstance(expr, Attribute):
        base = dotted_name(expr.value)
        return None if base is None else f"{base}.{expr.attr}"
    return None


# --- statements ------------------------------------------------------------


@dataclass(frozen=True)
class Stmt:
    span: tuple[int, int]

    @property
    def exprs(self) -> tuple[Expr, ...]:
        return ()

    def children(self) -> tuple["Stmt", ...]:
        return ()


@dataclass(frozen=True)
class Assign(Stmt):
    targets: tuple[Expr, ...]
    value: Expr

    @property
    def exprs(self) -> tuple[Expr, ...]:
        return (*self.targets, self.value)


@dataclass(frozen=True)
class ExprCall(Stmt):
    call: Call

    @property
    def exprs(self) -> tuple[Expr, ...]:
        return (self.call,)


@dataclass(frozen=True)
class For(Stmt):
    target: Expr
    iter: Expr
    body: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] = ()

    @property
    def exprs(self) -> tuple[Expr, ...]:
        return (self.target, self.iter)

    def children(self) -> tuple[Stmt, ...]:
        return self.body + self.orelse


@dataclass(frozen=True)
class While(Stmt):
    test: Expr
    body: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] = ()

    @property
    def exprs(self) -> tuple[Expr, ...]:
        return (self.test,)

    def children(self) -> tuple[Stmt, ...]:
        return self.body + self.orelse


@dataclass(frozen=True)
class If(Stmt):
    test: Expr
    body: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] = ()

    @property
    def exprs(self) -> tuple[Expr, ...]:
        return (self.test,)

    def children(self) -> tuple[Stmt, ...]:
        return self.body + self.orelse


@dataclass(frozen=True)
class FuncDef(Stmt):
    name: str
    body: tuple[Stmt, ...]

    def children(self) -> tuple[Stmt, ...]:
        return self.body


@dataclass(frozen=True)
class Import(Stmt):
    pass


@dataclass(frozen=True)
class Other(Stmt):
    """Unmodeled statement.

    ``block`` tags compound statements whose bodies still matter to the
    analyzer: ``"with"`` and ``"try"`` bodies run straight-line, ``"class"``
    bodies hold methods, and ``alternatives`` are mutually exclusive arms
    (exception handlers, match cases).
    """

    values: tuple[Expr, ...] = ()
    block: str | None = None
    body: tuple[Stmt, ...] = ()
    alternatives: tuple[tuple[Stmt, ...], ...] = ()

    @property
    def exprs(self) -> tuple[Expr, ...]:
        return self.values

    def children(self) -> tuple[Stmt, ...]:
        out = self.body
        for alt in self.alternatives:
            out = out + alt
        return out


@dataclass(frozen=True)
class SourceModule:
    path: str
    text: str
    statements: tuple[Stmt, ...]
    line_count: int

    @cached_property
    def lines(self) -> tuple[str, ...]:
        return tuple(split_lines(self.text))

    def line_text(self, line: int) -> str:
        if 1 <= line <= len(self.lines):
            return self.lines[line - 1]
        return ""


class SourceSyntaxError(SyntaxError):
    """Raised when a file cannot be parsed; carries the offending line."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
        self.message = message


def iter_statements(stmts: tuple[Stmt, ...]) -> Iterator[Stmt]:
    """Pre-order walk over a statement tree."""
    for stmt in stmts:
        yield stmt
        yield from iter_statements(stmt.children())


# --- lowering --------------------------------------------------------------


_BINOPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.FloorDiv: "//", ast.Pow: "**"}


def _lower_expr(node: ast.AST | None) -> Expr:
    if node is None:
        return Unresolved((), 0)
    line = getattr(node, "lineno", 0)
    if isinstance(node, ast.Name):
        return Name(node.id, line)
    if isinstance(node, ast.Attribute):
        return Attribute(_lower_expr(node.value), node.attr, line)
    if isinstance(node, ast.Call):
        args = tuple(_lower_expr(a) for a in node.args)
        keywords = tuple((kw.arg, _lower_expr(kw.value)) for kw in node.keywords)
        return Call(_lower_expr(node.func), args, keywords, line)
    if isinstance(node, ast.Constant):
        # True/False/None read as names so keyword flags stay inspectable
        if isinstance(node.value, bool) or node.value is None:
            return Name(repr(node.value), line)
        if isinstance(node.value, int):
            return IntLit(node.value, line)
        if isinstance(node.value, str):
            return StrLit(node.value, line)
        return Unresolved((), line)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        inner = _lower_expr(node.operand)
        if isinstance(inner, IntLit):
            return IntLit(-inner.value, line)
        return Unresolved((inner,), line)
    if isinstance(node, (ast.Tuple, ast.List)):
        return Seq(tuple(_lower_expr(e) for e in node.elts), line)
    if isinstance(node, ast.Subscript):
        return Subscript(_lower_expr(node.value), _lower_expr(node.slice), line)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return BinOp(_BINOPS[type(node.op)], _lower_expr(node.left), _lower_expr(node.right), line)
    children = tuple(
        _lower_expr(child) for child in ast.iter_child_nodes(node) if isinstance(child, ast.expr)
    )
    return Unresolved(children, line)


def _span(node: ast.stmt) -> tuple[int, int]:
    return (node.lineno, node.end_lineno or node.lineno)


def _lower_body(nodes: list[ast.stmt]) -> tuple[Stmt, ...]:
    return tuple(_lower_stmt(n) for n in nodes)


def _lower_stmt(node: ast.stmt) -> Stmt:
    span = _span(node)
    if isinstance(node, ast.Assign):
        return Assign(span, tuple(_lower_expr(t) for t in node.targets), _lower_expr(node.value))
    if isinstance(node, ast.AnnAssign) and node.value is not None:
        return Assign(span, (_lower_expr(node.target),), _lower_expr(node.value))
    if isinstance(node, ast.AugAssign):
        # x += y rebinds x to a value we do not track
        rhs = _lower_expr(node.value)
        target = _lower_expr(node.target)
        return Assign(span, (target,), Unresolved((target, rhs), node.lineno))
    if isinstance(node, ast.Expr) and isinstance(node.value, ast.Call):
        call = _lower_expr(node.value)
        assert isinstance(call, Call)
        return ExprCall(span, call)
    if isinstance(node, (ast.For, ast.AsyncFor)):
        return For(
            span,
            _lower_expr(node.target),
            _lower_expr(node.iter),
            _lower_body(node.body),
            _lower_body(node.orelse),
        )
    if isinstance(node, ast.While):
        return While(span, _lower_expr(node.test), _lower_body(node.body), _lower_body(node.orelse))
    if isinstance(node, ast.If):
        return If(span, _lower_expr(node.test), _lower_body(node.body), _lower_body(node.orelse))
    if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
        return FuncDef(span, node.name, _lower_body(node.body))
    if isinstance(node, (ast.Import, ast.ImportFrom)):
        return Import(span)
    if isinstance(node, (ast.With, ast.AsyncWith)):
        items = tuple(_lower_expr(item.context_expr) for item in node.items)
        return Other(span, items, "with", _lower_body(node.body))
    if isinstance(node, ast.Try) or type(node).__name__ == "TryStar":
        body = _lower_body(node.body + node.orelse + node.finalbody)
        handlers = tuple(_lower_body(h.body) for h in node.handlers)
        return Other(span, (), "try", body, handlers)
    if isinstance(node, ast.ClassDef):
        return Other(span, (), "class", _lower_body(node.body))
    if type(node).__name__ == "Match":
        cases = tuple(_lower_body(case.body) for case in node.cases)
        return Other(span, (_lower_expr(node.subject),), "match", (), cases)
    values = tuple(
        _lower_expr(child) for child in ast.iter_child_nodes(node) if isinstance(child, ast.expr)
    )
    return Other(span, values)


def parse_source(path: str, text: str) -> SourceModule:
    """Parse ``text`` and lower it; raises :class:`SourceSyntaxError` on invalid input."""
    try:
        tree = ast.parse(text, filename=path)
    except SyntaxError as exc:
        raise SourceSyntaxError(path, exc.lineno or 1, exc.msg or "invalid syntax") from None
    except ValueError as exc:  # e.g. null bytes
        raise SourceSyntaxError(path, 1, str(exc)) from None
    statements = _lower_body(tree.body)
    line_count = max(1, len(split_lines(text)))
    return SourceModule(path, text, statements, line_count)


_NEWLINE = re.compile(r"\r\n|\r|\n")


def split_lines(text: str) -> list[str]:
    """Split on the same line terminators the Python tokenizer counts."""
    lines = _NEWLINE.split(text)
    if lines and lines[-1] == "":
        lines.pop()
    return lines


# --- line annotation and token budgeting ------------------------------------

_LINE_PREFIX = re.compile(r"^\d+: ")


def annotate_lines(text: str) -> str:
    """Prefix each line with ``"<n>: "``; a trailing newline is preserved as-is."""
    if not text:
        return ""
    lines = text.split("\n")
    trailing = lines[-1] == ""
    if trailing:
        lines.pop()
    out = "\n".join(f"{n}: {line}" for n, line in enumerate(lines, start=1))
    return out + "\n" if trailing else out


def strip_line_numbers(text: str) -> str:
    """Inverse of :func:`annotate_lines`."""
    return "\n".join(_LINE_PREFIX.sub("", line, count=1) for line in text.split("\n"))


CHARS_PER_TOKEN = 4


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / CHARS_PER_TOKEN)

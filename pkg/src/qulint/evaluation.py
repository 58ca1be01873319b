"""Scoring detected warnings against hand-labeled annotations."""

from __future__ import annotations

import csv
import io
import os
import posixpath
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from qulint.problems import ProblemKind, Warning

ANNOTATION_HEADER = ("file", "problem", "line", "label")


class Label(str, Enum):
    TP = "TP"
    FP = "FP"
    NW = "NW"


@dataclass(frozen=True)
class AnnotatedWarning:
    file: str
    problem: ProblemKind
    line: int
    label: Label


class FormatError(ValueError):
    def __init__(self, row: int, reason: str):
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class DuplicateAnnotation(FormatError):
    pass


def normalize_path(path: str) -> str:
    return posixpath.normpath(str(path).replace("\\", "/"))


def parse_annotations(text: str) -> list[AnnotatedWarning]:
    """Parse annotation CSV text; row numbers in errors count the header as row 1."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(1, "missing header") from None
    if tuple(h.strip() for h in header) != ANNOTATION_HEADER:
        raise FormatError(1, f"header must be {','.join(ANNOTATION_HEADER)}")
    out: list[AnnotatedWarning] = []
    seen: dict[tuple, int] = {}
    for row_number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 4:
            raise FormatError(row_number, f"expected 4 fields, got {len(row)}")
        file, problem, line, label = (cell.strip() for cell in row)
        try:
            kind = ProblemKind.parse(problem)
        except ValueError:
            raise FormatError(row_number, f"unknown problem '{problem}'") from None
        try:
            number = int(line)
        except ValueError:
            raise FormatError(row_number, f"line '{line}' is not an integer") from None
        if number < 1:
            raise FormatError(row_number, f"line {number} is not positive")
        try:
            tag = Label(label.upper())
        except ValueError:
            raise FormatError(row_number, f"unknown label '{label}'") from None
        key = (normalize_path(file), kind, number)
        if key in seen:
            raise DuplicateAnnotation(row_number, f"duplicates row {seen[key]}")
        seen[key] = row_number
        out.append(AnnotatedWarning(file, kind, number, tag))
    return out


def load_annotations(path: str | os.PathLike) -> list[AnnotatedWarning]:
    return parse_annotations(Path(path).read_text(encoding="utf-8-sig"))


@dataclass(frozen=True)
class MatchPolicy:
    """Line test for matching: ``window=0`` is exact, ``None`` ignores lines."""

    window: int | None = 0

    @classmethod
    def parse(cls, text: str) -> "MatchPolicy":
        text = text.strip().lower()
        if text == "exact":
            return cls(0)
        if text == "file":
            return cls(None)
        if text.startswith("window:"):
            try:
                n = int(text.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad window size in '{text}'") from None
            if n < 0:
                raise ValueError("window size must be non-negative")
            return cls(n)
        raise ValueError(f"unknown match policy '{text}' (use exact, file or window:N)")

    def __str__(self) -> str:
        if self.window is None:
            return "file"
        return "exact" if self.window == 0 else f"window:{self.window}"

    def accepts(self, distance: int) -> bool:
        return self.window is None or distance <= self.window


EXACT = MatchPolicy(0)
FILE_AND_PROBLEM = MatchPolicy(None)


@dataclass
class MatchCounts:
    tp: int = 0
    fp: int = 0
    nw: int = 0
    fn: int = 0

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.nw + other.nw, self.fn + other.fn)

    def scaled(self, k: int) -> "MatchCounts":
        return MatchCounts(self.tp * k, self.fp * k, self.nw * k, self.fn * k)


@dataclass
class MatchResult:
    counts: MatchCounts
    pairs: list[tuple[Warning, AnnotatedWarning]] = field(default_factory=list)
    unmatched: list[Warning] = field(default_factory=list)


def match_warnings(
    detected: Sequence[Warning],
    annotations: Sequence[AnnotatedWarning],
    policy: MatchPolicy = EXACT,
) -> MatchResult:
    """One-to-one greedy matching, closest lines first.

    Candidate pairs share file and problem and pass the policy's line test.
    They are taken in order of (distance, annotation line, annotation index,
    detection index), skipping pairs whose ends are already used.
    """
    by_key: dict[tuple[str, ProblemKind], list[int]] = {}
    for j, a in enumerate(annotations):
        by_key.setdefault((normalize_path(a.file), a.problem), []).append(j)
    candidates = []
    for i, d in enumerate(detected):
        for j in by_key.get((normalize_path(d.file), d.problem), ()):
            distance = abs(d.line - annotations[j].line)
            if policy.accepts(distance):
                candidates.append((distance, annotations[j].line, j, i))
    candidates.sort()
    used_d: set[int] = set()
    used_a: dict[int, int] = {}
    for _, _, j, i in candidates:
        if i in used_d or j in used_a:
            continue
        used_d.add(i)
        used_a[j] = i
    counts = MatchCounts()
    pairs = []
    for j in sorted(used_a):
        a = annotations[j]
        pairs.append((detected[used_a[j]], a))
        if a.label is Label.TP:
            counts.tp += 1
        elif a.label is Label.FP:
            counts.fp += 1
        else:
            counts.nw += 1
    counts.fn = sum(1 for j, a in enumerate(annotations) if a.label is Label.TP and j not in used_a)
    unmatched = [d for i, d in enumerate(detected) if i not in used_d]
    return MatchResult(counts, pairs, unmatched)


def precision(counts: MatchCounts) -> Fraction | None:
    denominator = counts.tp + counts.fp + counts.nw
    return Fraction(counts.tp, denominator) if denominator else None


def recall(counts: MatchCounts) -> Fraction | None:
    denominator = counts.tp + counts.fn
    return Fraction(counts.tp, denominator) if denominator else None


def percent(value: Fraction | None) -> int | None:
    """Nearest whole percent, halves rounded up."""
    if value is None:
        return None
    scaled = Decimal(value.numerator * 100) / Decimal(value.denominator)
    return int(scaled.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _fraction_text(value: Fraction | None) -> str | None:
    return None if value is None else f"{value.numerator}/{value.denominator}"


@dataclass
class ProblemRow:
    counts: MatchCounts

    @property
    def precision(self) -> Fraction | None:
        return precision(self.counts)

    @property
    def recall(self) -> Fraction | None:
        return recall(self.counts)

    def to_dict(self) -> dict:
        c = self.counts
        return {
            "tp": c.tp,
            "fp": c.fp,
            "nw": c.nw,
            "fn": c.fn,
            "precision": _fraction_text(self.precision),
            "recall": _fraction_text(self.recall),
            "precision_percent": percent(self.precision),
            "recall_percent": percent(self.recall),
        }


@dataclass
class EvaluationReport:
    policy: MatchPolicy
    per_problem: dict[ProblemKind, ProblemRow]
    overall: ProblemRow

    def to_dict(self) -> dict:
        return {
            "policy": str(self.policy),
            "per_problem": {k.value: row.to_dict() for k, row in self.per_problem.items()},
            "overall": self.overall.to_dict(),
        }

    def to_text(self) -> str:
        def cell(value: int | None) -> str:
            return "-" if value is None else f"{value}%"

        header = ("Problem", "TP", "FP", "NW", "FN", "Precision", "Recall")
        rows = [header]
        named = [(k.value, r) for k, r in self.per_problem.items()] + [("Overall", self.overall)]
        for name, row in named:
            c = row.counts
            rows.append(
                (name, str(c.tp), str(c.fp), str(c.nw), str(c.fn), cell(percent(row.precision)), cell(percent(row.recall)))
            )
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = [f"Match policy: {self.policy}"]
        for r in rows:
            lines.append("  ".join(r[0].ljust(widths[0]) if i == 0 else r[i].rjust(widths[i]) for i in range(len(r))))
        return "\n".join(lines) + "\n"


def per_problem_report(
    detected: Iterable[Warning],
    annotations: Iterable[AnnotatedWarning],
    policy: MatchPolicy = EXACT,
) -> EvaluationReport:
    """Per-kind counts and metrics; the overall row sums the counts."""
    detected = list(detected)
    annotations = list(annotations)
    rows: dict[ProblemKind, ProblemRow] = {}
    total = MatchCounts()
    for kind in ProblemKind:
        result = match_warnings(
            [d for d in detected if d.problem is kind],
            [a for a in annotations if a.problem is kind],
            policy,
        )
        rows[kind] = ProblemRow(result.counts)
        total = total + result.counts
    return EvaluationReport(policy, rows, ProblemRow(total))


def load_detected(report: dict) -> list[Warning]:
    """Warnings from a JSON lint report."""
    return [Warning.from_dict(w) for w in report.get("warnings", [])]

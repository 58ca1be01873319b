"""Lint reports: hybrid ranking plus text, JSON and SARIF rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable

from qulint import __version__
from qulint.problems import ProblemKind, Source, Warning

HYBRID_WINDOW = 2
SARIF_SCHEMA = "https://json.schemastore.org/sarif-2.1.0.json"


def report_sort_key(w: Warning) -> tuple:
    return (w.rank, w.file, w.line, w.problem.value)


def _fused_explanation(static: Warning, llm: Warning) -> str:
    if not llm.explanation:
        return static.explanation
    return f"{static.explanation} LLM (line {llm.line}): {llm.explanation}"


def hybrid_merge(
    static: Iterable[Warning],
    llm: Iterable[Warning],
    window: int = HYBRID_WINDOW,
) -> list[Warning]:
    """Rank warnings found by both engines first.

    A static and an LLM warning with the same file and problem whose lines are
    at most ``window`` apart are fused (closest pairs first, one-to-one) into a
    rank 1 entry that keeps the static line.  Unpaired static warnings get
    rank 2 and unpaired LLM warnings rank 3.
    """
    static = sorted(static, key=Warning.sort_key)
    llm = sorted(llm, key=Warning.sort_key)
    candidates = []
    for i, s in enumerate(static):
        for j, m in enumerate(llm):
            if s.file == m.file and s.problem is m.problem and abs(s.line - m.line) <= window:
                candidates.append((abs(s.line - m.line), i, j))
    candidates.sort()
    paired_s: dict[int, int] = {}
    paired_m: set[int] = set()
    for _, i, j in candidates:
        if i not in paired_s and j not in paired_m:
            paired_s[i] = j
            paired_m.add(j)
    out = []
    for i, s in enumerate(static):
        if i in paired_s:
            m = llm[paired_s[i]]
            out.append(
                replace(s, explanation=_fused_explanation(s, m), source=Source.BOTH, rank=1, llm_line=m.line)
            )
        else:
            out.append(replace(s, rank=2))
    out.extend(replace(m, rank=3) for j, m in enumerate(llm) if j not in paired_m)
    return sorted(out, key=report_sort_key)


@dataclass(frozen=True)
class Skipped:
    file: str
    reason: str

    def to_dict(self) -> dict:
        return {"file": self.file, "reason": self.reason}


@dataclass
class LintReport:
    mode: str
    warnings: list[Warning]
    skipped: list[Skipped]
    files_total: int
    llm_requests: int = 0
    duration: float | None = None
    version: str = __version__

    @property
    def files_skipped(self) -> int:
        return len({s.file for s in self.skipped})

    def stats(self, timings: bool = True) -> dict:
        stats = {
            "files_total": self.files_total,
            "files_skipped": self.files_skipped,
            "skipped_entries": len(self.skipped),
            "warnings": len(self.warnings),
            "llm_requests": self.llm_requests,
        }
        if timings and self.duration is not None:
            stats["duration_seconds"] = round(self.duration, 3)
        return stats

    def to_dict(self, timings: bool = True) -> dict:
        return {
            "version": self.version,
            "mode": self.mode,
            "warnings": [w.to_dict() for w in self.warnings],
            "skipped": [s.to_dict() for s in self.skipped],
            "stats": self.stats(timings),
        }

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, ensure_ascii=False) + "\n"

    def to_text(self, timings: bool = True) -> str:
        lines = []
        for w in self.warnings:
            tag = w.source.value if self.mode != "hybrid" else f"{w.source.value}, rank {w.rank}"
            lines.append(f"{w.file}:{w.line}: {w.problem.value} [{tag}] {w.explanation}")
            if w.snippet:
                lines.append(f"    {w.snippet}")
        for s in self.skipped:
            lines.append(f"{s.file}: skipped: {s.reason}")
        summary = (
            f"{len(self.warnings)} warning(s) in {self.files_total} file(s), "
            f"{self.files_skipped} file(s) with skipped analyses"
        )
        if timings and self.duration is not None:
            summary += f" ({self.duration:.2f}s)"
        lines.append(summary)
        return "\n".join(lines) + "\n"

    def to_sarif(self) -> str:
        rules = [
            {
                "id": kind.value,
                "name": kind.title,
                "shortDescription": {"text": kind.title},
                "fullDescription": {"text": kind.description},
            }
            for kind in ProblemKind
        ]
        index = {kind: i for i, kind in enumerate(ProblemKind)}
        results = [
            {
                "ruleId": w.problem.value,
                "ruleIndex": index[w.problem],
                "level": "warning",
                "message": {"text": w.explanation or w.problem.description},
                "locations": [
                    {
                        "physicalLocation": {
                            "artifactLocation": {"uri": w.file},
                            "region": {"startLine": w.line},
                        }
                    }
                ],
                "properties": {"source": w.source.value, "rank": w.rank},
            }
            for w in self.warnings
        ]
        notes = [
            {
                "level": "warning",
                "message": {"text": f"{s.file}: {s.reason}"},
                "descriptor": {"id": "skipped"},
            }
            for s in self.skipped
        ]
        doc = {
            "$schema": SARIF_SCHEMA,
            "version": "2.1.0",
            "runs": [
                {
                    "tool": {
                        "driver": {
                            "name": "qulint",
                            "version": self.version,
                            "rules": rules,
                        }
                    },
                    "invocations": [
                        {"executionSuccessful": True, "toolExecutionNotifications": notes}
                    ],
                    "results": results,
                }
            ],
        }
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

    def render(self, fmt: str, timings: bool = True) -> str:
        if fmt == "json":
            return self.to_json(timings)
        if fmt == "sarif":
            return self.to_sarif()
        return self.to_text(timings)

"""Problem catalog and the diagnostic record shared by both engines."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class ProblemKind(str, Enum):
    DoubleMeas = "DoubleMeas"
    OpAfterMeas = "OpAfterMeas"
    MeasAllAbuse = "MeasAllAbuse"
    CondWoMeas = "CondWoMeas"
    ConstClasBit = "ConstClasBit"
    InsuffClasReg = "InsuffClasReg"
    OversizedCircuit = "OversizedCircuit"
    GhostCompose = "GhostCompose"
    OpAfterOpt = "OpAfterOpt"
    OldIdenGate = "OldIdenGate"

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]

    @property
    def title(self) -> str:
        return _TITLES[self]

    @classmethod
    def parse(cls, name: str) -> ProblemKind:
        """Look up a kind by its exact catalog name."""
        try:
            return cls(name.strip())
        except ValueError:
            raise ValueError(f"unknown problem kind: {name!r}") from None


_DESCRIPTIONS = {
    ProblemKind.DoubleMeas: "Two consecutive measurements are performed on the same qubit state.",
    ProblemKind.OpAfterMeas: "A gate is applied to a qubit after it has already been measured.",
    ProblemKind.MeasAllAbuse: (
        "Measurement results are stored in a newly and implicitly created register, "
        "despite the presence of an existing classical register."
    ),
    ProblemKind.CondWoMeas: "A conditional gate is applied without measuring the associated register.",
    ProblemKind.ConstClasBit: "A qubit is measured without undergoing any prior transformation.",
    ProblemKind.InsuffClasReg: (
        "There are not enough classical bits to store the measurement results of all qubits."
    ),
    ProblemKind.OversizedCircuit: "The quantum register includes qubits that remain unused.",
    ProblemKind.GhostCompose: (
        "Two circuits are composed, but the resulting composed circuit is not utilized."
    ),
    ProblemKind.OpAfterOpt: "A gate is applied to the circuit after transpilation.",
    ProblemKind.OldIdenGate: "An identity gate is created using an API that has been removed.",
}

_TITLES = {
    ProblemKind.DoubleMeas: "Double measurement",
    ProblemKind.OpAfterMeas: "Operation after measurement",
    ProblemKind.MeasAllAbuse: "Measure-all abuse",
    ProblemKind.CondWoMeas: "Conditional without measurement",
    ProblemKind.ConstClasBit: "Constant classical bit",
    ProblemKind.InsuffClasReg: "Insufficient classical register",
    ProblemKind.OversizedCircuit: "Oversized circuit",
    ProblemKind.GhostCompose: "Ghost composition",
    ProblemKind.OpAfterOpt: "Operation after optimization",
    ProblemKind.OldIdenGate: "Old identity gate",
}

ALL_KINDS: tuple[ProblemKind, ...] = tuple(ProblemKind)


def parse_kinds(text: str | None) -> frozenset[ProblemKind]:
    """Parse a comma-separated list of kind names; ``None``/``"all"`` means every kind."""
    if text is None or text.strip().lower() == "all":
        return frozenset(ALL_KINDS)
    names = [part for part in (p.strip() for p in text.split(",")) if part]
    return frozenset(ProblemKind.parse(name) for name in names)


class Source(str, Enum):
    """Engine that produced a warning. ``BOTH`` marks a hybrid-fused entry."""

    STATIC = "static"
    LLM = "llm"
    BOTH = "static+llm"


@dataclass(frozen=True)
class Warning:
    file: str
    problem: ProblemKind
    line: int
    snippet: str
    explanation: str
    source: Source = Source.STATIC
    rank: int = 1
    llm_line: int | None = None

    def sort_key(self) -> tuple:
        return (self.file, self.line, self.problem.value)

    def to_dict(self) -> dict:
        data = {
            "file": self.file,
            "problem": self.problem.value,
            "line": self.line,
            "snippet": self.snippet,
            "explanation": self.explanation,
            "source": self.source.value,
            "rank": self.rank,
        }
        if self.llm_line is not None:
            data["llm_line"] = self.llm_line
        return data

    @classmethod
    def from_dict(cls, data: dict) -> Warning:
        return cls(
            file=data["file"],
            problem=ProblemKind.parse(data["problem"]),
            line=int(data["line"]),
            snippet=data.get("snippet", ""),
            explanation=data.get("explanation", ""),
            source=Source(data.get("source", "static")),
            rank=int(data.get("rank", 1)),
            llm_line=data.get("llm_line"),
        )

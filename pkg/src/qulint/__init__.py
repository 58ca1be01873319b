"""Hybrid static/LLM linter for quantum-specific problems in Qiskit programs."""

from qulint.problems import ProblemKind, Source, Warning

__version__ = "0.1.0"

__all__ = ["ProblemKind", "Source", "Warning", "__version__"]

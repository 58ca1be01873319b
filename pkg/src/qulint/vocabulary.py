"""Recognized Qiskit constructor and method vocabulary, loaded from package data."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


@dataclass(frozen=True)
class Vocabulary:
    circuit_constructors: frozenset[str]
    quantum_registers: frozenset[str]
    classical_registers: frozenset[str]
    gate_parameters: dict[str, int]
    qubit_keywords: frozenset[str]
    measure: frozenset[str]
    measure_all: frozenset[str]
    reset: frozenset[str]
    condition: frozenset[str]
    conditional_blocks: frozenset[str]
    compose: frozenset[str]
    append: frozenset[str]
    add_register: frozenset[str]
    transpile: frozenset[str]
    removed_identity: frozenset[str]
    noop_methods: frozenset[str]
    pure_methods: frozenset[str]
    consumer_functions: frozenset[str]
    consumer_methods: frozenset[str]

    def is_gate(self, name: str) -> bool:
        return name in self.gate_parameters

    @classmethod
    def from_dict(cls, data: dict) -> Vocabulary:
        kwargs = {}
        for field_name, field_type in cls.__annotations__.items():
            value = data[field_name]
            kwargs[field_name] = dict(value) if field_name == "gate_parameters" else frozenset(value)
        return cls(**kwargs)


def load_vocabulary_text() -> str:
    return resources.files("qulint").joinpath("data/vocabulary.json").read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def default_vocabulary() -> Vocabulary:
    return Vocabulary.from_dict(json.loads(load_vocabulary_text()))

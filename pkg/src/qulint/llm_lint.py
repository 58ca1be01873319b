"""Prompt-based linting: one prompt per problem kind, one JSON answer per prompt."""

from __future__ import annotations

import json
import logging
import re
import textwrap
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable

from qulint.llm_client import CompletionBackend, CompletionError, LlmSettings, TokenLimitError
from qulint.problems import ProblemKind, Source, Warning
from qulint.source import SourceModule, annotate_lines, estimate_tokens

log = logging.getLogger(__name__)

TEMPLATE_VERSION = "v1"
SECTION_HEADERS = ("## Situation", "## Your Role", "## Output Format")
PARAMETERS = ("problem", "code", "problem_description")
_PLACEHOLDER = re.compile(r"\?(problem_description|problem|code)\?")
_EXAMPLE = re.compile(r"<example>\n(.*?)</example>\n?", re.S)


def _data_text(*parts: str) -> str:
    node = resources.files("qulint").joinpath("data", "prompts", *parts)
    return node.read_text(encoding="utf-8")


@dataclass(frozen=True)
class PromptTemplate:
    version: str
    text: str

    @property
    def sections(self) -> tuple[str, ...]:
        return tuple(h for h in SECTION_HEADERS if h in self.text)

    @property
    def parameters(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER.findall(self.text))

    def instantiate(self, **values: str) -> str:
        """Replace every placeholder in one pass, so inserted text is never rescanned."""
        missing = self.parameters - values.keys()
        if missing:
            raise KeyError(f"missing template parameters: {sorted(missing)}")
        return _PLACEHOLDER.sub(lambda m: values[m.group(1)], self.text)


@lru_cache(maxsize=None)
def load_template(version: str = TEMPLATE_VERSION) -> PromptTemplate:
    return PromptTemplate(version, _data_text(version, "template.txt"))


@dataclass(frozen=True)
class ProblemDescription:
    kind: ProblemKind
    text: str
    prose: str
    examples: tuple[str, ...]

    def example_code(self) -> tuple[str, ...]:
        """Examples with the tab indentation removed, ready to parse."""
        return tuple(textwrap.dedent(e.expandtabs(4)) for e in self.examples)


@lru_cache(maxsize=None)
def problem_description(kind: ProblemKind, version: str = TEMPLATE_VERSION) -> ProblemDescription:
    text = _data_text(version, "descriptions", f"{kind.value}.txt")
    body = text.split(" --- ", 1)[1] if " --- " in text else text
    examples = tuple(m.group(1) for m in _EXAMPLE.finditer(body))
    prose = _EXAMPLE.sub("", body).strip()
    return ProblemDescription(kind, text.rstrip("\n"), prose, examples)


@dataclass(frozen=True)
class PromptInstance:
    kind: ProblemKind
    text: str
    estimated_tokens: int


class TokenLimitExceeded(Exception):
    def __init__(self, estimated: int, limit: int):
        self.estimated = estimated
        self.limit = limit
        super().__init__(f"prompt needs about {estimated} tokens, limit is {limit}")


def build_prompt(
    kind: ProblemKind,
    module: SourceModule,
    token_limit: int = LlmSettings.token_limit,
    version: str = TEMPLATE_VERSION,
) -> PromptInstance:
    if not module.text:
        raise ValueError(f"{module.path}: cannot build a prompt for an empty file")
    text = load_template(version).instantiate(
        problem=kind.value,
        code=annotate_lines(module.text).rstrip("\n"),
        problem_description=problem_description(kind, version).text,
    )
    estimated = estimate_tokens(text)
    if estimated > token_limit:
        raise TokenLimitExceeded(estimated, token_limit)
    return PromptInstance(kind, text, estimated)


class MalformedResponse(ValueError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class LlmFinding:
    problem: str
    snippets: tuple[str, ...]
    lines: tuple[int, ...]
    explanations: tuple[str, ...]


def first_json_object(raw: str) -> dict:
    """The first ``{...}`` in ``raw`` that decodes as a JSON object."""
    decoder = json.JSONDecoder()
    start = raw.find("{")
    while start != -1:
        try:
            value, _ = decoder.raw_decode(raw, start)
        except json.JSONDecodeError:
            pass
        else:
            if isinstance(value, dict):
                return value
        start = raw.find("{", start + 1)
    raise MalformedResponse("no JSON object found in response")


def _as_line(value) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str) and value.strip().isdigit():
        return int(value.strip())
    return None


def _as_list(data: dict, key: str) -> list:
    value = data.get(key)
    if value is None:
        return []
    if not isinstance(value, list):
        raise MalformedResponse(f"'{key}' is not an array")
    return value


def parse_finding(raw: str, kind: ProblemKind) -> LlmFinding:
    data = first_json_object(raw)
    problem = data.get("problem", kind.value)
    if problem != kind.value:
        raise MalformedResponse(f"answer is about '{problem}', expected '{kind.value}'")
    lines = _as_list(data, "lines")
    n = len(lines)
    snippets = [str(s) for s in _as_list(data, "snippets")][:n]
    explanations = [str(e) for e in _as_list(data, "explanations")][:n]
    snippets += [""] * (n - len(snippets))
    explanations += [""] * (n - len(explanations))
    return LlmFinding(kind.value, tuple(snippets), tuple(lines), tuple(explanations))


def parse_response(
    raw: str,
    kind: ProblemKind,
    module: SourceModule,
    diagnostics: list[str] | None = None,
) -> list[Warning]:
    """Warnings for the lines listed in the model's answer.

    Lines that are not integers or fall outside the file are dropped and noted
    in ``diagnostics``; repeated lines are reported once.
    """
    finding = parse_finding(raw, kind)
    notes = diagnostics if diagnostics is not None else []
    seen: set[int] = set()
    out = []
    for value, snippet, explanation in zip(finding.lines, finding.snippets, finding.explanations):
        line = _as_line(value)
        if line is None or not 1 <= line <= module.line_count:
            notes.append(f"{kind.value}: dropped line {value!r} outside 1..{module.line_count}")
            continue
        if line in seen:
            continue
        seen.add(line)
        out.append(
            Warning(
                file=module.path,
                problem=kind,
                line=line,
                snippet=snippet or module.line_text(line).strip(),
                explanation=explanation,
                source=Source.LLM,
            )
        )
    return sorted(out, key=lambda w: w.line)


@dataclass(frozen=True)
class SkipDiagnostic:
    """A (file, problem) pair the LLM could not analyze, with the reason."""

    file: str
    problem: ProblemKind | None
    category: str
    reason: str

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "problem": self.problem.value if self.problem else None,
            "category": self.category,
            "reason": self.reason,
        }


def lint_file_llm(
    module: SourceModule,
    kinds: Iterable[ProblemKind],
    client: CompletionBackend,
    settings: LlmSettings = LlmSettings(),
) -> tuple[list[Warning], list[SkipDiagnostic]]:
    """Query the model once per enabled kind and collect its warnings."""
    warnings: list[Warning] = []
    skips: list[SkipDiagnostic] = []
    for kind in [k for k in ProblemKind if k in set(kinds)]:
        try:
            prompt = build_prompt(kind, module, settings.token_limit)
        except TokenLimitExceeded as exc:
            skips.append(SkipDiagnostic(module.path, kind, "token-limit", str(exc)))
            continue
        except ValueError as exc:
            skips.append(SkipDiagnostic(module.path, kind, "empty", str(exc)))
            continue
        try:
            response = client.complete(settings.request(prompt.text))
        except TokenLimitError as exc:
            skips.append(SkipDiagnostic(module.path, kind, "token-limit", str(exc)))
            continue
        except CompletionError as exc:
            skips.append(SkipDiagnostic(module.path, kind, "transport", str(exc)))
            continue
        notes: list[str] = []
        try:
            warnings.extend(parse_response(response.text, kind, module, notes))
        except MalformedResponse as exc:
            skips.append(SkipDiagnostic(module.path, kind, "malformed-response", exc.reason))
            continue
        for note in notes:
            log.info("%s: %s", module.path, note)
    warnings.sort(key=lambda w: (w.line, w.problem.value))
    return warnings, skips

"""Command-line interface: ``qulint lint``, ``qulint eval`` and ``qulint prompts dump``."""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from qulint import __version__
from qulint.checks import run_all_checks
from qulint.evaluation import FormatError, MatchPolicy, load_annotations, load_detected, per_problem_report
from qulint.llm_client import (
    DEFAULT_MODEL,
    DEFAULT_TOKEN_LIMIT,
    Cassette,
    CompletionBackend,
    CompletionRequest,
    CompletionResponse,
    HttpBackend,
    LlmSettings,
    RecordingBackend,
    ReplayBackend,
)
from qulint.llm_lint import (
    SkipDiagnostic,
    TokenLimitExceeded,
    build_prompt,
    lint_file_llm,
    load_template,
    problem_description,
)
from qulint.model import extract_circuits, models_to_json
from qulint.problems import ALL_KINDS, ProblemKind, Warning, parse_kinds
from qulint.report import LintReport, Skipped, hybrid_merge, report_sort_key
from qulint.source import SourceModule, SourceSyntaxError, parse_source, split_lines

MODES = ("static", "llm", "hybrid")
FORMATS = ("text", "json", "sarif")
CONFIG_FILE = "qulint.conf"
EXIT_CLEAN, EXIT_WARNINGS, EXIT_ERROR = 0, 1, 2


@dataclass
class RunConfig:
    mode: str = "static"
    checks: frozenset[ProblemKind] = frozenset(ALL_KINDS)
    fmt: str = "text"
    llm_endpoint: str | None = None
    llm_model: str = DEFAULT_MODEL
    token_limit: int = DEFAULT_TOKEN_LIMIT
    cassette: str | None = None
    record: bool = False
    jobs: int = 1
    timings: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode '{self.mode}'")
        if self.fmt not in FORMATS:
            raise ValueError(f"unknown format '{self.fmt}'")
        self.checks = frozenset(self.checks)
        if not self.checks <= frozenset(ALL_KINDS):
            raise ValueError("checks must be problem kinds")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.token_limit < 1:
            raise ValueError("token limit must be positive")

    @property
    def settings(self) -> LlmSettings:
        return LlmSettings(model_id=self.llm_model, token_limit=self.token_limit)


class _CountingBackend:
    """Wraps a backend and counts requests across threads."""

    def __init__(self, inner: CompletionBackend):
        self.inner = inner
        self.count = 0
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            self.count += 1
        return self.inner.complete(request)


def collect_files(paths: Sequence[str]) -> tuple[list[str], list[Skipped]]:
    """Python files named directly or found under directories, in sorted order."""
    files: list[str] = []
    missing: list[Skipped] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(p.as_posix() for p in path.rglob("*.py") if p.is_file()))
        elif path.is_file():
            files.append(path.as_posix())
        else:
            missing.append(Skipped(path.as_posix(), "not found"))
    return list(dict.fromkeys(files)), missing


@dataclass
class FileOutcome:
    static: list[Warning] = field(default_factory=list)
    llm: list[Warning] = field(default_factory=list)
    skipped: list[Skipped] = field(default_factory=list)
    models: list[dict] = field(default_factory=list)
    failed: bool = False


def _skip_reason(diag: SkipDiagnostic) -> str:
    scope = f"llm {diag.problem.value}" if diag.problem else "llm"
    return f"{scope}: {diag.category}: {diag.reason}"


def lint_file(path: str, config: RunConfig, backend: CompletionBackend | None, dump_models: bool = False) -> FileOutcome:
    outcome = FileOutcome()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        outcome.skipped.append(Skipped(path, f"read error: {exc.__class__.__name__}"))
        outcome.failed = True
        return outcome
    module: SourceModule
    static_ok = False
    try:
        module = parse_source(path, text)
    except SourceSyntaxError as exc:
        module = SourceModule(path, text, (), max(1, len(split_lines(text))))
        if config.mode != "llm":
            outcome.skipped.append(Skipped(path, f"static: syntax error at line {exc.line}"))
    else:
        static_ok = True
        if config.mode != "llm":
            models = extract_circuits(module)
            outcome.static = run_all_checks(models, config.checks)
            if dump_models:
                outcome.models = models_to_json(models)
    llm_ok = False
    if config.mode != "static" and backend is not None:
        if not text.strip():
            llm_ok = True
        else:
            outcome.llm, diags = lint_file_llm(module, config.checks, backend, config.settings)
            outcome.skipped.extend(Skipped(path, _skip_reason(d)) for d in diags)
            llm_ok = len(diags) < len(config.checks) or not config.checks
    if config.mode == "static":
        outcome.failed = not static_ok
    elif config.mode == "llm":
        outcome.failed = not llm_ok
    else:
        outcome.failed = not (static_ok or llm_ok)
    return outcome


def lint_paths(
    paths: Sequence[str],
    config: RunConfig,
    backend: CompletionBackend | None = None,
    dump_models: list | None = None,
) -> tuple[LintReport, int]:
    """Lint every file and assemble a deterministic report plus the exit code."""
    started = time.perf_counter()
    files, missing = collect_files(paths)
    counter = _CountingBackend(backend) if backend is not None else None
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        outcomes = list(pool.map(lambda f: lint_file(f, config, counter, dump_models is not None), files))
    static = [w for o in outcomes for w in o.static]
    llm = [w for o in outcomes for w in o.llm]
    if config.mode == "hybrid":
        warnings = hybrid_merge(static, llm)
    else:
        warnings = sorted(static if config.mode == "static" else llm, key=report_sort_key)
    skipped = missing + [s for o in outcomes for s in o.skipped]
    skipped.sort(key=lambda s: (s.file, s.reason))
    if dump_models is not None:
        dump_models.extend(m for o in outcomes for m in o.models)
    report = LintReport(
        mode=config.mode,
        warnings=warnings,
        skipped=skipped,
        files_total=len(files) + len(missing),
        llm_requests=counter.count if counter else 0,
        duration=time.perf_counter() - started,
    )
    failures = len(missing) + sum(o.failed for o in outcomes)
    if report.files_total and failures == report.files_total:
        code = EXIT_ERROR
    else:
        code = EXIT_WARNINGS if warnings else EXIT_CLEAN
    return report, code


# --- configuration -------------------------------------------------------------

_CONF_KEYS = {
    "mode": str,
    "checks": str,
    "format": str,
    "llm-endpoint": str,
    "llm-model": str,
    "token-limit": int,
    "cassette": str,
    "jobs": int,
}


def read_config_file(path: str | os.PathLike) -> dict:
    """Key/value settings from a ``qulint.conf`` file (no section header needed)."""
    parser = configparser.ConfigParser(interpolation=None)
    text = Path(path).read_text(encoding="utf-8")
    parser.read_string("[qulint]\n" + text)
    values = {}
    for key, raw in parser["qulint"].items():
        key = key.replace("_", "-")
        if key not in _CONF_KEYS:
            raise ValueError(f"{path}: unknown setting '{key}'")
        values[key] = _CONF_KEYS[key](raw.strip())
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    conf_path = args.config or (CONFIG_FILE if Path(CONFIG_FILE).is_file() else None)
    conf = read_config_file(conf_path) if conf_path else {}

    def pick(flag, key, default):
        return flag if flag is not None else conf.get(key, default)

    return RunConfig(
        mode=pick(args.mode, "mode", "static"),
        checks=parse_kinds(pick(args.checks, "checks", None)),
        fmt=pick(args.format, "format", "text"),
        llm_endpoint=pick(args.llm_endpoint, "llm-endpoint", None),
        llm_model=pick(args.llm_model, "llm-model", DEFAULT_MODEL),
        token_limit=pick(args.token_limit, "token-limit", DEFAULT_TOKEN_LIMIT),
        cassette=pick(args.cassette, "cassette", None),
        record=args.record,
        jobs=pick(args.jobs, "jobs", 1),
        timings=not args.no_timings,
    )


def make_backend(config: RunConfig) -> tuple[CompletionBackend | None, Cassette | None]:
    if config.mode == "static":
        return None, None
    if config.record:
        if not (config.cassette and config.llm_endpoint):
            raise ValueError("--record needs both --cassette and --llm-endpoint")
        cassette = Cassette.load(config.cassette)
        return RecordingBackend(HttpBackend(config.llm_endpoint), cassette), cassette
    if config.cassette:
        if not Path(config.cassette).is_file():
            raise ValueError(f"cassette '{config.cassette}' does not exist")
        return ReplayBackend(Cassette.load(config.cassette)), None
    if config.llm_endpoint:
        return HttpBackend(config.llm_endpoint), None
    raise ValueError(f"mode '{config.mode}' needs --llm-endpoint or --cassette")


# --- commands ------------------------------------------------------------------


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_lint(args: argparse.Namespace) -> int:
    try:
        config = resolve_config(args)
        backend, cassette = make_backend(config)
    except (ValueError, OSError, configparser.Error) as exc:
        print(f"qulint: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    models: list | None = [] if args.dump_models else None
    report, code = lint_paths(args.paths, config, backend, models)
    if cassette is not None:
        cassette.save()
    if models is not None:
        Path(args.dump_models).write_text(json.dumps(models, indent=2) + "\n", encoding="utf-8")
    _write(report.render(config.fmt, config.timings), args.output)
    return code


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        policy = MatchPolicy.parse(args.match)
        annotations = load_annotations(args.annotations)
        detected = load_detected(json.loads(Path(args.report).read_text(encoding="utf-8")))
    except FormatError as exc:
        print(f"qulint: {args.annotations}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError, KeyError) as exc:
        print(f"qulint: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    result = per_problem_report(detected, annotations, policy)
    sys.stdout.write(result.to_text())
    if args.out:
        Path(args.out).write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
    return EXIT_CLEAN


def cmd_prompts_dump(args: argparse.Namespace) -> int:
    kinds = [ProblemKind.parse(args.problem)] if args.problem else list(ProblemKind)
    files: list[tuple[str, str]] = []
    if args.source:
        text = Path(args.source).read_text(encoding="utf-8")
        module = parse_source(args.source, text)
        for kind in kinds:
            try:
                prompt = build_prompt(kind, module, args.token_limit)
            except TokenLimitExceeded as exc:
                print(f"qulint: {kind.value}: {exc}", file=sys.stderr)
                continue
            files.append((f"{kind.value}.prompt.txt", prompt.text + "\n"))
    else:
        if not args.problem:
            files.append(("template.txt", load_template().text))
        for kind in kinds:
            files.append((f"descriptions/{kind.value}.txt", problem_description(kind).text + "\n"))
    if args.out:
        root = Path(args.out)
        for name, text in files:
            target = root / name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
    elif len(files) == 1:
        sys.stdout.write(files[0][1])
    else:
        for name, text in files:
            sys.stdout.write(f"==> {name} <==\n{text}")
    return EXIT_CLEAN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qulint", description="Lint Qiskit programs for quantum-specific problems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    lint = sub.add_parser("lint", help="lint files or directories")
    lint.add_argument("paths", nargs="*", help="Python files or directories")
    lint.add_argument("--mode", choices=MODES)
    lint.add_argument("--checks", help="comma-separated problem kinds, or 'all'")
    lint.add_argument("--format", choices=FORMATS)
    lint.add_argument("--output", "-o", help="write the report here instead of stdout")
    lint.add_argument("--llm-endpoint", help="chat-completions URL")
    lint.add_argument("--llm-model", help=f"model id (default {DEFAULT_MODEL})")
    lint.add_argument("--token-limit", type=int, help=f"prompt budget in tokens (default {DEFAULT_TOKEN_LIMIT})")
    lint.add_argument("--cassette", help="replay responses from this cassette")
    lint.add_argument("--record", action="store_true", help="call the endpoint and store answers in --cassette")
    lint.add_argument("--jobs", "-j", type=int, help="files analyzed in parallel")
    lint.add_argument("--dump-models", metavar="PATH", help="write extracted circuit models as JSON")
    lint.add_argument("--config", help=f"settings file (default ./{CONFIG_FILE} if present)")
    lint.add_argument("--no-timings", action="store_true", help="omit durations so reports are byte-stable")
    lint.set_defaults(func=cmd_lint)

    ev = sub.add_parser("eval", help="score a JSON lint report against annotations")
    ev.add_argument("--annotations", required=True, help="CSV with file,problem,line,label")
    ev.add_argument("--report", required=True, help="JSON report from 'qulint lint --format json'")
    ev.add_argument("--match", default="exact", help="exact, file or window:N (default exact)")
    ev.add_argument("--out", help="also write the metrics as JSON")
    ev.set_defaults(func=cmd_eval)

    prompts = sub.add_parser("prompts", help="inspect prompt data")
    psub = prompts.add_subparsers(dest="prompts_command", required=True)
    dump = psub.add_parser("dump", help="print the template and problem descriptions")
    dump.add_argument("--problem", help="only this problem kind")
    dump.add_argument("--out", help="write files into this directory")
    dump.add_argument("--source", help="instantiate full prompts for this file instead")
    dump.add_argument("--token-limit", type=int, default=DEFAULT_TOKEN_LIMIT)
    dump.set_defaults(func=cmd_prompts_dump)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.command == "prompts" and args.problem:
        try:
            ProblemKind.parse(args.problem)
        except ValueError as exc:
            parser.error(str(exc))
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

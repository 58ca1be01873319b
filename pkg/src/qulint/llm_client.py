"""Completion backends: live HTTP, cassette record/replay, and a scripted mock.

Every backend exposes ``complete(request) -> CompletionResponse`` and is safe to
share between threads.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence, Union

import httpx

log = logging.getLogger(__name__)

API_KEY_ENV = "QULINT_LLM_API_KEY"
DEFAULT_MODEL = "gpt-3.5-turbo"
DEFAULT_TEMPERATURE = 0.0
DEFAULT_TOKEN_LIMIT = 16385
DEFAULT_MAX_OUTPUT_TOKENS = 1024
DEFAULT_MAX_RETRIES = 3


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    @classmethod
    def for_prompt(
        cls,
        prompt: str,
        model_id: str = DEFAULT_MODEL,
        temperature: float = DEFAULT_TEMPERATURE,
        max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS,
    ) -> "CompletionRequest":
        """The whole prompt goes into a single user message."""
        return cls(model_id, (("user", prompt),), temperature, max_output_tokens)

    @property
    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "model": self.model_id,
                "messages": [[role, content] for role, content in self.messages],
                "temperature": float(self.temperature),
            },
            sort_keys=True,
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def summary(self) -> dict:
        """Credential-free description stored next to cassette entries."""
        return {
            "model": self.model_id,
            "temperature": float(self.temperature),
            "messages": [{"role": role, "chars": len(content)} for role, content in self.messages],
        }


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    usage: tuple[int, int] | None = None
    latency: float = 0.0


class CompletionError(Exception):
    """Base class for backend failures."""


class TokenLimitError(CompletionError):
    def __init__(self, message: str = "prompt exceeds the model context window"):
        super().__init__(message)


class TransportError(CompletionError):
    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


class RateLimited(CompletionError):
    def __init__(self, retry_after: float | None = None):
        self.retry_after = retry_after
        super().__init__(f"rate limited (retry after {retry_after}s)" if retry_after else "rate limited")


class CassetteMiss(CompletionError):
    def __init__(self, fingerprint: str):
        self.fingerprint = fingerprint
        super().__init__(f"no recorded response for request {fingerprint[:16]}")


class CompletionBackend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


class HttpBackend:
    """Chat-completions client with bounded retries and an in-flight cap."""

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        *,
        timeout: float = 120.0,
        max_retries: int = DEFAULT_MAX_RETRIES,
        backoff: float = 1.0,
        max_in_flight: int = 4,
        sleep: Callable[[float], None] = time.sleep,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.max_retries = max_retries
        self.backoff = backoff
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max(1, max_in_flight))
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def __repr__(self) -> str:
        return f"HttpBackend(endpoint={self.endpoint!r})"

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        return headers

    def _send_once(self, request: CompletionRequest) -> CompletionResponse:
        body = {
            "model": request.model_id,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        started = time.perf_counter()
        try:
            with self._slots:
                reply = self._client.post(self.endpoint, json=body, headers=self._headers())
        except httpx.TimeoutException as exc:
            raise TransportError("timeout", type(exc).__name__) from None
        except httpx.HTTPError as exc:
            raise TransportError("connection", type(exc).__name__) from None
        latency = time.perf_counter() - started
        if reply.status_code == 429:
            raise RateLimited(_retry_after(reply))
        if reply.status_code == 400 and "context_length" in reply.text:
            raise TokenLimitError()
        if reply.status_code >= 500:
            raise TransportError("server", f"HTTP {reply.status_code}")
        if reply.status_code >= 400:
            raise TransportError("client", f"HTTP {reply.status_code}")
        try:
            data = reply.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise TransportError("protocol", "unexpected response body") from None
        if not isinstance(text, str):
            raise TransportError("protocol", "message content is not text")
        usage = data.get("usage") or {}
        tokens = None
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            tokens = (int(usage["prompt_tokens"]), int(usage["completion_tokens"]))
        return CompletionResponse(text=text, usage=tokens, latency=latency)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        attempt = 0
        while True:
            try:
                return self._send_once(request)
            except TokenLimitError:
                raise
            except (RateLimited, TransportError) as exc:
                if isinstance(exc, TransportError) and exc.kind in ("client", "protocol"):
                    raise
                if attempt >= self.max_retries:
                    raise
                delay = self.backoff * (2**attempt)
                if isinstance(exc, RateLimited) and exc.retry_after is not None:
                    delay = max(delay, exc.retry_after)
                log.info("retrying request %s after %s (%.1fs)", request.fingerprint[:12], exc, delay)
                self._sleep(delay)
                attempt += 1


def _retry_after(reply: httpx.Response) -> float | None:
    value = reply.headers.get("Retry-After")
    try:
        return float(value) if value is not None else None
    except ValueError:
        return None


class Cassette:
    """Fingerprint-keyed store of recorded responses."""

    def __init__(self, entries: dict[str, dict] | None = None, path: Path | None = None):
        self.entries: dict[str, dict] = dict(entries or {})
        self.path = path
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Cassette":
        path = Path(path)
        if not path.exists():
            return cls(path=path)
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError(f"{path}: cassette must be a JSON object")
        return cls(data, path=path)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self.entries

    def lookup(self, request: CompletionRequest) -> CompletionResponse:
        fp = request.fingerprint
        with self._lock:
            entry = self.entries.get(fp)
        if entry is None:
            raise CassetteMiss(fp)
        return CompletionResponse(text=entry["response"])

    def put(self, request: CompletionRequest, response: CompletionResponse) -> None:
        with self._lock:
            self.entries[request.fingerprint] = {"request": request.summary(), "response": response.text}

    def dumps(self) -> str:
        with self._lock:
            return json.dumps(self.entries, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def save(self, path: str | os.PathLike | None = None) -> None:
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("cassette has no path")
        target.write_text(self.dumps(), encoding="utf-8")


class ReplayBackend:
    """Answers only from a cassette; unknown requests raise CassetteMiss."""

    def __init__(self, cassette: Cassette):
        self.cassette = cassette

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        return self.cassette.lookup(request)


class RecordingBackend:
    """Forwards to a live backend and stores every answer in a cassette."""

    def __init__(self, live: CompletionBackend, cassette: Cassette):
        self.live = live
        self.cassette = cassette

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        return record(request, self.live, self.cassette)


def record(request: CompletionRequest, live: CompletionBackend, cassette: Cassette) -> CompletionResponse:
    response = live.complete(request)
    cassette.put(request, response)
    return response


Script = Union[Sequence[Union[str, Exception]], Callable[[CompletionRequest], Union[str, Exception]]]


class ScriptedBackend:
    """Test double: answers from a list (in call order) or a function of the request.

    Exceptions in the script are raised instead of returned.  Every request is
    kept in ``requests``.
    """

    def __init__(self, script: Script):
        self._script = script
        self._index = 0
        self._lock = threading.Lock()
        self.requests: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            self.requests.append(request)
            if callable(self._script):
                item = None
            else:
                if self._index >= len(self._script):
                    raise TransportError("script", "scripted responses exhausted")
                item = self._script[self._index]
                self._index += 1
        if item is None:
            item = self._script(request)
        if isinstance(item, Exception):
            raise item
        return CompletionResponse(text=item)


@dataclass(frozen=True)
class LlmSettings:
    """Per-run request parameters shared by every prompt."""

    model_id: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    token_limit: int = DEFAULT_TOKEN_LIMIT

    def request(self, prompt: str) -> CompletionRequest:
        return CompletionRequest.for_prompt(prompt, self.model_id, self.temperature, self.max_output_tokens)


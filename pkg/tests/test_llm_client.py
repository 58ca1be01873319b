from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from qulint.llm_client import (
    Cassette,
    CassetteMiss,
    CompletionRequest,
    CompletionResponse,
    HttpBackend,
    RateLimited,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
    TokenLimitError,
    TransportError,
    record,
)

SECRET = "sk-test-secret-value"
STUB_TEXT = '{"problem": "DoubleMeas", "snippets": [], "lines": [], "explanations": []}'


class StubServer:
    """Local chat-completions endpoint that replays a queue of (status, body, headers)."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.seen: list[dict] = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                stub.seen.append(
                    {"path": self.path, "auth": self.headers.get("Authorization"), "body": json.loads(self.rfile.read(length))}
                )
                status, body, headers = stub.replies.pop(0) if len(stub.replies) > 1 else stub.replies[0]
                payload = body.encode() if isinstance(body, str) else json.dumps(body).encode()
                self.send_response(status)
                for key, value in headers.items():
                    self.send_header(key, value)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


def ok(text=STUB_TEXT):
    return (200, {"choices": [{"message": {"role": "assistant", "content": text}}], "usage": {"prompt_tokens": 10, "completion_tokens": 5}}, {})


def request(prompt="prompt") -> CompletionRequest:
    return CompletionRequest.for_prompt(prompt, model_id="test-model")


class Sleeps(list):
    def __call__(self, seconds):
        self.append(seconds)


def test_live_backend_returns_message_content():
    with StubServer([ok()]) as stub:
        backend = HttpBackend(stub.url, api_key=SECRET)
        response = backend.complete(request("hello"))
    assert response.text == STUB_TEXT
    assert response.usage == (10, 5)
    seen = stub.seen[0]
    assert seen["path"] == "/v1/chat/completions"
    assert seen["auth"] == f"Bearer {SECRET}"
    assert seen["body"]["model"] == "test-model"
    assert seen["body"]["messages"] == [{"role": "user", "content": "hello"}]
    assert seen["body"]["temperature"] == 0.0


def test_api_key_from_environment(monkeypatch):
    monkeypatch.setenv("QULINT_LLM_API_KEY", SECRET)
    with StubServer([ok()]) as stub:
        HttpBackend(stub.url).complete(request())
    assert stub.seen[0]["auth"] == f"Bearer {SECRET}"


def test_retries_server_errors_with_backoff(caplog):
    sleeps = Sleeps()
    with StubServer([(500, "oops", {}), (502, "bad", {}), ok()]) as stub, caplog.at_level(logging.DEBUG):
        backend = HttpBackend(stub.url, api_key=SECRET, sleep=sleeps)
        assert backend.complete(request()).text == STUB_TEXT
    assert sleeps == [1.0, 2.0]
    assert len(stub.seen) == 3
    assert SECRET not in caplog.text
    assert SECRET not in repr(backend)


def test_gives_up_after_three_retries():
    sleeps = Sleeps()
    with StubServer([(503, "down", {})]) as stub:
        with pytest.raises(TransportError) as info:
            HttpBackend(stub.url, sleep=sleeps).complete(request())
    assert info.value.kind == "server"
    assert len(stub.seen) == 4 and sleeps == [1.0, 2.0, 4.0]


def test_rate_limit_honours_retry_after():
    sleeps = Sleeps()
    with StubServer([(429, "slow down", {"Retry-After": "7"}), ok()]) as stub:
        HttpBackend(stub.url, sleep=sleeps).complete(request())
    assert sleeps == [7.0]


def test_rate_limit_surfaces_when_exhausted():
    with StubServer([(429, "slow down", {"Retry-After": "1"})]) as stub:
        with pytest.raises(RateLimited) as info:
            HttpBackend(stub.url, sleep=Sleeps(), max_retries=1).complete(request())
    assert info.value.retry_after == 1.0


def test_context_length_is_not_retried():
    body = {"error": {"code": "context_length_exceeded", "message": "too long"}}
    with StubServer([(400, body, {})]) as stub:
        with pytest.raises(TokenLimitError):
            HttpBackend(stub.url, sleep=Sleeps()).complete(request())
    assert len(stub.seen) == 1


def test_unexpected_body_is_a_protocol_error():
    with StubServer([(200, {"nothing": True}, {})]) as stub:
        with pytest.raises(TransportError) as info:
            HttpBackend(stub.url, sleep=Sleeps()).complete(request())
    assert info.value.kind == "protocol" and len(stub.seen) == 1


def test_connection_refused_is_transport_error():
    backend = HttpBackend("http://127.0.0.1:9/none", sleep=Sleeps(), max_retries=0, timeout=2)
    with pytest.raises(TransportError):
        backend.complete(request())


# --- fingerprints and cassettes -------------------------------------------------


def test_fingerprint_covers_model_messages_temperature():
    base = request("a")
    assert base.fingerprint == request("a").fingerprint
    assert base.fingerprint != request("b").fingerprint
    assert base.fingerprint != CompletionRequest.for_prompt("a", model_id="other").fingerprint
    assert base.fingerprint != CompletionRequest.for_prompt("a", model_id="test-model", temperature=0.5).fingerprint
    assert base.fingerprint == CompletionRequest.for_prompt("a", model_id="test-model", max_output_tokens=7).fingerprint


def test_replay_hit_is_byte_exact_and_miss_raises():
    cassette = Cassette()
    cassette.put(request("a"), CompletionResponse("exact é text\n"))
    replay = ReplayBackend(cassette)
    assert replay.complete(request("a")).text == "exact é text\n"
    with pytest.raises(CassetteMiss) as info:
        replay.complete(request("zzz"))
    assert info.value.fingerprint == request("zzz").fingerprint


def test_record_then_replay(tmp_path):
    path = tmp_path / "c.json"
    cassette = Cassette.load(path)
    live = ScriptedBackend(["first", "second", "third"])
    assert record(request("a"), live, cassette).text == "first"
    RecordingBackend(live, cassette).complete(request("b"))
    assert len(cassette) == 2
    RecordingBackend(live, cassette).complete(request("a"))
    assert len(cassette) == 2
    cassette.save()
    replay = ReplayBackend(Cassette.load(path))
    assert replay.complete(request("a")).text == "third"
    assert replay.complete(request("b")).text == "second"


def test_cassette_file_is_sorted_and_credential_free(tmp_path):
    cassette = Cassette()
    for prompt in ("zeta", "alpha", "mid"):
        cassette.put(request(prompt), CompletionResponse(prompt.upper()))
    path = tmp_path / "c.json"
    cassette.save(path)
    text = path.read_text()
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert text == cassette.dumps()
    entry = data[request("alpha").fingerprint]
    assert entry["response"] == "ALPHA"
    assert entry["request"]["model"] == "test-model"
    assert "Bearer" not in text and SECRET not in text


def test_replay_is_order_independent_under_concurrency():
    cassette = Cassette()
    prompts = [f"p{i}" for i in range(50)]
    for p in prompts:
        cassette.put(request(p), CompletionResponse(f"answer-{p}"))
    replay = ReplayBackend(cassette)
    order = prompts[::-1] + prompts
    with ThreadPoolExecutor(8) as pool:
        results = list(pool.map(lambda p: (p, replay.complete(request(p)).text), order))
    assert all(text == f"answer-{p}" for p, text in results)


def test_scripted_backend_records_and_raises():
    backend = ScriptedBackend(["one", TransportError("timeout")])
    assert backend.complete(request("x")).text == "one"
    with pytest.raises(TransportError):
        backend.complete(request("y"))
    with pytest.raises(TransportError):
        backend.complete(request("z"))
    assert [r.messages[0][1] for r in backend.requests] == ["x", "y", "z"]

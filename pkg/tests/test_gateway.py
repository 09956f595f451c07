import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from mktcopilot.errors import ConfigError
from mktcopilot.gateway import (
    CompletionRequest,
    Gateway,
    GatewayError,
    ModelEndpoint,
    ReplayMiss,
    ScriptGap,
    ScriptRule,
    Transcript,
    TranscriptEntry,
    request_fingerprint,
    scripted_model,
)


class TestScriptedModel:
    def test_substring_rule(self):
        model = scripted_model([{"substring": "SQL", "response": "SELECT 1"}])
        req = CompletionRequest(prompt="write some SQL please")
        fp = request_fingerprint(model.name, req)
        assert model.respond(req, fp) == "SELECT 1"

    def test_no_match_raises(self):
        model = scripted_model([{"substring": "SQL", "response": "SELECT 1"}])
        req = CompletionRequest(prompt="hello")
        with pytest.raises(ScriptGap):
            model.respond(req, request_fingerprint(model.name, req))

    def test_first_match_wins(self):
        model = scripted_model([
            {"substring": "a", "response": "first"},
            {"substring": "a", "response": "second"},
        ])
        req = CompletionRequest(prompt="a")
        assert model.respond(req, request_fingerprint(model.name, req)) == "first"

    def test_fingerprint_rule(self):
        req = CompletionRequest(prompt="whatever")
        fp = request_fingerprint("m", req)
        model = scripted_model([{"fingerprint": fp, "response": "42"}], name="m")
        assert Gateway({"m": model}).complete("m", req) == "42"

    def test_empty_rules_rejected(self):
        with pytest.raises(ConfigError):
            scripted_model([])


class TestFingerprint:
    def test_stable_across_prompt_forms(self):
        a = CompletionRequest(prompt="hi")
        b = CompletionRequest(prompt=[{"role": "user", "content": "hi"}])
        assert request_fingerprint("e", a) == request_fingerprint("e", b)

    def test_sensitive_to_endpoint_and_budget(self):
        req = CompletionRequest(prompt="hi")
        assert request_fingerprint("e1", req) != request_fingerprint("e2", req)
        other = CompletionRequest(prompt="hi", max_output_tokens=5)
        assert request_fingerprint("e1", req) != request_fingerprint("e1", other)

    def test_empty_prompt_rejected(self):
        with pytest.raises(ConfigError):
            CompletionRequest(prompt="").messages()


class TestReplay:
    def test_replay_hit(self):
        req = CompletionRequest(prompt="q")
        fp = request_fingerprint("m", req)
        t = Transcript()
        t.append(TranscriptEntry(fingerprint=fp, response="recorded", latency_ms=1.0, endpoint="m"))
        gw = Gateway({"m": scripted_model([{"substring": "q", "response": "live"}], name="m")},
                     mode="replay", transcript=t)
        assert gw.complete("m", req) == "recorded"

    def test_replay_miss(self):
        gw = Gateway({}, mode="replay", transcript=Transcript())
        with pytest.raises(ReplayMiss):
            gw.complete(scripted_model([{"substring": "x", "response": "y"}]), CompletionRequest(prompt="x"))

    def test_replay_requires_transcript(self):
        with pytest.raises(ConfigError):
            Gateway({}, mode="replay")

    def test_transcript_file_roundtrip(self, tmp_path):
        t = Transcript()
        t.append(TranscriptEntry(fingerprint="f1", response="r1\nmultiline", latency_ms=2.5, endpoint="e"))
        t.append(TranscriptEntry(fingerprint="f2", response="r2", latency_ms=0.1, endpoint="e"))
        path = tmp_path / "t.jsonl"
        t.save(path)
        loaded = Transcript.load(path)
        assert [e.fingerprint for e in loaded.entries] == ["f1", "f2"]
        assert loaded.lookup("f1").response == "r1\nmultiline"

    def test_duplicate_fingerprint_rejected(self):
        t = Transcript()
        t.append(TranscriptEntry(fingerprint="f", response="a", latency_ms=0, endpoint="e"))
        with pytest.raises(ConfigError):
            t.append(TranscriptEntry(fingerprint="f", response="b", latency_ms=0, endpoint="e"))


class _ChatStub(BaseHTTPRequestHandler):
    calls = 0
    fail_first = 0

    def do_POST(self):
        cls = type(self)
        cls.calls += 1
        if cls.fail_first > 0:
            cls.fail_first -= 1
            self.send_response(503)
            self.end_headers()
            return
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        reply = {"choices": [{"message": {"role": "assistant", "content": f"echo:{body['messages'][-1]['content']}"}}]}
        payload = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def chat_server():
    _ChatStub.calls = 0
    _ChatStub.fail_first = 0
    server = HTTPServer(("127.0.0.1", 0), _ChatStub)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


class TestHttpEndpoint:
    def test_completes(self, chat_server):
        ep = ModelEndpoint(name="stub", base_url=chat_server)
        gw = Gateway({"stub": ep})
        assert gw.complete("stub", CompletionRequest(prompt="hello")) == "echo:hello"

    def test_record_dedups_identical_requests(self, chat_server):
        ep = ModelEndpoint(name="stub", base_url=chat_server)
        gw = Gateway({"stub": ep}, mode="record")
        req = CompletionRequest(prompt="same")
        first = gw.complete("stub", req)
        second = gw.complete("stub", req)
        assert first == second == "echo:same"
        assert _ChatStub.calls == 1
        assert len(gw.transcript) == 1

    def test_nonzero_temperature_not_dedupped(self, chat_server):
        ep = ModelEndpoint(name="stub", base_url=chat_server)
        gw = Gateway({"stub": ep}, mode="record")
        req = CompletionRequest(prompt="same", temperature=0.7)
        gw.complete("stub", req)
        gw.complete("stub", req)
        assert _ChatStub.calls == 2

    def test_retries_until_success(self, chat_server):
        _ChatStub.fail_first = 2
        ep = ModelEndpoint(name="stub", base_url=chat_server, max_retries=3, backoff=0.0)
        gw = Gateway({"stub": ep})
        assert gw.complete("stub", CompletionRequest(prompt="x")) == "echo:x"
        assert _ChatStub.calls == 3

    def test_retries_exhausted(self, chat_server):
        _ChatStub.fail_first = 99
        ep = ModelEndpoint(name="stub", base_url=chat_server, max_retries=1, backoff=0.0)
        gw = Gateway({"stub": ep})
        with pytest.raises(GatewayError) as err:
            gw.complete("stub", CompletionRequest(prompt="x"))
        assert "stub" in str(err.value)

    def test_missing_credential(self):
        ep = ModelEndpoint(name="locked", base_url="http://127.0.0.1:1", auth_ref="NO_SUCH_ENV_VAR_XYZ")
        gw = Gateway({"locked": ep})
        with pytest.raises(GatewayError) as err:
            gw.complete("locked", CompletionRequest(prompt="x"))
        assert "NO_SUCH_ENV_VAR_XYZ" in str(err.value)

    def test_unknown_endpoint(self):
        with pytest.raises(GatewayError):
            Gateway({}).complete("ghost", CompletionRequest(prompt="x"))


def test_replay_of_recorded_run_is_identical(chat_server):
    ep = ModelEndpoint(name="stub", base_url=chat_server)
    record = Gateway({"stub": ep}, mode="record")
    prompts = ["one", "two", "three"]
    recorded = [record.complete("stub", CompletionRequest(prompt=p)) for p in prompts]

    replay = Gateway({"stub": ep}, mode="replay", transcript=record.transcript)
    replayed = [replay.complete("stub", CompletionRequest(prompt=p)) for p in prompts]
    assert recorded == replayed

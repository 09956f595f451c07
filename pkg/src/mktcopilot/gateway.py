"""Single seam for model completions: remote chat endpoints, a deterministic
scripted model, and transcript record/replay so any run can be reproduced
offline byte for byte."""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import ConfigError

DEFAULT_MAX_OUTPUT_TOKENS = 1024


class GatewayError(Exception):
    """Endpoint unreachable or misconfigured after retries."""


class ReplayMiss(Exception):
    """Replay mode and the request is not in the transcript."""


class ScriptGap(Exception):
    """No scripted rule matched the request."""


@dataclass
class ModelEndpoint:
    name: str
    base_url: str
    auth_ref: str | None = None
    timeout: float = 30.0
    max_retries: int = 3
    max_concurrency: int = 4
    backoff: float = 0.5

    def __post_init__(self):
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be > 0, got {self.timeout}")


@dataclass
class CompletionRequest:
    prompt: str | list[dict] = ""
    temperature: float = 0.0
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    def messages(self) -> list[dict]:
        if isinstance(self.prompt, str):
            if not self.prompt:
                raise ConfigError("prompt must be non-empty")
            return [{"role": "user", "content": self.prompt}]
        if not self.prompt:
            raise ConfigError("message list must be non-empty")
        return [{"role": m["role"], "content": m["content"]} for m in self.prompt]

    def text(self) -> str:
        """Flattened prompt text, used by substring script matchers."""
        return "\n".join(m["content"] for m in self.messages())


def request_fingerprint(endpoint_name: str, req: CompletionRequest) -> str:
    payload = json.dumps(
        {
            "endpoint": endpoint_name,
            "messages": req.messages(),
            "max_output_tokens": req.max_output_tokens,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class TranscriptEntry:
    fingerprint: str
    response: str
    latency_ms: float
    endpoint: str


class Transcript:
    """Append-only record of completed requests, keyed by fingerprint."""

    def __init__(self) -> None:
        self.entries: list[TranscriptEntry] = []
        self._by_fingerprint: dict[str, TranscriptEntry] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, fingerprint: str) -> TranscriptEntry | None:
        return self._by_fingerprint.get(fingerprint)

    def append(self, entry: TranscriptEntry) -> None:
        if entry.fingerprint in self._by_fingerprint:
            raise ConfigError(f"duplicate fingerprint in transcript: {entry.fingerprint}")
        self.entries.append(entry)
        self._by_fingerprint[entry.fingerprint] = entry

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(json.dumps({
                    "fingerprint": e.fingerprint,
                    "response": e.response,
                    "latency_ms": e.latency_ms,
                    "endpoint": e.endpoint,
                }, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        t = cls()
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                t.append(TranscriptEntry(
                    fingerprint=rec["fingerprint"],
                    response=rec["response"],
                    latency_ms=rec["latency_ms"],
                    endpoint=rec["endpoint"],
                ))
        return t


@dataclass
class ScriptRule:
    matcher: str
    response: str
    by_fingerprint: bool = False

    def matches(self, req: CompletionRequest, fingerprint: str) -> bool:
        if self.by_fingerprint:
            return self.matcher == fingerprint
        return self.matcher in req.text()


class ScriptedModel:
    """Deterministic stand-in endpoint: first matching rule wins."""

    def __init__(self, name: str, rules: list[ScriptRule]) -> None:
        if not rules:
            raise ConfigError("scripted model needs at least one rule")
        self.name = name
        self.rules = list(rules)

    def respond(self, req: CompletionRequest, fingerprint: str) -> str:
        for rule in self.rules:
            if rule.matches(req, fingerprint):
                return rule.response
        raise ScriptGap(f"{self.name}: no rule matched the request")


def scripted_model(rules: list[dict | ScriptRule], name: str = "scripted") -> ScriptedModel:
    parsed = []
    for r in rules:
        if isinstance(r, ScriptRule):
            parsed.append(r)
        elif "substring" in r:
            parsed.append(ScriptRule(matcher=r["substring"], response=r["response"]))
        elif "fingerprint" in r:
            parsed.append(ScriptRule(matcher=r["fingerprint"], response=r["response"], by_fingerprint=True))
        else:
            raise ConfigError(f"rule needs a substring or fingerprint matcher: {r}")
    return ScriptedModel(name, parsed)


class Gateway:
    """Routes completion requests to named endpoints.

    Modes:
      live    - call endpoints directly, keep no transcript
      record  - call endpoints, append to the transcript; identical
                temperature-0 requests are served from the transcript
      replay  - serve from the transcript only; a miss raises ReplayMiss
                and never falls through to the network
    """

    def __init__(self, endpoints: dict[str, ModelEndpoint | ScriptedModel] | None = None,
                 mode: str = "live", transcript: Transcript | None = None) -> None:
        if mode not in ("live", "record", "replay"):
            raise ConfigError(f"unknown gateway mode: {mode}")
        if mode == "replay" and transcript is None:
            raise ConfigError("replay mode requires a transcript")
        self.endpoints: dict[str, ModelEndpoint | ScriptedModel] = dict(endpoints or {})
        self.mode = mode
        self.transcript = transcript if transcript is not None else Transcript()
        self._lock = threading.Lock()
        self._semaphores: dict[str, threading.Semaphore] = {}

    def register(self, endpoint: ModelEndpoint | ScriptedModel) -> None:
        if endpoint.name in self.endpoints:
            raise ConfigError(f"endpoint name already registered: {endpoint.name}")
        self.endpoints[endpoint.name] = endpoint

    def _resolve(self, endpoint) -> ModelEndpoint | ScriptedModel:
        if isinstance(endpoint, (ModelEndpoint, ScriptedModel)):
            return endpoint
        try:
            return self.endpoints[endpoint]
        except KeyError:
            raise GatewayError(f"unknown endpoint: {endpoint}") from None

    def complete(self, endpoint, req: CompletionRequest) -> str:
        ep = self._resolve(endpoint)
        fingerprint = request_fingerprint(ep.name, req)

        if self.mode == "replay":
            entry = self.transcript.lookup(fingerprint)
            if entry is None:
                raise ReplayMiss(f"no transcript entry for {ep.name} fingerprint {fingerprint[:12]}")
            return entry.response

        if self.mode == "record" and req.temperature == 0:
            entry = self.transcript.lookup(fingerprint)
            if entry is not None:
                return entry.response

        started = time.perf_counter()
        if isinstance(ep, ScriptedModel):
            response = ep.respond(req, fingerprint)
        else:
            response = self._call_http(ep, req)
        latency_ms = (time.perf_counter() - started) * 1000.0

        if self.mode == "record":
            with self._lock:
                if self.transcript.lookup(fingerprint) is None:
                    self.transcript.append(TranscriptEntry(
                        fingerprint=fingerprint,
                        response=response,
                        latency_ms=latency_ms,
                        endpoint=ep.name,
                    ))
        return response

    def _semaphore(self, ep: ModelEndpoint) -> threading.Semaphore:
        with self._lock:
            if ep.name not in self._semaphores:
                self._semaphores[ep.name] = threading.Semaphore(max(1, ep.max_concurrency))
            return self._semaphores[ep.name]

    def _call_http(self, ep: ModelEndpoint, req: CompletionRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if ep.auth_ref:
            key = os.environ.get(ep.auth_ref)
            if not key:
                raise GatewayError(f"{ep.name}: credential env var {ep.auth_ref} is not set")
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": ep.name,
            "messages": req.messages(),
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        last_error = None
        with self._semaphore(ep):
            for attempt in range(ep.max_retries + 1):
                try:
                    resp = requests.post(ep.base_url, json=body, headers=headers, timeout=ep.timeout)
                    if 200 <= resp.status_code < 300:
                        return self._parse_chat_response(ep, resp.json())
                    last_error = f"HTTP {resp.status_code}"
                except requests.RequestException as exc:
                    last_error = str(exc)
                if attempt < ep.max_retries:
                    time.sleep(ep.backoff * (2 ** attempt))
        raise GatewayError(f"{ep.name}: retries exhausted ({ep.max_retries + 1} attempts): {last_error}")

    @staticmethod
    def _parse_chat_response(ep: ModelEndpoint, body) -> str:
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError(f"{ep.name}: malformed chat response: {exc}") from exc

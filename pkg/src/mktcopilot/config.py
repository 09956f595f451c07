"""Service configuration: model endpoints, embedding provider, storage paths,
and the numeric defaults every subsystem shares."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

# Top-level string keys that may be overridden by an uppercased env var
# of the same name (e.g. LISTEN_ADDRESS).
ENV_OVERRIDABLE = (
    "data_dir", "corpus_dir", "index_path", "listen_address",
    "router_model", "answer_model", "transcript_mode", "transcript_path",
)

DEFAULT_DEFAULTS = {
    "k": 4,
    "max_chunk_tokens": 500,
    "n_shots": 5,
    "factor_threshold": 5,
    "eval_count": 1000,
}

_DEFAULT_RANGES = {
    "k": (1, 1000),
    "max_chunk_tokens": (1, 100_000),
    "n_shots": (0, 100),
    "factor_threshold": (0, 100),
    "eval_count": (1, 10_000_000),
}


@dataclass
class ServiceConfig:
    data_dir: str = "data"
    corpus_dir: str | None = None
    index_path: str | None = None
    listen_address: str = "127.0.0.1:8080"
    embedding: dict = field(default_factory=lambda: {"provider": "mock", "dimension": 64})
    endpoints: list[dict] = field(default_factory=list)
    router_model: str = ""
    answer_model: str = ""
    defaults: dict = field(default_factory=dict)
    transcript_mode: str = "off"
    transcript_path: str | None = None
    rephrase_table_answers: bool = False
    sql_chat_schema: str | None = None
    ui_dir: str | None = None

    def __post_init__(self):
        if self.corpus_dir is None:
            self.corpus_dir = str(Path(self.data_dir) / "corpus")
        if self.index_path is None:
            self.index_path = str(Path(self.data_dir) / "index.vidx")
        merged = dict(DEFAULT_DEFAULTS)
        merged.update(self.defaults)
        self.defaults = merged
        for key, (low, high) in _DEFAULT_RANGES.items():
            value = self.defaults[key]
            if not isinstance(value, int) or not low <= value <= high:
                raise ConfigError(f"defaults.{key}={value!r} outside [{low}, {high}]")
        if self.transcript_mode not in ("off", "record", "replay"):
            raise ConfigError(f"transcript_mode must be off, record, or replay, "
                              f"got {self.transcript_mode!r}")
        if self.transcript_mode == "replay" and not self.transcript_path:
            raise ConfigError("transcript_mode=replay requires transcript_path")
        names = [e.get("name") for e in self.endpoints]
        if len(names) != len(set(names)):
            raise ConfigError("endpoint names must be unique")

    @property
    def host(self) -> str:
        return self.listen_address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        try:
            return int(self.listen_address.rsplit(":", 1)[1])
        except (IndexError, ValueError):
            raise ConfigError(f"listen_address must be host:port, got {self.listen_address!r}")

    def degraded_endpoints(self) -> list[str]:
        """HTTP endpoints whose credential env var is not resolvable."""
        degraded = []
        for spec in self.endpoints:
            if spec.get("kind", "http") == "http":
                ref = spec.get("auth_ref")
                if ref and not os.environ.get(ref):
                    degraded.append(spec["name"])
        return degraded


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Build a ServiceConfig from an optional JSON file plus env overrides."""
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        with Path(path).open(encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    for key in ENV_OVERRIDABLE:
        value = env.get(key.upper())
        if value:
            raw[key] = value
    known = set(ServiceConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return ServiceConfig(**raw)

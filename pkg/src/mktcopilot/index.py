"""Embedding providers and an exact cosine top-k vector index.

The index is a flat exhaustive scan: corpus sizes here are a few thousand
chunks, so exactness and determinism beat approximate structures. Vectors
are 32-bit floats so on-disk persistence can be bit-exact.
"""

from __future__ import annotations

import hashlib
import math
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .corpus import _TOKEN_RE
from .errors import ConfigError

INDEX_MAGIC = b"VIDX"
INDEX_VERSION = 1
DEFAULT_MOCK_DIMENSION = 64


class DimensionError(Exception):
    """Vector dimensions disagree."""


class DegenerateVector(Exception):
    """Zero-norm (or token-free) input where a direction is required."""


class IndexFormatError(Exception):
    """Index file is corrupt, truncated, or has the wrong magic/version."""


class ProviderError(Exception):
    """Embedding provider unreachable after retries."""


class ProviderContractViolation(Exception):
    """Provider returned malformed or dimension-inconsistent vectors."""


@dataclass
class EmbeddingRecord:
    chunk_id: str
    vector: np.ndarray  # 1-D float32

    def __eq__(self, other):
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return self.chunk_id == other.chunk_id and np.array_equal(
            self.vector.view(np.uint32), other.vector.view(np.uint32)
        )


@dataclass
class VectorIndex:
    dimension: int
    records: list[EmbeddingRecord]
    provider_tag: str
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def build(cls, chunk_ids: list[str], vectors: list[np.ndarray], provider_tag: str) -> "VectorIndex":
        if not provider_tag:
            raise ConfigError("provider_tag must be non-empty")
        if len(chunk_ids) != len(vectors):
            raise ConfigError("chunk_ids and vectors length mismatch")
        if len(set(chunk_ids)) != len(chunk_ids):
            raise ConfigError("duplicate chunk_id in index")
        records = []
        dimension = 0
        for cid, vec in zip(chunk_ids, vectors):
            vec = as_vector(vec)
            if dimension == 0:
                dimension = vec.shape[0]
            elif vec.shape[0] != dimension:
                raise DimensionError(f"{cid}: dimension {vec.shape[0]} != {dimension}")
            if not np.isfinite(vec).all():
                raise DegenerateVector(f"{cid}: non-finite component")
            if float(np.linalg.norm(vec.astype(np.float64))) == 0.0:
                raise DegenerateVector(f"{cid}: zero norm")
            records.append(EmbeddingRecord(chunk_id=cid, vector=vec))
        return cls(dimension=dimension, records=records, provider_tag=provider_tag)

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.records:
                self._matrix = np.stack([r.vector for r in self.records]).astype(np.float64)
            else:
                self._matrix = np.zeros((0, self.dimension), dtype=np.float64)
        return self._matrix

    def __eq__(self, other):
        if not isinstance(other, VectorIndex):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.provider_tag == other.provider_tag
            and self.records == other.records
        )


def as_vector(values) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1 or vec.shape[0] < 1:
        raise DimensionError(f"expected a 1-D vector, got shape {vec.shape}")
    return vec


def _token_bucket(token: str, dimension: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dimension


class MockEmbedder:
    """Deterministic offline embedder: a hashed token-count profile,
    normalized to unit length. Identical texts always map to identical
    vectors, so the whole evaluation stack can run with zero network."""

    def __init__(self, dimension: int = DEFAULT_MOCK_DIMENSION) -> None:
        if dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension
        self.tag = f"mock-{dimension}"

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            counts = np.zeros(self.dimension, dtype=np.float32)
            tokens = _TOKEN_RE.findall(text)
            if not tokens:
                raise DegenerateVector("text has no tokens to embed")
            for tok in tokens:
                counts[_token_bucket(tok, self.dimension)] += np.float32(1.0)
            norm = np.float32(np.linalg.norm(counts.astype(np.float64)))
            out.append((counts / norm).astype(np.float32))
        return out


class HttpEmbedder:
    """Remote provider speaking the common embeddings wire shape:
    POST {"input": [...texts], "model": name} -> per-input float arrays."""

    def __init__(self, url: str, model: str, api_key_env: str | None = None,
                 timeout: float = 30.0, max_retries: int = 3, backoff: float = 0.5) -> None:
        self.url = url
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.tag = model

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        import os

        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise ProviderError(f"credential env var {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        payload = {"input": texts, "model": self.model}
        last_error = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = requests.post(self.url, json=payload, headers=headers, timeout=self.timeout)
                if 200 <= resp.status_code < 300:
                    return self._parse(resp.json(), len(texts))
                last_error = f"HTTP {resp.status_code}"
            except requests.RequestException as exc:
                last_error = str(exc)
            if attempt < self.max_retries:
                time.sleep(self.backoff * (2 ** attempt))
        raise ProviderError(f"{self.url}: retries exhausted ({self.max_retries + 1} attempts): {last_error}")

    def _parse(self, body, expected: int) -> list[np.ndarray]:
        if isinstance(body, dict) and "data" in body:
            arrays = [item.get("embedding") for item in body["data"]]
        elif isinstance(body, dict) and "embeddings" in body:
            arrays = body["embeddings"]
        elif isinstance(body, list):
            arrays = body
        else:
            raise ProviderContractViolation(f"unrecognized response shape: {type(body).__name__}")
        if len(arrays) != expected or any(a is None for a in arrays):
            raise ProviderContractViolation(f"expected {expected} vectors, got {len(arrays)}")
        vectors = [as_vector(a) for a in arrays]
        dims = {v.shape[0] for v in vectors}
        if len(dims) > 1:
            raise ProviderContractViolation(f"dimension mismatch across batch: {sorted(dims)}")
        return vectors


def embed_texts(texts: list[str], provider) -> list[np.ndarray]:
    if any(not t for t in texts):
        raise ConfigError("texts must be non-empty strings")
    vectors = provider.embed(texts)
    dims = {v.shape[0] for v in vectors}
    if len(dims) > 1:
        raise ProviderContractViolation(f"dimension mismatch across batch: {sorted(dims)}")
    return vectors


def cosine_similarity(a, b) -> float:
    a = as_vector(a).astype(np.float64)
    b = as_vector(b).astype(np.float64)
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVector("zero-norm vector has no direction")
    return max(-1.0, min(1.0, float(np.dot(a, b)) / (na * nb)))


def top_k(index: VectorIndex, query, k: int) -> list[tuple[str, float]]:
    """Exact top-k by cosine similarity, ties broken by chunk_id ascending."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if not index.records:
        return []
    q = as_vector(query).astype(np.float64)
    if q.shape[0] != index.dimension:
        raise DimensionError(f"query dimension {q.shape[0]} != index dimension {index.dimension}")
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        raise DegenerateVector("zero-norm query")
    matrix = index.matrix()
    norms = np.linalg.norm(matrix, axis=1)
    scores = np.clip((matrix @ q) / (norms * qnorm), -1.0, 1.0)
    order = sorted(range(len(index.records)),
                   key=lambda i: (-scores[i], index.records[i].chunk_id))
    return [(index.records[i].chunk_id, float(scores[i])) for i in order[:k]]


def save_index(index: VectorIndex, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<III", INDEX_VERSION, index.dimension, len(index.records)))
        for rec in index.records:
            encoded = rec.chunk_id.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack(f"<{index.dimension}f", *rec.vector.tolist()))
    meta = path.with_suffix(".meta")
    meta.write_text(
        f"provider_tag={index.provider_tag}\nbuilt_at={time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}\n",
        encoding="utf-8",
    )


def load_index(path: str | Path) -> VectorIndex:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IndexFormatError(f"cannot read {path}: {exc}") from exc
    view = memoryview(blob)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise IndexFormatError(f"truncated index file at byte {pos}")
        out = view[pos:pos + n]
        pos += n
        return out

    if bytes(take(4)) != INDEX_MAGIC:
        raise IndexFormatError("bad magic bytes")
    version, dimension, count = struct.unpack("<III", take(12))
    if version != INDEX_VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    if dimension < 1:
        raise IndexFormatError(f"invalid dimension {dimension}")
    records = []
    for _ in range(count):
        (id_len,) = struct.unpack("<I", take(4))
        chunk_id = bytes(take(id_len)).decode("utf-8")
        vec = np.frombuffer(take(4 * dimension), dtype="<f4").astype(np.float32)
        records.append(EmbeddingRecord(chunk_id=chunk_id, vector=vec))
    if pos != len(view):
        raise IndexFormatError(f"{len(view) - pos} trailing bytes after last record")
    meta = path.with_suffix(".meta")
    if not meta.exists():
        raise IndexFormatError(f"missing sidecar {meta.name}")
    provider_tag = ""
    for line in meta.read_text(encoding="utf-8").splitlines():
        if line.startswith("provider_tag="):
            provider_tag = line.split("=", 1)[1]
    if not provider_tag:
        raise IndexFormatError("sidecar missing provider_tag")
    return VectorIndex(dimension=dimension, records=records, provider_tag=provider_tag)

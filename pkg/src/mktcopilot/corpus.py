"""Corpus ingestion: fetch documents, count tokens, and cut retrieval chunks.

The tokenizer is intentionally model-free: a token is a maximal run of
alphanumeric characters, or a single non-whitespace symbol. Whitespace only
separates. Anything that needs a model-specific tokenizer can swap one in
through the ``tokenizer`` seam on the chunker.
"""

from __future__ import annotations

import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Iterable

import requests

from .errors import ConfigError

DEFAULT_MAX_CHUNK_TOKENS = 500

# Maximal alphanumeric run, or one non-whitespace symbol. Underscore is a
# symbol here, not a word character.
_TOKEN_RE = re.compile(r"[^\W_]+|[^\w\s]|_", re.UNICODE)
_PARA_SPLIT_RE = re.compile(r"\n\s*\n")
_MARKUP_RE = re.compile(r"<[a-zA-Z/!][^>]*>")

_BLOCK_TAGS = {
    "p", "div", "br", "li", "ul", "ol", "dl", "dt", "dd",
    "h1", "h2", "h3", "h4", "h5", "h6",
    "table", "thead", "tbody", "tr", "th", "td",
    "section", "article", "aside", "header", "footer", "nav", "main",
    "blockquote", "pre", "hr", "title", "figure", "figcaption", "form",
}


class FetchError(Exception):
    """Origin could not be fetched: network failure or non-2xx status."""


class EmptyDocument(Exception):
    """No text remains after markup stripping and whitespace trimming."""


@dataclass
class SourceDocument:
    doc_id: str
    origin: str
    text: str
    fetched_at: float


@dataclass
class DocumentChunk:
    doc_id: str
    chunk_index: int
    chunk_id: str
    text: str
    token_count: int


@dataclass
class IngestStats:
    documents: int
    chunks: int
    errors: list[tuple[str, str]] = field(default_factory=list)


def count_tokens(text: str) -> int:
    return len(_TOKEN_RE.findall(text))


def token_spans(text: str) -> list[tuple[int, int]]:
    """Character-offset (start, end) span of every token, in order."""
    return [(m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


class _TextExtractor(HTMLParser):
    """Collects text content, dropping script/style bodies and turning
    block-element boundaries into paragraph breaks."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style"):
            self._skip += 1
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n\n")

    def handle_endtag(self, tag):
        if tag in ("script", "style"):
            self._skip = max(0, self._skip - 1)
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n\n")

    def handle_data(self, data):
        if not self._skip:
            self.parts.append(data)


def strip_markup(raw: str) -> str:
    """Strip tags and normalize whitespace.

    Within a paragraph, consecutive whitespace collapses to one space.
    Block-element boundaries and blank lines become paragraph breaks
    (a single blank line), so chunking can still prefer them.
    """
    if _MARKUP_RE.search(raw):
        extractor = _TextExtractor()
        extractor.feed(raw)
        extractor.close()
        text = "".join(extractor.parts)
    else:
        text = raw
    paragraphs = [" ".join(p.split()) for p in _PARA_SPLIT_RE.split(text)]
    return "\n\n".join(p for p in paragraphs if p)


def fetch_document(origin: str, doc_id: str, timeout: float = 30.0) -> SourceDocument:
    """Fetch one origin into a SourceDocument.

    ``origin`` is treated as a URL when it carries an http(s) scheme and as
    an inline text payload otherwise.
    """
    if origin.startswith(("http://", "https://")):
        try:
            resp = requests.get(origin, timeout=timeout)
        except requests.RequestException as exc:
            raise FetchError(f"{origin}: {exc}") from exc
        if not 200 <= resp.status_code < 300:
            raise FetchError(f"{origin}: HTTP {resp.status_code}")
        raw = resp.text
        stored_origin = origin
    else:
        raw = origin
        stored_origin = f"inline:{doc_id}"
    text = strip_markup(raw)
    if not text.strip():
        raise EmptyDocument(doc_id)
    return SourceDocument(doc_id=doc_id, origin=stored_origin, text=text, fetched_at=time.time())


def _gap_level(text: str, spans: list[tuple[int, int]], i: int) -> int:
    """Break preference for the gap after token i: 2 paragraph, 1 sentence, 0 none."""
    gap = text[spans[i][1]:spans[i + 1][0]]
    if "\n" in gap and _PARA_SPLIT_RE.search(gap):
        return 2
    if text[spans[i][0]:spans[i][1]] in (".", "!", "?") and gap.strip() == "" and gap:
        return 1
    return 0


def chunk_document(
    doc: SourceDocument,
    max_chunk_tokens: int = DEFAULT_MAX_CHUNK_TOKENS,
    tokenizer: Callable[[str], list[tuple[int, int]]] = token_spans,
) -> list[DocumentChunk]:
    """Greedy chunker. Packs as many tokens as fit, and when a split is
    forced prefers the last paragraph break in the window, then the last
    sentence break, then a hard split at the window edge. Splits always land
    on token boundaries, so concatenating the chunks' token sequences
    reproduces the document's token sequence exactly.
    """
    if max_chunk_tokens < 1:
        raise ConfigError(f"max_chunk_tokens must be >= 1, got {max_chunk_tokens}")
    spans = tokenizer(doc.text)
    n = len(spans)
    chunks: list[DocumentChunk] = []
    start = 0
    while start < n:
        limit = min(start + max_chunk_tokens - 1, n - 1)
        if limit == n - 1:
            end = n - 1
        else:
            end = limit
            best_para = best_sentence = -1
            for j in range(start, limit + 1):
                level = _gap_level(doc.text, spans, j)
                if level == 2:
                    best_para = j
                elif level == 1:
                    best_sentence = j
            if best_para >= 0:
                end = best_para
            elif best_sentence >= 0:
                end = best_sentence
        idx = len(chunks)
        chunks.append(
            DocumentChunk(
                doc_id=doc.doc_id,
                chunk_index=idx,
                chunk_id=f"{doc.doc_id}#{idx}",
                text=doc.text[spans[start][0]:spans[end][1]],
                token_count=end - start + 1,
            )
        )
        start = end + 1
    return chunks


class CorpusStore:
    """Line-delimited chunk store: one JSON record per chunk in chunks.jsonl."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path = self.directory / "chunks.jsonl"
        self._write_lock = threading.Lock()

    def append_chunks(self, chunks: Iterable[DocumentChunk]) -> None:
        with self._write_lock:
            with self.path.open("a", encoding="utf-8") as fh:
                for c in chunks:
                    fh.write(json.dumps({
                        "doc_id": c.doc_id,
                        "chunk_index": c.chunk_index,
                        "chunk_id": c.chunk_id,
                        "text": c.text,
                        "token_count": c.token_count,
                    }, ensure_ascii=False) + "\n")

    def load_chunks(self) -> list[DocumentChunk]:
        if not self.path.exists():
            return []
        out = []
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                out.append(DocumentChunk(
                    doc_id=rec["doc_id"],
                    chunk_index=rec["chunk_index"],
                    chunk_id=rec["chunk_id"],
                    text=rec["text"],
                    token_count=rec["token_count"],
                ))
        return out

    def texts_by_chunk_id(self) -> dict[str, str]:
        return {c.chunk_id: c.text for c in self.load_chunks()}

    def doc_ids(self) -> set[str]:
        return {c.doc_id for c in self.load_chunks()}


def ingest_corpus(
    origins: list[tuple[str, str]],
    store: CorpusStore,
    max_chunk_tokens: int = DEFAULT_MAX_CHUNK_TOKENS,
    max_workers: int = 4,
    timeout: float = 30.0,
) -> IngestStats:
    """Fetch, chunk, and persist a batch of (doc_id, origin) pairs.

    Fetches run concurrently; a failed origin is recorded and the batch
    continues. Store writes are serialized per document.
    """
    if max_chunk_tokens < 1:
        raise ConfigError(f"max_chunk_tokens must be >= 1, got {max_chunk_tokens}")
    stats = IngestStats(documents=0, chunks=0)
    if not origins:
        return stats
    seen = store.doc_ids()
    for doc_id, _ in origins:
        if doc_id in seen:
            raise ConfigError(f"doc_id already in corpus: {doc_id}")
        seen.add(doc_id)

    def fetch_one(pair: tuple[str, str]):
        doc_id, origin = pair
        return doc_id, fetch_document(origin, doc_id, timeout=timeout)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        futures = [(doc_id, pool.submit(fetch_one, (doc_id, origin))) for doc_id, origin in origins]
        for doc_id, fut in futures:
            try:
                _, doc = fut.result()
            except (FetchError, EmptyDocument) as exc:
                stats.errors.append((doc_id, str(exc)))
                continue
            chunks = chunk_document(doc, max_chunk_tokens=max_chunk_tokens)
            store.append_chunks(chunks)
            stats.documents += 1
            stats.chunks += len(chunks)
    return stats

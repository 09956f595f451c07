"""Grounded question answering: retrieve the closest chunks, stuff them into
a fixed prompt template, and ask a model endpoint."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import ConfigError
from .gateway import CompletionRequest, Gateway
from .index import VectorIndex, embed_texts, top_k

DEFAULT_K = 4

QA_PROMPT_VERSION = "qa-prompt/v1"

QA_INSTRUCTION = (
    "You are a marketing analytics assistant. Answer the question using only "
    "the provided context. If the context is insufficient to answer, say so "
    "explicitly instead of guessing."
)


class IndexNotBuilt(Exception):
    """Retrieval requested before an index exists."""


@dataclass
class RetrievedChunk:
    chunk_id: str
    text: str
    score: float


@dataclass
class Citation:
    chunk_id: str
    score: float


@dataclass
class GroundedAnswer:
    question: str
    answer: str
    citations: list[Citation]
    prompt_used: str


def build_qa_prompt(question: str, context_chunks: list[RetrievedChunk]) -> str:
    parts = [QA_INSTRUCTION, ""]
    for i, chunk in enumerate(context_chunks, start=1):
        parts.append(f"Context {i} [{chunk.chunk_id}]:")
        parts.append(chunk.text)
        parts.append("")
    parts.append(f"Question: {question}")
    parts.append("Answer:")
    return "\n".join(parts)


class QaAgent:
    def __init__(self, index: VectorIndex | None, chunk_texts: Mapping[str, str],
                 embedder, gateway: Gateway, default_k: int = DEFAULT_K) -> None:
        self.index = index
        self.chunk_texts = chunk_texts
        self.embedder = embedder
        self.gateway = gateway
        self.default_k = default_k

    def retrieve_context(self, question: str, k: int) -> list[RetrievedChunk]:
        if self.index is None:
            raise IndexNotBuilt("no vector index loaded; ingest a corpus and rebuild first")
        if k < 1:
            raise ConfigError(f"k must be >= 1, got {k}")
        if self.index.provider_tag != self.embedder.tag:
            raise ConfigError(
                f"index was built with provider {self.index.provider_tag!r} "
                f"but queries use {self.embedder.tag!r}"
            )
        (query_vec,) = embed_texts([question], self.embedder)
        results = top_k(self.index, query_vec, k)
        return [
            RetrievedChunk(chunk_id=cid, text=self.chunk_texts.get(cid, ""), score=score)
            for cid, score in results
        ]

    def answer_question(self, question: str, k: int | None = None, endpoint: str = "") -> GroundedAnswer:
        k = self.default_k if k is None else k
        chunks = self.retrieve_context(question, k)
        prompt = build_qa_prompt(question, chunks)
        answer = self.gateway.complete(endpoint, CompletionRequest(prompt=prompt))
        return GroundedAnswer(
            question=question,
            answer=answer,
            citations=[Citation(chunk_id=c.chunk_id, score=c.score) for c in chunks],
            prompt_used=prompt,
        )

import pytest

from mktcopilot.errors import ConfigError
from mktcopilot.gateway import Gateway, scripted_model
from mktcopilot.index import MockEmbedder, VectorIndex, embed_texts
from mktcopilot.qa import (
    IndexNotBuilt,
    QA_INSTRUCTION,
    QaAgent,
    RetrievedChunk,
    build_qa_prompt,
)

CHUNK_TEXTS = {
    "doc#0": "attribution assigns conversion credit across channels",
    "doc#1": "budget optimization balances spend between display and search",
    "doc#2": "mix modeling estimates channel contribution from time series",
}


def build_agent(gateway=None, texts=CHUNK_TEXTS):
    embedder = MockEmbedder(dimension=32)
    ids = sorted(texts)
    vectors = embed_texts([texts[c] for c in ids], embedder)
    index = VectorIndex.build(ids, vectors, embedder.tag)
    gw = gateway or Gateway({"echo": scripted_model([{"substring": "", "response": "ok"}], name="echo")})
    return QaAgent(index, dict(texts), embedder, gw)


class TestRetrieve:
    def test_self_retrieval_ranks_first(self):
        agent = build_agent()
        hits = agent.retrieve_context(CHUNK_TEXTS["doc#1"], k=2)
        assert hits[0].chunk_id == "doc#1"
        assert hits[0].score == pytest.approx(1.0, abs=1e-6)
        assert hits[0].text == CHUNK_TEXTS["doc#1"]

    def test_k_zero_rejected(self):
        agent = build_agent()
        with pytest.raises(ConfigError):
            agent.retrieve_context("anything", k=0)

    def test_k_larger_than_index_clamps(self):
        agent = build_agent()
        hits = agent.retrieve_context("channels", k=50)
        assert len(hits) == 3
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)

    def test_missing_index(self):
        embedder = MockEmbedder()
        agent = QaAgent(None, {}, embedder, Gateway({}))
        with pytest.raises(IndexNotBuilt):
            agent.retrieve_context("q", k=1)

    def test_provider_mismatch_rejected(self):
        agent = build_agent()
        agent.embedder = MockEmbedder(dimension=16)
        with pytest.raises(ConfigError):
            agent.retrieve_context("q", k=1)


class TestPrompt:
    def test_no_chunks(self):
        prompt = build_qa_prompt("what is attribution?", [])
        assert QA_INSTRUCTION in prompt
        assert "what is attribution?" in prompt
        assert "Context" not in prompt

    def test_chunks_verbatim_in_score_order(self):
        chunks = [
            RetrievedChunk("a#0", "first text", 0.9),
            RetrievedChunk("b#0", "second text", 0.4),
        ]
        prompt = build_qa_prompt("q", chunks)
        assert "Context 1 [a#0]:\nfirst text" in prompt
        assert "Context 2 [b#0]:\nsecond text" in prompt
        assert prompt.index("first text") < prompt.index("second text")

    def test_deterministic(self):
        chunks = [RetrievedChunk("a#0", "t", 0.5)]
        assert build_qa_prompt("q", chunks) == build_qa_prompt("q", chunks)


class TestAnswer:
    def test_pipeline_with_scripted_echo(self):
        gw = Gateway({"echo": scripted_model(
            [{"substring": "Question:", "response": "echoed answer"}], name="echo")})
        agent = build_agent(gateway=gw)
        answer = agent.answer_question("what is attribution?", k=2, endpoint="echo")
        assert answer.answer == "echoed answer"
        assert len(answer.citations) == 2
        assert answer.citations[0].chunk_id == "doc#0"
        assert answer.question == "what is attribution?"

    def test_empty_index_zero_citations(self):
        embedder = MockEmbedder(dimension=8)
        index = VectorIndex(dimension=8, records=[], provider_tag=embedder.tag)
        gw = Gateway({"m": scripted_model([{"substring": "", "response": "no context answer"}], name="m")})
        agent = QaAgent(index, {}, embedder, gw)
        answer = agent.answer_question("anything", k=3, endpoint="m")
        assert answer.answer == "no context answer"
        assert answer.citations == []

    def test_grounding_completeness(self):
        agent = build_agent()
        answer = agent.answer_question("display budget", k=3, endpoint="echo")
        for citation in answer.citations:
            assert CHUNK_TEXTS[citation.chunk_id] in answer.prompt_used

    def test_monotone_k(self):
        agent = build_agent()
        for k in (1, 2):
            smaller = agent.answer_question("channel credit", k=k, endpoint="echo")
            larger = agent.answer_question("channel credit", k=k + 1, endpoint="echo")
            small_ids = [c.chunk_id for c in smaller.citations]
            large_ids = [c.chunk_id for c in larger.citations]
            assert large_ids[: len(small_ids)] == small_ids

    def test_recorded_answer_replays_identically(self):
        model = scripted_model([{"substring": "Question:", "response": "stable answer"}], name="m")
        record = Gateway({"m": model}, mode="record")
        agent = build_agent(gateway=record)
        original = agent.answer_question("what is attribution?", k=2, endpoint="m")

        replay = Gateway({"m": model}, mode="replay", transcript=record.transcript)
        agent.gateway = replay
        first = agent.answer_question("what is attribution?", k=2, endpoint="m")
        second = agent.answer_question("what is attribution?", k=2, endpoint="m")
        assert first == original
        assert second == original

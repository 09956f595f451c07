import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mktcopilot.corpus import (
    CorpusStore,
    DocumentChunk,
    EmptyDocument,
    FetchError,
    SourceDocument,
    chunk_document,
    count_tokens,
    fetch_document,
    ingest_corpus,
    strip_markup,
    token_spans,
)
from mktcopilot.errors import ConfigError


def make_doc(text, doc_id="d"):
    return SourceDocument(doc_id=doc_id, origin=f"inline:{doc_id}", text=text, fetched_at=0.0)


class TestCountTokens:
    def test_empty(self):
        assert count_tokens("") == 0

    def test_question_with_punctuation(self):
        assert count_tokens("How many heads of the departments are older than 56?") == 11

    def test_symbols_are_single_tokens(self):
        assert count_tokens("age > 56") == 3

    def test_underscore_is_a_symbol(self):
        assert count_tokens("a_b") == 3

    @given(st.text(), st.text())
    def test_whitespace_concat_is_additive(self, a, b):
        assert count_tokens(a + " " + b) == count_tokens(a) + count_tokens(b)


class TestFetchInline:
    def test_plain_text_identity(self):
        doc = fetch_document("hello world", "d1")
        assert doc.text == "hello world"
        assert doc.doc_id == "d1"

    def test_block_elements_become_paragraph_breaks(self):
        doc = fetch_document("<p>a</p><p>b</p>", "d1")
        assert doc.text == "a\n\nb"

    def test_script_body_discarded(self):
        with pytest.raises(EmptyDocument):
            fetch_document("<script>x</script>", "d1")

    def test_style_discarded_but_surrounding_text_kept(self):
        doc = fetch_document("<style>.x{}</style><p>keep</p>", "d1")
        assert doc.text == "keep"

    def test_whitespace_collapsed_within_paragraph(self):
        doc = fetch_document("a   b\tc", "d1")
        assert doc.text == "a b c"

    def test_blank_line_preserved_in_plain_text(self):
        doc = fetch_document("para one\n\npara two", "d1")
        assert doc.text == "para one\n\npara two"

    def test_whitespace_only_is_empty(self):
        with pytest.raises(EmptyDocument):
            fetch_document("   \n\t  ", "d1")


class _StubHandler(BaseHTTPRequestHandler):
    def do_GET(self):
        if self.path == "/ok":
            body = b"<html><body><p>first</p><p>second</p></body></html>"
            self.send_response(200)
            self.send_header("Content-Type", "text/html")
            self.end_headers()
            self.wfile.write(body)
        else:
            self.send_response(500)
            self.end_headers()

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestFetchHttp:
    def test_fetch_strips_markup(self, stub_server):
        doc = fetch_document(f"{stub_server}/ok", "web")
        assert doc.text == "first\n\nsecond"
        assert doc.origin.endswith("/ok")

    def test_non_2xx_raises(self, stub_server):
        with pytest.raises(FetchError):
            fetch_document(f"{stub_server}/boom", "web")

    def test_unreachable_raises(self):
        with pytest.raises(FetchError):
            fetch_document("http://127.0.0.1:1/nope", "web", timeout=0.5)


def tokens_of(text):
    return [text[s:e] for s, e in token_spans(text)]


class TestChunker:
    def test_exact_fit_is_one_chunk(self):
        text = " ".join(f"w{i}" for i in range(250)) + " " + " ".join("x" for _ in range(250))
        doc = make_doc(text)
        assert count_tokens(text) == 500
        chunks = chunk_document(doc, 500)
        assert len(chunks) == 1
        assert chunks[0].token_count == 500

    def test_hard_split_without_boundaries(self):
        text = " ".join(f"t{i}" for i in range(1200))
        doc = make_doc(text)
        chunks = chunk_document(doc, 500)
        assert [c.token_count for c in chunks] == [500, 500, 200]

    def test_paragraph_boundary_preferred_over_packing(self):
        para = " ".join(f"p{i}" for i in range(300))
        doc = make_doc(para + "\n\n" + para)
        chunks = chunk_document(doc, 500)
        assert [c.token_count for c in chunks] == [300, 300]

    def test_sentence_boundary_preferred_over_hard_split(self):
        sentence = " ".join(f"s{i}" for i in range(299)) + "."
        doc = make_doc(sentence + " " + sentence)
        chunks = chunk_document(doc, 500)
        assert [c.token_count for c in chunks] == [300, 300]

    def test_chunk_ids_and_indices(self):
        doc = make_doc(" ".join(str(i) for i in range(30)), doc_id="abc")
        chunks = chunk_document(doc, 10)
        assert [c.chunk_index for c in chunks] == [0, 1, 2]
        assert [c.chunk_id for c in chunks] == ["abc#0", "abc#1", "abc#2"]

    def test_bad_max_tokens(self):
        with pytest.raises(ConfigError):
            chunk_document(make_doc("a"), 0)

    @settings(max_examples=200)
    @given(
        st.text(
            alphabet=st.sampled_from(list("abc XY.!?\n,;:1290")),
            min_size=1,
            max_size=400,
        ),
        st.integers(min_value=1, max_value=40),
    )
    def test_lossless_and_bounded(self, text, max_tokens):
        doc = make_doc(text)
        chunks = chunk_document(doc, max_tokens)
        rebuilt = []
        for c in chunks:
            assert 0 < c.token_count <= max_tokens
            assert count_tokens(c.text) == c.token_count
            rebuilt.extend(tokens_of(c.text))
        assert rebuilt == tokens_of(text)
        assert [c.chunk_index for c in chunks] == list(range(len(chunks)))

    def test_deterministic(self):
        doc = make_doc("one two. three\n\nfour five six seven", doc_id="z")
        assert chunk_document(doc, 3) == chunk_document(doc, 3)


class TestIngest:
    def test_empty_batch(self, tmp_path):
        store = CorpusStore(tmp_path)
        stats = ingest_corpus([], store)
        assert (stats.documents, stats.chunks) == (0, 0)

    def test_single_inline_doc(self, tmp_path):
        store = CorpusStore(tmp_path)
        text = " ".join(f"w{i}" for i in range(40))
        stats = ingest_corpus([("d1", text)], store)
        assert (stats.documents, stats.chunks) == (1, 1)
        loaded = store.load_chunks()
        assert len(loaded) == 1
        assert loaded[0].doc_id == "d1"
        assert loaded[0].token_count == 40

    def test_failed_origin_recorded_not_fatal(self, tmp_path):
        store = CorpusStore(tmp_path)
        origins = [
            ("good1", "alpha beta gamma"),
            ("bad", "http://127.0.0.1:1/nope"),
            ("good2", "delta epsilon"),
        ]
        stats = ingest_corpus(origins, store, timeout=0.5)
        assert stats.documents == 2
        assert len(stats.errors) == 1
        assert stats.errors[0][0] == "bad"

    def test_duplicate_doc_id_rejected(self, tmp_path):
        store = CorpusStore(tmp_path)
        ingest_corpus([("d1", "some text")], store)
        with pytest.raises(ConfigError):
            ingest_corpus([("d1", "other text")], store)

    def test_store_roundtrip(self, tmp_path):
        store = CorpusStore(tmp_path)
        chunk = DocumentChunk(doc_id="d", chunk_index=0, chunk_id="d#0", text="héllo ✓", token_count=2)
        store.append_chunks([chunk])
        assert CorpusStore(tmp_path).load_chunks() == [chunk]
        assert store.texts_by_chunk_id() == {"d#0": "héllo ✓"}


def test_strip_markup_keeps_inline_tags_text():
    assert strip_markup("a <b>bold</b> word") == "a bold word"

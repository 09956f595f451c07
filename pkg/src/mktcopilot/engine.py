"""CopilotEngine: owns the corpus store, index, gateway, sessions, and the
three evaluation runners. The HTTP service and the CLI are thin layers on
top of this object."""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path

from .config import ServiceConfig
from .corpus import CorpusStore, chunk_document, fetch_document, ingest_corpus
from .errors import ConfigError
from .gateway import CompletionRequest, Gateway, ModelEndpoint, Transcript, scripted_model
from .index import HttpEmbedder, MockEmbedder, VectorIndex, embed_texts, load_index, save_index
from .judge import run_judged_eval
from .orchestrator import (
    DEFAULT_CHAT_SCHEMA,
    Orchestrator,
    Session,
    TraceStep,
    Turn,
    TurnResult,
    TurnTrace,
)
from .qa import QaAgent
from .reports import KIND_QA, KIND_SQL, KIND_TABLE, ReportStore, RunReport
from .sqlkit import build_fewshot_prompt, load_sql_dataset, score_predictions, split_dataset
from .tabular import build_explanation_prompt, generate_synthetic_rows, score_explanations


class RebuildInProgress(Exception):
    """An index rebuild is already running."""


class UnknownSession(Exception):
    pass


class UnknownTrace(Exception):
    pass


def make_embedder(spec: dict):
    provider = spec.get("provider", "mock")
    if provider == "mock":
        return MockEmbedder(dimension=int(spec.get("dimension", 64)))
    if provider == "http":
        for key in ("url", "model"):
            if not spec.get(key):
                raise ConfigError(f"http embedding provider needs {key!r}")
        return HttpEmbedder(url=spec["url"], model=spec["model"],
                            api_key_env=spec.get("api_key_env"))
    raise ConfigError(f"unknown embedding provider: {provider!r}")


def make_endpoint(spec: dict):
    kind = spec.get("kind", "http")
    if kind == "scripted":
        return scripted_model(spec.get("rules", []), name=spec["name"])
    if kind == "http":
        return ModelEndpoint(
            name=spec["name"],
            base_url=spec.get("base_url", ""),
            auth_ref=spec.get("auth_ref"),
            timeout=float(spec.get("timeout", 30.0)),
            max_retries=int(spec.get("max_retries", 3)),
        )
    raise ConfigError(f"unknown endpoint kind: {kind!r}")


class CopilotEngine:
    def __init__(self, config: ServiceConfig) -> None:
        self.config = config
        self.store = CorpusStore(config.corpus_dir)
        self.embedder = make_embedder(config.embedding)
        self.reports = ReportStore(config.data_dir)
        self.degraded = config.degraded_endpoints()

        transcript = None
        if config.transcript_mode == "replay":
            transcript = Transcript.load(config.transcript_path)
        mode = {"off": "live", "record": "record", "replay": "replay"}[config.transcript_mode]
        self.gateway = Gateway(
            {spec["name"]: make_endpoint(spec) for spec in config.endpoints},
            mode=mode, transcript=transcript,
        )

        self.index: VectorIndex | None = None
        index_path = Path(config.index_path)
        if index_path.exists():
            self.index = load_index(index_path)

        self.sessions: dict[str, Session] = {}
        self.traces: dict[str, TurnTrace] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._rebuild_lock = threading.Lock()

        self._data_dir = Path(config.data_dir)
        self._data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions_log = self._data_dir / "sessions.jsonl"
        self._traces_log = self._data_dir / "traces.jsonl"
        self._load_persisted()

    # -- persistence -------------------------------------------------------

    def _load_persisted(self) -> None:
        if self._sessions_log.exists():
            for line in self._sessions_log.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                session = self.sessions.setdefault(rec["session_id"], Session(rec["session_id"]))
                if "turn" in rec:
                    session.turns.append(Turn(**rec["turn"]))
        if self._traces_log.exists():
            for line in self._traces_log.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                trace = TurnTrace(trace_id=rec["trace_id"])
                trace.steps = [TraceStep(**s) for s in rec["steps"]]
                self.traces[trace.trace_id] = trace

    def _persist_session_event(self, session_id: str, turn=None) -> None:
        rec: dict = {"session_id": session_id}
        if turn is not None:
            rec["turn"] = {
                "user_text": turn.user_text,
                "attachment_ref": turn.attachment_ref,
                "answer": turn.answer,
                "trace_id": turn.trace_id,
                "intent": turn.intent,
            }
        with self._sessions_log.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def _persist_trace(self, trace: TurnTrace) -> None:
        with self._traces_log.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({
                "trace_id": trace.trace_id,
                "steps": [{"kind": s.kind, "payload": s.payload, "ts": s.ts} for s in trace.steps],
            }, ensure_ascii=False) + "\n")

    # -- corpus and index ----------------------------------------------------

    def add_document(self, origin: str, doc_id: str | None = None) -> dict:
        doc_id = doc_id or f"doc-{uuid.uuid4().hex[:8]}"
        if doc_id in self.store.doc_ids():
            raise ConfigError(f"doc_id already in corpus: {doc_id}")
        doc = fetch_document(origin, doc_id)
        chunks = chunk_document(doc, self.config.defaults["max_chunk_tokens"])
        self.store.append_chunks(chunks)
        return {"doc_id": doc_id, "chunks": len(chunks)}

    def ingest(self, origins: list[tuple[str, str]], max_workers: int = 4):
        return ingest_corpus(origins, self.store,
                             max_chunk_tokens=self.config.defaults["max_chunk_tokens"],
                             max_workers=max_workers)

    def rebuild_index(self) -> dict:
        if not self._rebuild_lock.acquire(blocking=False):
            raise RebuildInProgress("index rebuild already running")
        try:
            chunks = self.store.load_chunks()
            if chunks:
                vectors = embed_texts([c.text for c in chunks], self.embedder)
                index = VectorIndex.build([c.chunk_id for c in chunks], vectors, self.embedder.tag)
            else:
                dim = getattr(self.embedder, "dimension", 0) or 1
                index = VectorIndex(dimension=dim, records=[], provider_tag=self.embedder.tag)
            save_index(index, self.config.index_path)
            self.index = index
            return {"dimension": index.dimension, "count": len(index.records)}
        finally:
            self._rebuild_lock.release()

    def qa_agent(self) -> QaAgent:
        return QaAgent(self.index, self.store.texts_by_chunk_id(), self.embedder,
                       self.gateway, default_k=self.config.defaults["k"])

    def orchestrator(self) -> Orchestrator:
        return Orchestrator(
            self.gateway,
            self.qa_agent(),
            router_endpoint=self.config.router_model,
            answer_endpoint=self.config.answer_model,
            default_k=self.config.defaults["k"],
            sql_chat_schema=self.config.sql_chat_schema or DEFAULT_CHAT_SCHEMA,
            rephrase_table_answers=self.config.rephrase_table_answers,
        )

    # -- sessions -------------------------------------------------------------

    def create_session(self) -> str:
        session_id = uuid.uuid4().hex
        self.sessions[session_id] = Session(session_id=session_id)
        self._persist_session_event(session_id)
        return session_id

    def get_session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownSession(session_id) from None

    def get_trace(self, trace_id: str) -> TurnTrace:
        try:
            return self.traces[trace_id]
        except KeyError:
            raise UnknownTrace(trace_id) from None

    def _session_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._session_locks.setdefault(session_id, threading.Lock())

    def handle_message(self, session_id: str, text: str,
                       attachment_csv: str | None = None) -> TurnResult:
        session = self.get_session(session_id)
        with self._session_lock(session_id):
            result = self.orchestrator().handle_turn(session, text, attachment_csv)
            self.traces[result.trace_id] = result.trace
            self._persist_trace(result.trace)
            self._persist_session_event(session_id, session.turns[-1])
            return result

    # -- evaluation runs -------------------------------------------------------

    def _finish_report(self, report: RunReport) -> RunReport:
        if self.gateway.mode == "record" and self.config.transcript_path:
            self.gateway.transcript.save(self.config.transcript_path)
            report.transcript = self.config.transcript_path
        self.reports.save(report)
        return report

    def run_sql_eval(self, dataset_path: str, model: str, shots: int | None = None,
                     eval_count: int | None = None, seed: int = 20240101,
                     lenient: bool = False) -> RunReport:
        shots = self.config.defaults["n_shots"] if shots is None else shots
        eval_count = self.config.defaults["eval_count"] if eval_count is None else eval_count
        examples = load_sql_dataset(dataset_path)
        split = split_dataset(examples, eval_count=eval_count, seed=seed)
        shot_examples = split.train[:shots]
        if len(shot_examples) < shots:
            raise ConfigError(f"train split too small for {shots} shots")
        pairs = []
        items = []
        for example in split.eval:
            prompt = build_fewshot_prompt(example, shot_examples, n_shots=shots)
            prediction = self.gateway.complete(model, CompletionRequest(prompt=prompt))
            pairs.append((prediction, example.answer))
        strict = score_predictions(pairs, lenient=False)
        lenient_result = score_predictions(pairs, lenient=True)
        chosen = lenient_result if lenient else strict
        histogram: dict[str, int] = {}
        for verdict in chosen.verdicts:
            histogram[verdict.kind] = histogram.get(verdict.kind, 0) + 1
        diffs = [v.detail for v in chosen.verdicts if v.detail][:10]
        for (prediction, reference), verdict in list(zip(pairs, chosen.verdicts))[:50]:
            items.append({"prediction": prediction, "reference": reference,
                          "verdict": verdict.kind, "detail": verdict.detail})
        correct = round(chosen.accuracy * len(pairs))
        report = RunReport(
            run_id=uuid.uuid4().hex[:12],
            kind=KIND_SQL,
            metrics={model: {
                "accuracy": chosen.accuracy,
                "accuracy_strict": strict.accuracy,
                "accuracy_lenient": lenient_result.accuracy,
                "mode": "lenient" if lenient else "strict",
                "n": len(pairs),
                "correct": correct,
                "verdicts": histogram,
            }},
            items=items,
            config={"dataset": str(dataset_path), "model": model, "shots": shots,
                    "eval_count": eval_count, "seed": seed, "lenient": lenient,
                    "sample_diffs": diffs},
        )
        return self._finish_report(report)

    def run_table_eval(self, n: int, seed: int, model: str, fmt: str = "csv",
                       strict: bool = False, stratified: bool = False) -> RunReport:
        rows = generate_synthetic_rows(n, seed=seed, stratified=stratified)
        threshold = self.config.defaults["factor_threshold"]
        pairs = []
        for row in rows:
            prompt = build_explanation_prompt(row, fmt, threshold=threshold)
            candidate = self.gateway.complete(model, CompletionRequest(prompt=prompt))
            pairs.append((row, candidate))
        result = score_explanations(pairs, threshold=threshold, strict=strict)
        items = [
            {"row": dict(row.fields()), "candidate": candidate,
             "correct": verdict.correct, "reason": verdict.reason}
            for (row, candidate), verdict in list(zip(pairs, result.verdicts))[:50]
        ]
        report = RunReport(
            run_id=uuid.uuid4().hex[:12],
            kind=KIND_TABLE,
            metrics={model: {
                "accuracy": result.accuracy,
                "n": n,
                "correct": sum(1 for v in result.verdicts if v.correct),
                "format": fmt,
                "strict": strict,
            }},
            items=items,
            config={"n": n, "seed": seed, "model": model, "format": fmt,
                    "strict": strict, "stratified": stratified,
                    "factor_threshold": threshold},
        )
        return self._finish_report(report)

    def run_qa_eval(self, questions: list[dict], candidates: list[str],
                    judge_endpoint: str, k: int | None = None) -> RunReport:
        k = self.config.defaults["k"] if k is None else k
        eval_report = run_judged_eval(
            questions, candidates, judge_endpoint,
            qa_agent=self.qa_agent(), gateway=self.gateway, k=k,
        )
        metrics = {}
        for candidate, means in eval_report.candidates.items():
            entry = dict(means)
            entry["n"] = eval_report.counts[candidate]
            metrics[candidate] = entry
        report = RunReport(
            run_id=uuid.uuid4().hex[:12],
            kind=KIND_QA,
            metrics=metrics,
            items=[{"candidate": e.candidate, "question_id": e.question_id, "reason": e.reason}
                   for e in eval_report.excluded],
            config={"judge": judge_endpoint, "candidates": candidates, "k": k,
                    "questions": len(questions)},
        )
        return self._finish_report(report)


def load_questions_file(path: str | Path) -> list[dict]:
    """Line-delimited {id, question, reference} records."""
    questions = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if not rec.get("question") or not rec.get("reference"):
                raise ConfigError(f"line {lineno}: needs question and reference fields")
            questions.append(rec)
    return questions

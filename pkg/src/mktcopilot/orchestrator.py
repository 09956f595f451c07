"""Turn handling: classify the user's intent, dispatch to the matching
agent, and record every intermediate step in a trace."""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field

from .errors import ConfigError
from .gateway import CompletionRequest, Gateway
from .qa import QaAgent, build_qa_prompt
from .sqlkit import ParseError, SqlExample, build_fewshot_prompt, normalize_ast, parse_sql, render
from .sqlkit.scoring import extract_sql
from .tabular import (
    classify_factor,
    ground_truth_explanation,
    parse_attribution_rows,
)

DOC_QA = "DOC_QA"
SQL_QUERY = "SQL_QUERY"
TABLE_EXPLAIN = "TABLE_EXPLAIN"
INTENTS = (DOC_QA, SQL_QUERY, TABLE_EXPLAIN)

SOURCE_MODEL = "MODEL"
SOURCE_HEURISTIC = "HEURISTIC_FALLBACK"

STEP_INTENT = "INTENT"
STEP_RETRIEVAL = "RETRIEVAL"
STEP_PROMPT = "PROMPT"
STEP_MODEL_OUTPUT = "MODEL_OUTPUT"
STEP_VERDICT = "VERDICT"
STEP_FINAL = "FINAL"

ROUTER_PROMPT_VERSION = "router-prompt/v1"

ROUTER_PROMPT = (
    "Classify the user's request into exactly one intent.\n"
    "DOC_QA: a question answered from documentation.\n"
    "SQL_QUERY: a request to query or count rows in a database table.\n"
    "TABLE_EXPLAIN: a request to explain an attribution table row.\n"
    "Reply with exactly one token: DOC_QA, SQL_QUERY, or TABLE_EXPLAIN.\n"
    "\n"
    "Request: {text}\n"
    "Intent:"
)

_SQL_HINTS = ("schema", "table", "how many", "average", "total")

# Fallback schema for ad-hoc SQL chat turns that carry no CREATE TABLE context.
DEFAULT_CHAT_SCHEMA = (
    "CREATE TABLE campaign_metrics (channel VARCHAR, spend INTEGER, "
    "clicks INTEGER, conversions INTEGER, year INTEGER)"
)


@dataclass(frozen=True)
class Intent:
    kind: str
    source: str


@dataclass
class TraceStep:
    kind: str
    payload: str
    ts: float


@dataclass
class TurnTrace:
    trace_id: str
    steps: list[TraceStep] = field(default_factory=list)

    def append(self, kind: str, payload: str) -> None:
        ts = time.time()
        if self.steps and ts <= self.steps[-1].ts:
            ts = self.steps[-1].ts + 1e-6
        self.steps.append(TraceStep(kind=kind, payload=payload, ts=ts))


@dataclass
class Turn:
    user_text: str
    attachment_ref: str | None
    answer: str
    trace_id: str
    intent: str


@dataclass
class Session:
    session_id: str
    turns: list[Turn] = field(default_factory=list)


@dataclass
class TurnResult:
    answer: str
    trace_id: str
    intent: Intent
    trace: TurnTrace


def heuristic_intent(user_text: str) -> str:
    lowered = user_text.lower()
    if any(hint in lowered for hint in _SQL_HINTS):
        return SQL_QUERY
    return DOC_QA


@dataclass
class _Classification:
    intent: Intent
    prompt: str | None = None
    raw_reply: str | None = None


def _classify(user_text: str, attachment_present: bool, endpoint: str,
              gateway: Gateway) -> _Classification:
    if attachment_present:
        return _Classification(Intent(kind=TABLE_EXPLAIN, source=SOURCE_HEURISTIC))
    prompt = ROUTER_PROMPT.format(text=user_text)
    try:
        reply = gateway.complete(endpoint, CompletionRequest(prompt=prompt))
    except Exception:
        return _Classification(
            Intent(kind=heuristic_intent(user_text), source=SOURCE_HEURISTIC), prompt, None
        )
    token = reply.strip().upper()
    if token in INTENTS:
        return _Classification(Intent(kind=token, source=SOURCE_MODEL), prompt, reply)
    return _Classification(
        Intent(kind=heuristic_intent(user_text), source=SOURCE_HEURISTIC), prompt, reply
    )


def classify_intent(user_text: str, attachment_present: bool, endpoint: str,
                    gateway: Gateway) -> Intent:
    """Attachment turns are always TABLE_EXPLAIN without a model call;
    otherwise ask the router model and fall back to keyword rules."""
    return _classify(user_text, attachment_present, endpoint, gateway).intent


class Orchestrator:
    def __init__(self, gateway: Gateway, qa_agent: QaAgent | None,
                 router_endpoint: str, answer_endpoint: str,
                 default_k: int = 4, sql_chat_schema: str = DEFAULT_CHAT_SCHEMA,
                 rephrase_table_answers: bool = False) -> None:
        self.gateway = gateway
        self.qa_agent = qa_agent
        self.router_endpoint = router_endpoint
        self.answer_endpoint = answer_endpoint
        self.default_k = default_k
        self.sql_chat_schema = sql_chat_schema
        self.rephrase_table_answers = rephrase_table_answers

    def handle_turn(self, session: Session, user_text: str,
                    attachment_csv: str | None = None) -> TurnResult:
        trace = TurnTrace(trace_id=uuid.uuid4().hex)
        classification = _classify(user_text, attachment_csv is not None,
                                   self.router_endpoint, self.gateway)
        intent = classification.intent
        trace.append(STEP_INTENT, f"{intent.kind} (source={intent.source})")
        if classification.prompt is not None:
            trace.append(STEP_PROMPT, classification.prompt)
            if classification.raw_reply is not None:
                trace.append(STEP_MODEL_OUTPUT, classification.raw_reply)

        try:
            if intent.kind == TABLE_EXPLAIN:
                answer = self._table_turn(trace, attachment_csv)
            elif intent.kind == SQL_QUERY:
                answer = self._sql_turn(trace, user_text)
            else:
                answer = self._doc_qa_turn(trace, user_text)
        except Exception as exc:
            answer = (
                "Sorry, I could not complete this request. "
                f"error={type(exc).__name__} detail={exc}"
            )
        trace.append(STEP_FINAL, answer)
        session.turns.append(Turn(
            user_text=user_text,
            attachment_ref="attachment.csv" if attachment_csv is not None else None,
            answer=answer,
            trace_id=trace.trace_id,
            intent=intent.kind,
        ))
        return TurnResult(answer=answer, trace_id=trace.trace_id, intent=intent, trace=trace)

    def _doc_qa_turn(self, trace: TurnTrace, user_text: str) -> str:
        if self.qa_agent is None:
            raise ConfigError("no QA agent configured; build an index first")
        chunks = self.qa_agent.retrieve_context(user_text, self.default_k)
        trace.append(STEP_RETRIEVAL, json.dumps(
            [{"chunk_id": c.chunk_id, "score": round(c.score, 6)} for c in chunks]
        ))
        prompt = build_qa_prompt(user_text, chunks)
        trace.append(STEP_PROMPT, prompt)
        answer = self.gateway.complete(self.answer_endpoint, CompletionRequest(prompt=prompt))
        trace.append(STEP_MODEL_OUTPUT, answer)
        return answer

    def _sql_turn(self, trace: TurnTrace, user_text: str) -> str:
        target = SqlExample(question=user_text, context=self.sql_chat_schema, answer="-")
        prompt = build_fewshot_prompt(target, [], n_shots=0)
        trace.append(STEP_PROMPT, prompt)
        raw = self.gateway.complete(self.answer_endpoint, CompletionRequest(prompt=prompt))
        trace.append(STEP_MODEL_OUTPUT, raw)
        cleaned = extract_sql(raw)
        try:
            normalized = render(normalize_ast(parse_sql(cleaned)))
        except ParseError as exc:
            trace.append(STEP_VERDICT, f"ParseError: {exc}")
            return (
                f"The generated SQL did not parse under the supported grammar: {exc}\n"
                f"Raw model output: {raw}"
            )
        trace.append(STEP_VERDICT, f"parsed OK; normalized: {normalized}")
        return f"{normalized}\n\n(valid under the supported SQL grammar)"

    def _table_turn(self, trace: TurnTrace, attachment_csv: str | None) -> str:
        if not attachment_csv:
            raise ConfigError("table explanation needs a CSV attachment")
        rows = parse_attribution_rows(attachment_csv)
        explanations = [ground_truth_explanation(row) for row in rows]
        verdict = {
            "rows": [
                {
                    "model_name": row.model_name,
                    "channel": row.channel,
                    "direction": "decrease" if row.absolute_change < 0
                    else "increase" if row.absolute_change > 0 else "no change",
                    "factors": {
                        name: classify_factor(score).value
                        for name, score in row.factor_scores.items()
                    },
                }
                for row in rows
            ],
            "oracle_text": [e.full_text for e in explanations],
        }
        trace.append(STEP_VERDICT, json.dumps(verdict))
        oracle_answer = "\n\n".join(e.full_text for e in explanations)
        if not self.rephrase_table_answers:
            return oracle_answer
        prompt = (
            "Rephrase the following attribution explanation conversationally "
            "without changing any number or classification:\n\n" + oracle_answer
        )
        trace.append(STEP_PROMPT, prompt)
        rephrased = self.gateway.complete(self.answer_endpoint, CompletionRequest(prompt=prompt))
        trace.append(STEP_MODEL_OUTPUT, rephrased)
        return rephrased

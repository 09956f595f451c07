"""Model-as-judge scoring: five 1-5 criteria against reference answers,
strict response parsing, and pooled-mean report aggregation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ConfigError, RangeError
from .gateway import CompletionRequest, Gateway

CRITERIA = ("accuracy", "relevance", "thoroughness", "clarity", "conciseness")

RUBRIC_VERSION = "judge-rubric/v1"

RUBRICS = {
    "accuracy": "The answer agrees with the reference answer and contains no false claims.",
    "relevance": "The answer addresses the question that was actually asked.",
    "thoroughness": "The answer covers every important point made by the reference answer.",
    "clarity": "The answer is well organized and easy to follow.",
    "conciseness": "The answer avoids filler and unnecessary repetition.",
}

SCORE_MIN, SCORE_MAX = 1, 5

_SCORE_LINE_RE = re.compile(r"^\s*([A-Za-z]+)\s*:\s*(-?\d+)\s*$")


class ParseError(Exception):
    """Judge response did not follow the required five-line format."""

    def __init__(self, message: str, missing: frozenset[str] = frozenset()):
        self.missing = missing
        super().__init__(message)


class EvalError(Exception):
    """Every candidate/question pair failed; there is nothing to report."""


@dataclass
class JudgeScore:
    scores: dict[str, int]
    judge_endpoint: str = ""
    question_id: str = ""
    candidate_id: str = ""


def build_judge_prompt(question: str, reference_answer: str, candidate_answer: str) -> str:
    if not question or not reference_answer or not candidate_answer:
        raise ConfigError("question, reference_answer, and candidate_answer must be non-empty")
    lines = [
        "You are grading a candidate answer against a reference answer.",
        "Score the candidate from 1 (worst) to 5 (best) on each criterion:",
    ]
    for name in CRITERIA:
        lines.append(f"- {name}: {RUBRICS[name]}")
    lines += [
        "",
        f"Question: {question}",
        "",
        f"Reference answer: {reference_answer}",
        "",
        f"Candidate answer: {candidate_answer}",
        "",
        "Reply with exactly five lines, one per criterion, in this format:",
    ]
    for name in CRITERIA:
        lines.append(f"{name}: <integer 1-5>")
    return "\n".join(lines)


def parse_judge_response(text: str, judge_endpoint: str = "",
                         question_id: str = "", candidate_id: str = "") -> JudgeScore:
    scores: dict[str, int] = {}
    for line in text.splitlines():
        m = _SCORE_LINE_RE.match(line)
        if not m:
            continue
        name = m.group(1).lower()
        if name not in CRITERIA:
            continue
        if name in scores:
            raise ParseError(f"duplicate criterion line: {name}")
        value = int(m.group(2))
        if not SCORE_MIN <= value <= SCORE_MAX:
            raise RangeError(f"{name} score {value} outside {SCORE_MIN}..{SCORE_MAX}")
        scores[name] = value
    missing = frozenset(c for c in CRITERIA if c not in scores)
    if missing:
        raise ParseError(f"missing criteria: {', '.join(sorted(missing))}", missing=missing)
    return JudgeScore(scores=scores, judge_endpoint=judge_endpoint,
                      question_id=question_id, candidate_id=candidate_id)


@dataclass
class Exclusion:
    candidate: str
    question_id: str
    reason: str


@dataclass
class EvaluationReport:
    judge: str
    criteria: tuple[str, ...]
    candidates: dict[str, dict[str, float]]  # candidate -> criterion -> mean (2 dp)
    counts: dict[str, int]  # candidate -> included question count
    excluded: list[Exclusion] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def aggregate_scores(scores: list[JudgeScore]) -> EvaluationReport:
    """Pool raw scores per candidate and average each criterion."""
    sums: dict[str, dict[str, int]] = {}
    counts: dict[str, int] = {}
    for score in scores:
        bucket = sums.setdefault(score.candidate_id, {c: 0 for c in CRITERIA})
        for criterion, value in score.scores.items():
            bucket[criterion] += value
        counts[score.candidate_id] = counts.get(score.candidate_id, 0) + 1
    candidates = {
        candidate: {c: round(total[c] / counts[candidate], 2) for c in CRITERIA}
        for candidate, total in sums.items()
    }
    judge_name = scores[0].judge_endpoint if scores else ""
    return EvaluationReport(judge=judge_name, criteria=CRITERIA,
                            candidates=candidates, counts=counts)


def run_judged_eval(
    questions: list[dict],
    candidates: list[str],
    judge_endpoint: str,
    *,
    qa_agent,
    gateway: Gateway,
    k: int = 4,
    metadata: dict | None = None,
) -> EvaluationReport:
    """Answer every question with every candidate endpoint, judge each answer,
    and pool the parsed scores. A malformed judgment is retried once with a
    stricter reminder; a second failure excludes the pair."""
    if not questions:
        raise ConfigError("question list must be non-empty")
    for q in questions:
        if not q.get("question") or not q.get("reference"):
            raise ConfigError(f"question record needs question and reference: {q}")

    collected: list[JudgeScore] = []
    excluded: list[Exclusion] = []
    for candidate in candidates:
        for q in questions:
            qid = str(q.get("id", q["question"][:40]))
            try:
                answer = qa_agent.answer_question(q["question"], k=k, endpoint=candidate).answer
            except Exception as exc:
                excluded.append(Exclusion(candidate=candidate, question_id=qid,
                                          reason=f"answer failed: {exc}"))
                continue
            prompt = build_judge_prompt(q["question"], q["reference"], answer)
            score = None
            reason = ""
            for attempt, extra in enumerate(("", "\nReturn exactly the five lines, nothing else.")):
                reply = gateway.complete(judge_endpoint, CompletionRequest(prompt=prompt + extra))
                try:
                    score = parse_judge_response(reply, judge_endpoint=judge_endpoint,
                                                 question_id=qid, candidate_id=candidate)
                    break
                except (ParseError, RangeError) as exc:
                    reason = str(exc)
            if score is None:
                excluded.append(Exclusion(candidate=candidate, question_id=qid,
                                          reason=f"judge parse failed twice: {reason}"))
                continue
            collected.append(score)

    if not collected:
        raise EvalError("every candidate/question pair failed")
    report = aggregate_scores(collected)
    report.judge = judge_endpoint
    report.excluded = excluded
    report.metadata = dict(metadata or {})
    return report

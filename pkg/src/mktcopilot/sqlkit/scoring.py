"""Prediction scoring: normalized-AST equality with a string fallback for
unparseable sides."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import Select, render
from .normalize import normalize_ast
from .parser import ParseError, parse_sql

AST_MATCH = "AST_MATCH"
AST_MISMATCH = "AST_MISMATCH"
STRING_FALLBACK_MATCH = "STRING_FALLBACK_MATCH"
STRING_FALLBACK_MISMATCH = "STRING_FALLBACK_MISMATCH"

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*?)\n?```\s*$", re.DOTALL)


@dataclass
class MatchVerdict:
    kind: str
    detail: str


@dataclass
class ScoreResult:
    accuracy: float
    verdicts: list[MatchVerdict]


def extract_sql(text: str) -> str:
    """Unwrap a markdown code fence if a model added one."""
    stripped = text.strip()
    m = _FENCE_RE.match(stripped)
    return m.group(1).strip() if m else stripped


def fallback_normalize(text: str) -> str:
    cleaned = text.strip()
    while cleaned.endswith(";"):
        cleaned = cleaned[:-1].rstrip()
    return re.sub(r"\s+", " ", cleaned).lower()


def match_pair(prediction: str, reference: str, lenient: bool = False) -> MatchVerdict:
    pred_ast: Select | None = None
    ref_ast: Select | None = None
    pred_err = ref_err = None
    try:
        pred_ast = parse_sql(extract_sql(prediction))
    except ParseError as exc:
        pred_err = exc
    try:
        ref_ast = parse_sql(extract_sql(reference))
    except ParseError as exc:
        ref_err = exc

    if pred_ast is not None and ref_ast is not None:
        pred_norm = normalize_ast(pred_ast, lenient=lenient)
        ref_norm = normalize_ast(ref_ast, lenient=lenient)
        if pred_norm == ref_norm:
            return MatchVerdict(kind=AST_MATCH, detail="")
        return MatchVerdict(
            kind=AST_MISMATCH,
            detail=f"predicted: {render(pred_norm)} | reference: {render(ref_norm)}",
        )

    sides = []
    if pred_err is not None:
        sides.append(f"prediction unparseable ({pred_err})")
    if ref_err is not None:
        sides.append(f"reference unparseable ({ref_err})")
    note = "; ".join(sides)
    if fallback_normalize(prediction) == fallback_normalize(reference):
        return MatchVerdict(kind=STRING_FALLBACK_MATCH, detail=note)
    return MatchVerdict(kind=STRING_FALLBACK_MISMATCH, detail=note)


def score_predictions(pairs: list[tuple[str, str]], lenient: bool = False) -> ScoreResult:
    """Score (prediction, reference) pairs. Parse failures become verdicts,
    never errors. Empty input scores 0.0."""
    verdicts = [match_pair(pred, ref, lenient=lenient) for pred, ref in pairs]
    matches = sum(1 for v in verdicts if v.kind in (AST_MATCH, STRING_FALLBACK_MATCH))
    accuracy = matches / len(pairs) if pairs else 0.0
    return ScoreResult(accuracy=accuracy, verdicts=verdicts)

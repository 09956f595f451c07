"""Attribution-change rows: the three prompt serializations, the rule-based
explanation oracle, a synthetic row simulator, and the explanation scorer.

The classification rule is fixed: a factor score above the threshold
contributes, below the negative threshold mitigates, anything else
(including the thresholds themselves) is non-influential.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigError, RangeError

SCORE_MIN = -100
SCORE_MAX = 100
DEFAULT_THRESHOLD = 5

DEFAULT_FACTORS = ("targeting quality", "contact frequency", "ad cannibalization")

MODEL_NAME_POOL = ("lead", "revenue", "conversion", "signup", "pipeline", "purchase")
CHANNEL_POOL = ("display", "search", "social", "email", "video", "affiliate", "audio")

IDENTITY_FIELDS = ("model name", "channel", "absolute change")


class FactorClass(Enum):
    CONTRIBUTOR = "contributor"
    MITIGATOR = "mitigator"
    NON_INFLUENTIAL = "non_influential"


_CLASS_PHRASE = {
    FactorClass.CONTRIBUTOR: "a contributing factor",
    FactorClass.MITIGATOR: "a mitigating factor",
    FactorClass.NON_INFLUENTIAL: "not a factor",
}

_DETECT_PHRASES = (
    ("contributing factor", FactorClass.CONTRIBUTOR),
    ("mitigating factor", FactorClass.MITIGATOR),
    ("not a factor", FactorClass.NON_INFLUENTIAL),
)

_DIRECTION_KEYWORDS = ("decrease", "increase", "no change")


@dataclass
class AttributionRow:
    model_name: str
    channel: str
    absolute_change: int
    factor_scores: dict[str, int]

    def __post_init__(self):
        if not self.model_name or not self.channel:
            raise ConfigError("model_name and channel must be non-empty")
        if not self.factor_scores:
            raise ConfigError("factor_scores must be non-empty")
        for label, value in [("absolute change", self.absolute_change), *self.factor_scores.items()]:
            if not SCORE_MIN <= value <= SCORE_MAX:
                raise RangeError(f"{label}={value} outside [{SCORE_MIN}, {SCORE_MAX}]")

    def fields(self) -> list[tuple[str, str]]:
        pairs = [
            ("model name", self.model_name),
            ("channel", self.channel),
            ("absolute change", str(self.absolute_change)),
        ]
        pairs.extend((name, str(score)) for name, score in self.factor_scores.items())
        return pairs


# Worked example used across docs and tests.
EXAMPLE_ROW = AttributionRow(
    model_name="lead",
    channel="display",
    absolute_change=-82,
    factor_scores={"targeting quality": 63, "contact frequency": -4, "ad cannibalization": -33},
)


def classify_factor(score: int, threshold: int = DEFAULT_THRESHOLD) -> FactorClass:
    if not SCORE_MIN <= score <= SCORE_MAX:
        raise RangeError(f"score {score} outside [{SCORE_MIN}, {SCORE_MAX}]")
    if score > threshold:
        return FactorClass.CONTRIBUTOR
    if score < -threshold:
        return FactorClass.MITIGATOR
    return FactorClass.NON_INFLUENTIAL


def render_row(row: AttributionRow, fmt: str) -> str:
    fmt = fmt.lower()
    pairs = row.fields()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([name for name, _ in pairs])
        writer.writerow([value for _, value in pairs])
        return buf.getvalue().rstrip("\n")
    if fmt == "list":
        return "\n".join(f"{name}: {value}" for name, value in pairs)
    if fmt == "text":
        clauses = []
        for name, value in pairs:
            verb = "is" if name in IDENTITY_FIELDS else "has a value of"
            clauses.append(f"the **{name}** {verb} {value}")
        sentence = ", ".join(clauses) + "."
        return sentence[0].upper() + sentence[1:]
    raise ConfigError(f"unknown row format: {fmt!r} (expected csv, list, or text)")


def parse_attribution_rows(csv_text: str) -> list[AttributionRow]:
    """Read the documented CSV attachment shape back into rows.

    Header must start with model name / channel / absolute change; any
    remaining header columns are the factor names.
    """
    reader = csv.reader(io.StringIO(csv_text))
    table = [r for r in reader if r]
    if len(table) < 2:
        raise ConfigError("attachment needs a header line and at least one value line")
    header = [h.strip() for h in table[0]]
    if header[:3] != list(IDENTITY_FIELDS) or len(header) < 4:
        raise ConfigError(
            "attachment header must be: model name,channel,absolute change,<factor>,..."
        )
    factors = header[3:]
    rows = []
    for lineno, values in enumerate(table[1:], start=2):
        if len(values) != len(header):
            raise ConfigError(f"line {lineno}: expected {len(header)} columns, got {len(values)}")
        try:
            change = int(values[2])
            scores = {name: int(v) for name, v in zip(factors, values[3:])}
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: non-integer score: {exc}") from exc
        rows.append(AttributionRow(
            model_name=values[0], channel=values[1],
            absolute_change=change, factor_scores=scores,
        ))
    return rows


@dataclass
class Explanation:
    header: str
    direction_sentence: str
    factor_sentences: list[str]
    full_text: str


def _direction_phrase(change: int) -> str:
    if change < 0:
        return "a decrease"
    if change > 0:
        return "an increase"
    return "no change"


def ground_truth_explanation(row: AttributionRow, threshold: int = DEFAULT_THRESHOLD) -> Explanation:
    header = f"{row.model_name} - {row.channel}:"
    direction = (
        f"The absolute change of this channel is {row.absolute_change}%, "
        f"which indicates {_direction_phrase(row.absolute_change)} in the touch point's credit."
    )
    factor_sentences = []
    for name, score in row.factor_scores.items():
        phrase = _CLASS_PHRASE[classify_factor(score, threshold)]
        factor_sentences.append(f"The {name} is {phrase} with a score of {score}%.")
    full_text = " ".join([header, direction, *factor_sentences])
    return Explanation(header=header, direction_sentence=direction,
                       factor_sentences=factor_sentences, full_text=full_text)


def generate_synthetic_rows(
    n: int,
    seed: int,
    stratified: bool = False,
    factors: tuple[str, ...] = DEFAULT_FACTORS,
    model_pool: tuple[str, ...] = MODEL_NAME_POOL,
    channel_pool: tuple[str, ...] = CHANNEL_POOL,
) -> list[AttributionRow]:
    """Seeded uniform simulator over the configured name pools.

    Stratified mode overwrites the first rows with fixed coverage rows so
    every factor class, every boundary score (-6, -5, 5, 6), and every
    direction sign appears at least once.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if not factors:
        raise ConfigError("factors must be non-empty")
    rng = random.Random(seed)
    rows = [
        AttributionRow(
            model_name=rng.choice(model_pool),
            channel=rng.choice(channel_pool),
            absolute_change=rng.randint(SCORE_MIN, SCORE_MAX),
            factor_scores={name: rng.randint(SCORE_MIN, SCORE_MAX) for name in factors},
        )
        for _ in range(n)
    ]
    if stratified:
        coverage = [
            (-50, (-6, -5, 5)),
            (50, (6, 5, -5)),
            (0, (63, -33, 0)),
            (7, (-6, 6, 5)),
        ]
        for i, (change, cycle) in enumerate(coverage[: len(rows)]):
            rows[i] = AttributionRow(
                model_name=rows[i].model_name,
                channel=rows[i].channel,
                absolute_change=change,
                factor_scores={name: cycle[j % len(cycle)] for j, name in enumerate(factors)},
            )
    return rows


@dataclass
class ExplanationVerdict:
    correct: bool
    reason: str = ""


@dataclass
class ExplanationScore:
    accuracy: float
    verdicts: list[ExplanationVerdict] = field(default_factory=list)


def _detect_direction(text: str) -> str | None:
    positions = [(text.find(kw), kw) for kw in _DIRECTION_KEYWORDS if kw in text]
    if not positions:
        return None
    return min(positions)[1]


def _detect_factor_class(text: str, factor: str) -> FactorClass | None:
    at = text.find(factor.lower())
    if at < 0:
        return None
    after = text[at + len(factor):]
    hits = [(after.find(p), cls) for p, cls in _DETECT_PHRASES if p in after]
    if not hits:
        return None
    return min(hits)[1]


def judge_explanation(row: AttributionRow, candidate: str,
                      threshold: int = DEFAULT_THRESHOLD, strict: bool = False) -> ExplanationVerdict:
    oracle = ground_truth_explanation(row, threshold)
    if strict:
        if candidate == oracle.full_text:
            return ExplanationVerdict(correct=True)
        return ExplanationVerdict(correct=False, reason="text differs from oracle explanation")
    text = candidate.lower()
    expected_direction = {"a decrease": "decrease", "an increase": "increase",
                          "no change": "no change"}[_direction_phrase(row.absolute_change)]
    found_direction = _detect_direction(text)
    if found_direction is None:
        return ExplanationVerdict(correct=False, reason="no direction keyword found")
    if found_direction != expected_direction:
        return ExplanationVerdict(
            correct=False,
            reason=f"direction {found_direction!r}, expected {expected_direction!r}",
        )
    for name, score in row.factor_scores.items():
        expected = classify_factor(score, threshold)
        found = _detect_factor_class(text, name)
        if found is None:
            return ExplanationVerdict(correct=False, reason=f"factor {name!r} missing or unclassified")
        if found != expected:
            return ExplanationVerdict(
                correct=False,
                reason=f"factor {name!r} classified {found.value}, expected {expected.value}",
            )
    return ExplanationVerdict(correct=True)


def score_explanations(pairs: list[tuple[AttributionRow, str]],
                       threshold: int = DEFAULT_THRESHOLD,
                       strict: bool = False) -> ExplanationScore:
    verdicts = [judge_explanation(row, candidate, threshold, strict) for row, candidate in pairs]
    correct = sum(1 for v in verdicts if v.correct)
    accuracy = correct / len(pairs) if pairs else 0.0
    return ExplanationScore(accuracy=accuracy, verdicts=verdicts)


TABLE_PROMPT_VERSION = "table-prompt/v1"


def build_explanation_prompt(row: AttributionRow, fmt: str = "csv",
                             threshold: int = DEFAULT_THRESHOLD) -> str:
    """Instructional prompt asking a model to explain one attribution row."""
    factor_names = ", ".join(row.factor_scores)
    return "\n".join([
        "You explain changes in marketing attribution credit from a table row.",
        f"Rules: a factor score above {threshold} is a contributing factor, below "
        f"{-threshold} is a mitigating factor, and anything else is not a factor.",
        "Answer in this exact shape: '<model name> - <channel>: The absolute change "
        "of this channel is <value>%, which indicates a decrease|an increase|no change "
        "in the touch point's credit.' followed by one sentence per factor "
        f"({factor_names}) stating whether it is a contributing factor, a mitigating "
        "factor, or not a factor, with its score.",
        "",
        "Row:",
        render_row(row, fmt),
        "",
        "Explanation:",
    ])

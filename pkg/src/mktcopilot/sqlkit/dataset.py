"""Question/context/answer example loading, splitting, and few-shot prompts."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError
from .parser import ParseError, parse_create_context

DEFAULT_EVAL_COUNT = 1000
DEFAULT_SPLIT_SEED = 20240101
DEFAULT_N_SHOTS = 5

FEWSHOT_INSTRUCTION = "Given the schema, write one SQL query. Return only SQL."


class DatasetError(Exception):
    """Malformed dataset record; message carries the line number."""


class LeakageError(Exception):
    """A few-shot example overlaps the evaluation split or the target."""


@dataclass(frozen=True)
class SqlExample:
    question: str
    context: str
    answer: str


def load_sql_dataset(path: str | Path) -> list[SqlExample]:
    """Read line-delimited JSON records with question/context/answer fields.

    File order is preserved. Every context must parse under the CREATE TABLE
    rule so downstream prompt building can rely on it.
    """
    examples: list[SqlExample] = []
    try:
        fh = Path(path).open(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot open dataset: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON: {exc}") from exc
            missing = [k for k in ("question", "context", "answer") if not rec.get(k)]
            if missing:
                raise DatasetError(f"line {lineno}: missing or empty field(s): {', '.join(missing)}")
            try:
                parse_create_context(rec["context"])
            except ParseError as exc:
                raise DatasetError(f"line {lineno}: context does not parse: {exc}") from exc
            examples.append(SqlExample(
                question=rec["question"], context=rec["context"], answer=rec["answer"],
            ))
    return examples


@dataclass
class DatasetSplit:
    train: list[SqlExample]
    eval: list[SqlExample]


def split_dataset(examples: list[SqlExample], eval_count: int = DEFAULT_EVAL_COUNT,
                  seed: int = DEFAULT_SPLIT_SEED) -> DatasetSplit:
    """Seeded shuffle, then the first eval_count records become the eval split."""
    if eval_count < 1:
        raise ConfigError(f"eval_count must be >= 1, got {eval_count}")
    if eval_count > len(examples):
        raise ConfigError(f"eval_count {eval_count} exceeds dataset size {len(examples)}")
    order = list(range(len(examples)))
    random.Random(seed).shuffle(order)
    eval_split = [examples[i] for i in order[:eval_count]]
    train = [examples[i] for i in order[eval_count:]]
    return DatasetSplit(train=train, eval=eval_split)


def build_fewshot_prompt(target: SqlExample, shots: list[SqlExample],
                         n_shots: int = DEFAULT_N_SHOTS,
                         eval_examples: list[SqlExample] | None = None) -> str:
    """Deterministic few-shot prompt: instruction, n_shots worked examples,
    then the target's schema and question with the answer left open."""
    if n_shots < 0:
        raise ConfigError(f"n_shots must be >= 0, got {n_shots}")
    if n_shots > len(shots):
        raise ConfigError(f"n_shots={n_shots} but only {len(shots)} shots supplied")
    chosen = shots[:n_shots]
    eval_set = set(eval_examples) if eval_examples else set()
    for shot in chosen:
        if shot == target:
            raise LeakageError("a shot is identical to the target example")
        if shot in eval_set:
            raise LeakageError("a shot belongs to the evaluation split")
    blocks = [FEWSHOT_INSTRUCTION, ""]
    for shot in chosen:
        blocks.append(f"Schema: {shot.context}")
        blocks.append(f"Question: {shot.question}")
        blocks.append(f"SQL: {shot.answer}")
        blocks.append("")
    blocks.append(f"Schema: {target.context}")
    blocks.append(f"Question: {target.question}")
    blocks.append("SQL:")
    return "\n".join(blocks)

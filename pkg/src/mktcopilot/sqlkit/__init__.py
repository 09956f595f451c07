"""SQL generation toolkit: subset parser, canonicalizer, dataset handling,
few-shot prompting, and exact-match scoring."""

from .ast import (
    AGGREGATE_FUNCS,
    Aggregate,
    And,
    Arith,
    Between,
    Column,
    Comparison,
    CreateTable,
    InList,
    Join,
    Like,
    Neg,
    Not,
    NumberLit,
    Or,
    OrderItem,
    STAR,
    Select,
    SelectItem,
    Star,
    StringLit,
    TableRef,
    render,
    render_bool,
    render_value,
)
from .dataset import (
    DEFAULT_EVAL_COUNT,
    DEFAULT_N_SHOTS,
    DEFAULT_SPLIT_SEED,
    DatasetError,
    DatasetSplit,
    FEWSHOT_INSTRUCTION,
    LeakageError,
    SqlExample,
    build_fewshot_prompt,
    load_sql_dataset,
    split_dataset,
)
from .normalize import canonical_number, normalize_ast
from .parser import ParseError, parse_create_context, parse_sql
from .scoring import (
    AST_MATCH,
    AST_MISMATCH,
    STRING_FALLBACK_MATCH,
    STRING_FALLBACK_MISMATCH,
    MatchVerdict,
    ScoreResult,
    extract_sql,
    match_pair,
    score_predictions,
)

__all__ = [
    "AGGREGATE_FUNCS", "Aggregate", "And", "Arith", "Between", "Column",
    "Comparison", "CreateTable", "InList", "Join", "Like", "Neg", "Not",
    "NumberLit", "Or", "OrderItem", "STAR", "Select", "SelectItem", "Star",
    "StringLit", "TableRef", "render", "render_bool", "render_value",
    "DEFAULT_EVAL_COUNT", "DEFAULT_N_SHOTS", "DEFAULT_SPLIT_SEED",
    "DatasetError", "DatasetSplit", "FEWSHOT_INSTRUCTION", "LeakageError",
    "SqlExample", "build_fewshot_prompt", "load_sql_dataset", "split_dataset",
    "canonical_number", "normalize_ast",
    "ParseError", "parse_create_context", "parse_sql",
    "AST_MATCH", "AST_MISMATCH", "STRING_FALLBACK_MATCH",
    "STRING_FALLBACK_MISMATCH", "MatchVerdict", "ScoreResult", "extract_sql",
    "match_pair", "score_predictions",
]

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mktcopilot.errors import ConfigError
from mktcopilot.sqlkit import (
    AST_MATCH,
    AST_MISMATCH,
    STRING_FALLBACK_MATCH,
    STRING_FALLBACK_MISMATCH,
    DatasetError,
    LeakageError,
    SqlExample,
    build_fewshot_prompt,
    canonical_number,
    extract_sql,
    load_sql_dataset,
    match_pair,
    normalize_ast,
    parse_sql,
    render,
    score_predictions,
    split_dataset,
)

REFERENCE = "SELECT COUNT(*) FROM head WHERE age > 56"

FIXTURE_QUERIES = (Path(__file__).parent / "fixtures" / "sql_queries.txt").read_text().splitlines()


class TestNormalize:
    def test_case_folding_matches_reference(self):
        messy = parse_sql("select COUNT( * ) from HEAD where AGE>56")
        clean = parse_sql(REFERENCE)
        assert normalize_ast(messy) == normalize_ast(clean)

    def test_numeric_literal_canonicalization(self):
        assert canonical_number("56.0") == "56"
        assert canonical_number("0.50") == "0.5"
        assert canonical_number("-082") == "-82"
        assert canonical_number("0.0") == "0"
        assert normalize_ast(parse_sql("SELECT a FROM t WHERE b = 56.0")) == normalize_ast(
            parse_sql("SELECT a FROM t WHERE b = 56")
        )

    def test_neq_spelling_folds(self):
        assert normalize_ast(parse_sql("SELECT a FROM t WHERE b <> 1")) == normalize_ast(
            parse_sql("SELECT a FROM t WHERE b != 1")
        )

    def test_as_keyword_is_immaterial(self):
        assert normalize_ast(parse_sql("SELECT a FROM t AS x")) == normalize_ast(
            parse_sql("SELECT a FROM t x")
        )

    def test_lenient_sorts_and_conjuncts(self):
        a = parse_sql("SELECT x FROM t WHERE a = 1 AND b = 2")
        b = parse_sql("SELECT x FROM t WHERE b = 2 AND a = 1")
        assert normalize_ast(a, lenient=True) == normalize_ast(b, lenient=True)

    def test_strict_keeps_conjunct_order(self):
        a = parse_sql("SELECT x FROM t WHERE a = 1 AND b = 2")
        b = parse_sql("SELECT x FROM t WHERE b = 2 AND a = 1")
        assert normalize_ast(a) != normalize_ast(b)

    def test_lenient_mirrors_flipped_comparisons(self):
        a = parse_sql("SELECT x FROM t WHERE 56 < age")
        b = parse_sql("SELECT x FROM t WHERE age > 56")
        assert normalize_ast(a, lenient=True) == normalize_ast(b, lenient=True)

    @pytest.mark.parametrize("query", FIXTURE_QUERIES[:60])
    @pytest.mark.parametrize("lenient", [False, True])
    def test_idempotent(self, query, lenient):
        once = normalize_ast(parse_sql(query), lenient=lenient)
        assert normalize_ast(once, lenient=lenient) == once


class TestMatchPair:
    def test_identity(self):
        assert match_pair(REFERENCE, REFERENCE).kind == AST_MATCH

    def test_constant_difference_is_mismatch(self):
        verdict = match_pair("SELECT COUNT(*) FROM head WHERE age > 57", REFERENCE)
        assert verdict.kind == AST_MISMATCH
        assert "57" in verdict.detail and "56" in verdict.detail

    def test_string_fallback_match(self):
        verdict = match_pair("TOTALLY not sql ;", "totally   NOT sql")
        assert verdict.kind == STRING_FALLBACK_MATCH

    def test_string_fallback_mismatch(self):
        verdict = match_pair("not sql at all", "different garbage")
        assert verdict.kind == STRING_FALLBACK_MISMATCH
        assert "unparseable" in verdict.detail

    def test_fenced_prediction_unwrapped(self):
        fenced = f"```sql\n{REFERENCE}\n```"
        assert extract_sql(fenced) == REFERENCE
        assert match_pair(fenced, REFERENCE).kind == AST_MATCH

    def test_equivalence_relation_on_fixture(self):
        queries = FIXTURE_QUERIES[:40]
        for q in queries:
            assert match_pair(q, q).kind == AST_MATCH
        for a in queries[:10]:
            for b in queries[:10]:
                assert (match_pair(a, b).kind == AST_MATCH) == (match_pair(b, a).kind == AST_MATCH)

    @given(st.sampled_from(FIXTURE_QUERIES), st.sampled_from(FIXTURE_QUERIES),
           st.sampled_from(FIXTURE_QUERIES))
    @settings(max_examples=150)
    def test_transitive(self, a, b, c):
        if match_pair(a, b).kind == AST_MATCH and match_pair(b, c).kind == AST_MATCH:
            assert match_pair(a, c).kind == AST_MATCH


class TestScorePredictions:
    def test_all_identical(self):
        pairs = [(q, q) for q in FIXTURE_QUERIES[:20]]
        result = score_predictions(pairs)
        assert result.accuracy == 1.0

    def test_lenient_superset_of_strict(self):
        pairs = []
        for q in FIXTURE_QUERIES[:100]:
            pairs.append((q, q))
        pairs.append(("SELECT x FROM t WHERE a = 1 AND b = 2", "SELECT x FROM t WHERE b = 2 AND a = 1"))
        pairs.append(("SELECT COUNT(*) FROM head WHERE 56 < age", REFERENCE))
        pairs.append(("garbage", REFERENCE))
        strict = score_predictions(pairs, lenient=False)
        lenient = score_predictions(pairs, lenient=True)
        assert lenient.accuracy >= strict.accuracy
        for sv, lv in zip(strict.verdicts, lenient.verdicts):
            if sv.kind in (AST_MATCH, STRING_FALLBACK_MATCH):
                assert lv.kind in (AST_MATCH, STRING_FALLBACK_MATCH)

    def test_verdict_count_matches_pairs(self):
        result = score_predictions([(REFERENCE, REFERENCE), ("x", "y")])
        assert len(result.verdicts) == 2
        assert result.accuracy == 0.5


class TestDataset:
    def write_dataset(self, tmp_path, records):
        path = tmp_path / "data.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
        return path

    def test_reference_record(self, tmp_path):
        path = self.write_dataset(tmp_path, [{
            "question": "How many heads of the departments are older than 56?",
            "context": "CREATE TABLE head (age INTEGER)",
            "answer": REFERENCE,
        }])
        (example,) = load_sql_dataset(path)
        assert example.answer == REFERENCE

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_sql_dataset(path) == []

    def test_missing_answer_reports_line(self, tmp_path):
        path = self.write_dataset(tmp_path, [
            {"question": "q", "context": "CREATE TABLE t (a INTEGER)", "answer": "SELECT a FROM t"},
            {"question": "q", "context": "CREATE TABLE t (a INTEGER)"},
        ])
        with pytest.raises(DatasetError) as err:
            load_sql_dataset(path)
        assert "line 2" in str(err.value)

    def test_bad_context_reports_line(self, tmp_path):
        path = self.write_dataset(tmp_path, [
            {"question": "q", "context": "DROP TABLE t", "answer": "SELECT 1 FROM t"},
        ])
        with pytest.raises(DatasetError) as err:
            load_sql_dataset(path)
        assert "line 1" in str(err.value)


def example(i):
    return SqlExample(question=f"q{i}", context=f"CREATE TABLE t{i} (a INTEGER)", answer=f"SELECT a FROM t{i}")


class TestSplit:
    def test_boundary_all_eval(self):
        examples = [example(i) for i in range(10)]
        split = split_dataset(examples, eval_count=10, seed=1)
        assert split.train == []
        assert sorted(split.eval, key=lambda e: e.question) == sorted(examples, key=lambda e: e.question)

    def test_deterministic(self):
        examples = [example(i) for i in range(50)]
        a = split_dataset(examples, eval_count=10, seed=7)
        b = split_dataset(examples, eval_count=10, seed=7)
        assert a.train == b.train and a.eval == b.eval

    def test_different_seed_differs(self):
        examples = [example(i) for i in range(50)]
        a = split_dataset(examples, eval_count=10, seed=7)
        b = split_dataset(examples, eval_count=10, seed=8)
        assert a.eval != b.eval

    def test_partition(self):
        examples = [example(i) for i in range(30)]
        split = split_dataset(examples, eval_count=12, seed=3)
        assert len(split.train) == 18 and len(split.eval) == 12
        union = {e.question for e in split.train} | {e.question for e in split.eval}
        assert union == {e.question for e in examples}

    def test_eval_count_too_large(self):
        with pytest.raises(ConfigError):
            split_dataset([example(0)], eval_count=2, seed=1)

    def test_full_scale_split_sizes(self):
        examples = [SqlExample(question=f"q{i}", context="c", answer="a") for i in range(78_577)]
        split = split_dataset(examples, eval_count=1000, seed=20240101)
        assert len(split.eval) == 1000
        assert len(split.train) == 77_577


class TestFewshotPrompt:
    def test_zero_shot(self):
        target = example(0)
        prompt = build_fewshot_prompt(target, [], n_shots=0)
        assert prompt.startswith("Given the schema, write one SQL query. Return only SQL.")
        assert target.context in prompt and target.question in prompt
        assert prompt.rstrip().endswith("SQL:")

    def test_target_answer_never_in_prompt(self):
        target = example(0)
        shots = [example(i) for i in range(1, 6)]
        prompt = build_fewshot_prompt(target, shots, n_shots=5)
        assert target.answer not in prompt

    def test_deterministic(self):
        target = example(0)
        shots = [example(1), example(2)]
        assert build_fewshot_prompt(target, shots, 2) == build_fewshot_prompt(target, shots, 2)

    def test_shots_appear_in_order_with_answers(self):
        target = example(0)
        shots = [example(1), example(2)]
        prompt = build_fewshot_prompt(target, shots, 2)
        assert prompt.index(shots[0].answer) < prompt.index(shots[1].answer)

    def test_leakage_from_eval_split(self):
        target = example(0)
        leaked = example(1)
        with pytest.raises(LeakageError):
            build_fewshot_prompt(target, [leaked], n_shots=1, eval_examples=[leaked])

    def test_shot_equal_to_target_rejected(self):
        target = example(0)
        with pytest.raises(LeakageError):
            build_fewshot_prompt(target, [example(0)], n_shots=1)

    def test_insufficient_shots(self):
        with pytest.raises(ConfigError):
            build_fewshot_prompt(example(0), [example(1)], n_shots=5)

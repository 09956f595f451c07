import random
import string

import pytest

from mktcopilot.sqlkit import (
    Aggregate,
    And,
    Between,
    Column,
    Comparison,
    InList,
    Join,
    Like,
    NumberLit,
    Or,
    OrderItem,
    ParseError,
    STAR,
    Select,
    SelectItem,
    Star,
    StringLit,
    TableRef,
    parse_create_context,
    parse_sql,
    render,
)

REFERENCE_QUERY = "SELECT COUNT(*) FROM head WHERE age > 56"


class TestBasicParsing:
    def test_reference_query(self):
        ast = parse_sql(REFERENCE_QUERY)
        assert ast == Select(
            items=(SelectItem(expr=Aggregate(func="count", arg=STAR)),),
            table=TableRef(name="head"),
            where=Comparison(op=">", left=Column(name="age"), right=NumberLit("56")),
        )

    def test_bare_literal_select_is_outside_subset(self):
        with pytest.raises(ParseError):
            parse_sql("select 1")

    def test_full_clause_tree(self):
        ast = parse_sql("SELECT a FROM t WHERE b IN (1,2) ORDER BY a DESC LIMIT 3")
        assert ast == Select(
            items=(SelectItem(expr=Column(name="a")),),
            table=TableRef(name="t"),
            where=InList(operand=Column(name="b"), items=(NumberLit("1"), NumberLit("2"))),
            order_by=(OrderItem(expr=Column(name="a"), desc=True),),
            limit=3,
        )

    def test_star(self):
        ast = parse_sql("SELECT * FROM t")
        assert isinstance(ast.items, Star)

    def test_distinct_and_alias(self):
        ast = parse_sql("SELECT DISTINCT name AS n FROM people AS p")
        assert ast.distinct
        assert ast.items[0].alias == "n"
        assert ast.table == TableRef(name="people", alias="p")

    def test_implicit_alias(self):
        ast = parse_sql("SELECT p.name FROM people p")
        assert ast.table.alias == "p"
        assert ast.items[0].expr == Column(name="name", table="p")

    def test_joins(self):
        ast = parse_sql(
            "SELECT t1.a FROM t1 JOIN t2 ON t1.id = t2.id LEFT JOIN t3 ON t2.id = t3.id"
        )
        assert [j.kind for j in ast.joins] == ["inner", "left"]
        assert ast.joins[0].on == Comparison(
            op="=", left=Column(name="id", table="t1"), right=Column(name="id", table="t2")
        )

    def test_left_outer_join_same_as_left(self):
        a = parse_sql("SELECT a FROM t LEFT JOIN u ON t.x = u.x")
        b = parse_sql("SELECT a FROM t LEFT OUTER JOIN u ON t.x = u.x")
        assert a == b

    def test_boolean_structure(self):
        ast = parse_sql("SELECT a FROM t WHERE x = 1 AND y = 2 OR NOT z = 3")
        assert isinstance(ast.where, Or)
        assert isinstance(ast.where.items[0], And)

    def test_grouped_boolean(self):
        ast = parse_sql("SELECT a FROM t WHERE x = 1 AND (y = 2 OR z = 3)")
        assert isinstance(ast.where, And)
        assert isinstance(ast.where.items[1], Or)

    def test_parenthesized_value_operand(self):
        assert parse_sql("SELECT a FROM t WHERE (age) > 56") == parse_sql(
            "SELECT a FROM t WHERE age > 56"
        )

    def test_like_between_not(self):
        ast = parse_sql(
            "SELECT a FROM t WHERE name LIKE 'x%' AND age BETWEEN 5 AND 10 AND b NOT IN (1)"
        )
        like, between, notin = ast.where.items
        assert like == Like(operand=Column(name="name"), pattern=StringLit("x%"))
        assert between == Between(operand=Column(name="age"), low=NumberLit("5"), high=NumberLit("10"))
        assert notin.negated

    def test_negative_number_literal(self):
        ast = parse_sql("SELECT a FROM t WHERE x = -82")
        assert ast.where.right == NumberLit("-82")

    def test_string_escape(self):
        ast = parse_sql("SELECT a FROM t WHERE name = 'O''Brien'")
        assert ast.where.right == StringLit("O'Brien")

    def test_aggregates_and_arithmetic(self):
        ast = parse_sql("SELECT MAX(age) - MIN(age) FROM t")
        item = ast.items[0].expr
        assert item.op == "-"
        assert item.left == Aggregate(func="max", arg=Column(name="age"))

    def test_count_distinct(self):
        ast = parse_sql("SELECT COUNT(DISTINCT city) FROM t")
        assert ast.items[0].expr == Aggregate(func="count", arg=Column(name="city"), distinct=True)

    def test_group_having_order_by_aggregate(self):
        ast = parse_sql(
            "SELECT city, COUNT(*) FROM t GROUP BY city HAVING COUNT(*) > 1 "
            "ORDER BY COUNT(*) DESC LIMIT 1"
        )
        assert ast.group_by == (Column(name="city"),)
        assert ast.having == Comparison(
            op=">", left=Aggregate(func="count", arg=STAR), right=NumberLit("1")
        )
        assert ast.order_by[0].expr == Aggregate(func="count", arg=STAR)

    def test_trailing_semicolon(self):
        assert parse_sql("SELECT a FROM t;") == parse_sql("SELECT a FROM t")

    def test_case_insensitive_keywords(self):
        assert parse_sql("select A from T where B = 1") == parse_sql(
            "SELECT A FROM T WHERE B = 1"
        )


class TestParseErrors:
    @pytest.mark.parametrize("bad", [
        "",
        "SELECT",
        "SELECT FROM t",
        "SELECT * FROM",
        "SELECT * WHERE a = 1",
        "SELECT * FROM t WHERE",
        "SELECT * FROM t LIMIT x",
        "SELECT * FROM t LIMIT -1",
        "SELECT a FROM t WHERE a >",
        "SELECT a FROM t WHERE a IN ()",
        "SELECT a FROM t ORDER",
        "INSERT INTO t VALUES (1)",
        "SELECT a FROM t WHERE name LIKE 5",
        "SELECT a b c FROM t",
        "SELECT a FROM t JOIN u",
        "SELECT a FROM t GROUP city",
        "SELECT a FROM t WHERE 'unterminated",
    ])
    def test_rejected(self, bad):
        with pytest.raises(ParseError):
            parse_sql(bad)

    def test_error_carries_offset_and_expected(self):
        with pytest.raises(ParseError) as err:
            parse_sql("SELECT a, FROM t")
        assert err.value.offset == 10
        assert "value expression" in err.value.expected

    def test_byte_offset_counts_utf8(self):
        text = "SELECT a FROM t WHERE x = 'é' AND"
        with pytest.raises(ParseError) as err:
            parse_sql(text)
        assert err.value.offset == len(text.encode("utf-8"))


class TestRoundTrip:
    CASES = [
        REFERENCE_QUERY,
        "SELECT * FROM t",
        "SELECT DISTINCT a, b FROM t",
        "SELECT a AS x FROM t y",
        "SELECT COUNT(DISTINCT a) FROM t WHERE b <> 'z'",
        "SELECT a FROM t WHERE a = 1 AND (b = 2 OR c = 3)",
        "SELECT a FROM t WHERE NOT (a = 1 OR b = 2)",
        "SELECT a FROM t WHERE a BETWEEN -5 AND 5",
        "SELECT a FROM t WHERE a NOT LIKE '%x%'",
        "SELECT a FROM t WHERE a IN (1, 2, 3) OR b IN ('x', 'y')",
        "SELECT t1.a, t2.b FROM t1 JOIN t2 ON t1.id = t2.id WHERE t2.c >= 10",
        "SELECT city, COUNT(*) FROM t GROUP BY city HAVING COUNT(*) > 1 ORDER BY COUNT(*) DESC, city LIMIT 5",
        "SELECT MAX(a) - MIN(a) FROM t",
        "SELECT a + b * c FROM t",
        "SELECT (a + b) * c FROM t",
        "SELECT -a FROM t",
        "SELECT a / 2 + 1 FROM t WHERE b = -3.5",
    ]

    @pytest.mark.parametrize("query", CASES)
    def test_render_reparses_to_same_ast(self, query):
        ast = parse_sql(query)
        assert parse_sql(render(ast)) == ast


class TestFuzzTotality:
    def test_random_inputs_never_crash(self):
        rng = random.Random(99)
        pool = string.ascii_letters + string.digits + " '\"()*,.<>=!;%-+/\n\t" + "é☃"
        words = ["SELECT", "FROM", "WHERE", "AND", "OR", "count", "(", ")", "'a'", "1", "*"]
        for _ in range(2000):
            if rng.random() < 0.5:
                text = "".join(rng.choice(pool) for _ in range(rng.randint(0, 60)))
            else:
                text = " ".join(rng.choice(words) for _ in range(rng.randint(0, 15)))
            try:
                parse_sql(text)
            except ParseError:
                pass

    def test_deep_nesting_is_a_parse_error(self):
        with pytest.raises(ParseError):
            parse_sql("SELECT a FROM t WHERE " + "(" * 500 + "a = 1" + ")" * 500)


class TestDdl:
    def test_single_table(self):
        (table,) = parse_create_context("CREATE TABLE head (age INTEGER)")
        assert table.name == "head"
        assert table.columns == (("age", "INTEGER"),)

    def test_multiple_tables_and_types(self):
        tables = parse_create_context(
            "CREATE TABLE a (x VARCHAR(50), y INTEGER PRIMARY KEY); "
            "CREATE TABLE b (z NUMERIC(10,2))"
        )
        assert [t.name for t in tables] == ["a", "b"]
        assert tables[0].columns[0] == ("x", "VARCHAR(50)")
        assert tables[1].columns == (("z", "NUMERIC(10,2)"),)

    def test_not_ddl(self):
        with pytest.raises(ParseError):
            parse_create_context("SELECT * FROM t")

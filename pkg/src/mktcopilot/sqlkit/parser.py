"""Recursive-descent parser for the SELECT subset and the CREATE TABLE rule.

Total by construction: any input either yields an AST or a ParseError
carrying the byte offset and the token set that would have been accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    AGGREGATE_FUNCS,
    Aggregate,
    And,
    Arith,
    Between,
    BoolExpr,
    Column,
    Comparison,
    CreateTable,
    InList,
    Join,
    Like,
    Neg,
    Not,
    NumberLit,
    OrderItem,
    STAR,
    Select,
    SelectItem,
    Star,
    StringLit,
    TableRef,
    ValueExpr,
    make_and,
    make_or,
)

_MAX_DEPTH = 80

RESERVED = {
    "SELECT", "DISTINCT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "ORDER",
    "LIMIT", "JOIN", "INNER", "LEFT", "RIGHT", "FULL", "OUTER", "ON", "AS",
    "AND", "OR", "NOT", "IN", "BETWEEN", "LIKE", "ASC", "DESC",
}

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)")
_SYMBOLS = ("<=", ">=", "<>", "!=", "=", "<", ">", "(", ")", ",", ".", "*", ";", "+", "-", "/")


class ParseError(Exception):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = expected
        detail = f"{message} at byte {offset}"
        if expected:
            detail += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(detail)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER STRING SYMBOL EOF
    value: str
    pos: int  # character offset

    def upper(self) -> str:
        return self.value.upper()


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(Token("IDENT", m.group(), i))
            i = m.end()
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            tokens.append(Token("NUMBER", m.group(), i))
            i = m.end()
            continue
        if ch == "'":
            j = i + 1
            value = []
            while True:
                if j >= n:
                    raise ParseError("unterminated string literal", _byte_offset(text, i))
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        value.append("'")
                        j += 2
                        continue
                    break
                value.append(text[j])
                j += 1
            tokens.append(Token("STRING", "".join(value), i))
            i = j + 1
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("SYMBOL", sym, i))
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", _byte_offset(text, i))
    tokens.append(Token("EOF", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.depth = 0
        self._bool_fail: set[int] = set()

    # -- token helpers -----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, expected: set[str]) -> ParseError:
        tok = self.peek()
        label = tok.value if tok.kind != "EOF" else "end of input"
        return ParseError(f"unexpected {label!r}", _byte_offset(self.text, tok.pos),
                          frozenset(expected))

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.upper() in words

    def eat_keyword(self, *words: str) -> bool:
        if self.at_keyword(*words):
            self.next()
            return True
        return False

    def expect_keyword(self, word: str) -> None:
        if not self.eat_keyword(word):
            raise self.error({word})

    def at_symbol(self, *symbols: str) -> bool:
        tok = self.peek()
        return tok.kind == "SYMBOL" and tok.value in symbols

    def eat_symbol(self, *symbols: str) -> bool:
        if self.at_symbol(*symbols):
            self.next()
            return True
        return False

    def expect_symbol(self, symbol: str) -> None:
        if not self.eat_symbol(symbol):
            raise self.error({symbol})

    def expect_ident(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.upper() in RESERVED:
            raise self.error({what})
        self.next()
        return tok.value

    def _enter(self) -> None:
        self.depth += 1
        if self.depth > _MAX_DEPTH:
            raise ParseError("expression nested too deeply",
                             _byte_offset(self.text, self.peek().pos))

    def _leave(self) -> None:
        self.depth -= 1

    # -- statements --------------------------------------------------------

    def parse_select_statement(self) -> Select:
        self.expect_keyword("SELECT")
        distinct = self.eat_keyword("DISTINCT")
        items = self.parse_select_items()
        self.expect_keyword("FROM")
        table = self.parse_table_ref()
        joins = []
        while self.at_keyword("JOIN", "INNER", "LEFT", "RIGHT", "FULL"):
            joins.append(self.parse_join())
        where = None
        if self.eat_keyword("WHERE"):
            where = self.parse_bool_expr()
        group_by: tuple = ()
        if self.eat_keyword("GROUP"):
            self.expect_keyword("BY")
            group_by = tuple(self.parse_column_list())
        having = None
        if self.eat_keyword("HAVING"):
            having = self.parse_bool_expr()
        order_by: tuple = ()
        if self.eat_keyword("ORDER"):
            self.expect_keyword("BY")
            order_by = tuple(self.parse_order_items())
        limit = None
        if self.eat_keyword("LIMIT"):
            tok = self.peek()
            if tok.kind != "NUMBER" or not tok.value.isdigit():
                raise self.error({"integer"})
            self.next()
            limit = int(tok.value)
        return Select(items=items, table=table, distinct=distinct, joins=tuple(joins),
                      where=where, group_by=group_by, having=having,
                      order_by=tuple(order_by), limit=limit)

    def parse_select_items(self):
        if self.eat_symbol("*"):
            return STAR
        items = [self.parse_select_item()]
        while self.eat_symbol(","):
            items.append(self.parse_select_item())
        return tuple(items)

    def parse_select_item(self) -> SelectItem:
        expr = self.parse_value_expr()
        alias = None
        if self.eat_keyword("AS"):
            alias = self.expect_ident("alias")
        elif self.peek().kind == "IDENT" and self.peek().upper() not in RESERVED:
            alias = self.next().value
        return SelectItem(expr=expr, alias=alias)

    def parse_table_ref(self) -> TableRef:
        name = self.expect_ident("table name")
        alias = None
        if self.eat_keyword("AS"):
            alias = self.expect_ident("alias")
        elif self.peek().kind == "IDENT" and self.peek().upper() not in RESERVED:
            alias = self.next().value
        return TableRef(name=name, alias=alias)

    def parse_join(self) -> Join:
        kind = "inner"
        if self.eat_keyword("INNER"):
            self.expect_keyword("JOIN")
        elif self.at_keyword("LEFT", "RIGHT", "FULL"):
            kind = self.next().value.lower()
            self.eat_keyword("OUTER")
            self.expect_keyword("JOIN")
        else:
            self.expect_keyword("JOIN")
        table = self.parse_table_ref()
        self.expect_keyword("ON")
        on = self.parse_bool_expr()
        return Join(kind=kind, table=table, on=on)

    def parse_column_list(self) -> list[Column]:
        cols = [self.parse_column()]
        while self.eat_symbol(","):
            cols.append(self.parse_column())
        return cols

    def parse_column(self) -> Column:
        first = self.expect_ident("column name")
        if self.eat_symbol("."):
            return Column(name=self.expect_ident("column name"), table=first)
        return Column(name=first)

    def parse_order_items(self) -> list[OrderItem]:
        items = []
        while True:
            expr = self.parse_value_expr()
            desc = False
            if self.eat_keyword("DESC"):
                desc = True
            else:
                self.eat_keyword("ASC")
            items.append(OrderItem(expr=expr, desc=desc))
            if not self.eat_symbol(","):
                return items

    # -- boolean expressions ------------------------------------------------

    def parse_bool_expr(self) -> BoolExpr:
        self._enter()
        try:
            terms = [self.parse_bool_term()]
            while self.eat_keyword("OR"):
                terms.append(self.parse_bool_term())
            return make_or(terms)
        finally:
            self._leave()

    def parse_bool_term(self) -> BoolExpr:
        factors = [self.parse_bool_factor()]
        while self.eat_keyword("AND"):
            factors.append(self.parse_bool_factor())
        return make_and(factors)

    def parse_bool_factor(self) -> BoolExpr:
        if self.eat_keyword("NOT"):
            return Not(self.parse_bool_factor())
        if self.at_symbol("("):
            # Could be a grouped boolean or a parenthesized value operand;
            # try the boolean reading first and fall back on failure.
            mark = self.pos
            if mark not in self._bool_fail:
                self.next()
                try:
                    inner = self.parse_bool_expr()
                    self.expect_symbol(")")
                    return inner
                except ParseError:
                    self._bool_fail.add(mark)
                    self.pos = mark
        return self.parse_predicate()

    def parse_predicate(self) -> BoolExpr:
        operand = self.parse_value_expr()
        if self.peek().kind == "SYMBOL" and self.peek().value in ("=", "!=", "<>", "<", ">", "<=", ">="):
            op = self.next().value
            return Comparison(op=op, left=operand, right=self.parse_value_expr())
        negated = self.eat_keyword("NOT")
        if self.eat_keyword("LIKE"):
            tok = self.peek()
            if tok.kind != "STRING":
                raise self.error({"string literal"})
            self.next()
            return Like(operand=operand, pattern=StringLit(tok.value), negated=negated)
        if self.eat_keyword("IN"):
            self.expect_symbol("(")
            items = [self.parse_literal()]
            while self.eat_symbol(","):
                items.append(self.parse_literal())
            self.expect_symbol(")")
            return InList(operand=operand, items=tuple(items), negated=negated)
        if self.eat_keyword("BETWEEN"):
            low = self.parse_value_expr()
            self.expect_keyword("AND")
            high = self.parse_value_expr()
            return Between(operand=operand, low=low, high=high, negated=negated)
        expected = {"=", "!=", "<>", "<", ">", "<=", ">=", "LIKE", "IN", "BETWEEN"}
        raise self.error(expected if not negated else {"LIKE", "IN", "BETWEEN"})

    def parse_literal(self) -> ValueExpr:
        negative = self.eat_symbol("-")
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            return NumberLit(("-" if negative else "") + tok.value)
        if tok.kind == "STRING" and not negative:
            self.next()
            return StringLit(tok.value)
        raise self.error({"literal"})

    # -- value expressions ---------------------------------------------------

    def parse_value_expr(self) -> ValueExpr:
        self._enter()
        try:
            left = self.parse_term()
            while self.at_symbol("+", "-"):
                op = self.next().value
                left = Arith(op=op, left=left, right=self.parse_term())
            return left
        finally:
            self._leave()

    def parse_term(self) -> ValueExpr:
        left = self.parse_factor()
        while True:
            if self.at_symbol("/"):
                self.next()
                left = Arith(op="/", left=left, right=self.parse_factor())
            elif self.at_symbol("*") and self._star_is_multiplication():
                self.next()
                left = Arith(op="*", left=left, right=self.parse_factor())
            else:
                return left

    def _star_is_multiplication(self) -> bool:
        after = self.peek(1)
        return after.kind in ("IDENT", "NUMBER", "STRING") or (
            after.kind == "SYMBOL" and after.value in ("(", "-")
        )

    def parse_factor(self) -> ValueExpr:
        if self.eat_symbol("-"):
            operand = self.parse_factor()
            if isinstance(operand, NumberLit) and not operand.text.startswith("-"):
                return NumberLit("-" + operand.text)
            return Neg(operand)
        return self.parse_atom()

    def parse_atom(self) -> ValueExpr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            return NumberLit(tok.value)
        if tok.kind == "STRING":
            self.next()
            return StringLit(tok.value)
        if self.eat_symbol("("):
            self._enter()
            try:
                inner = self.parse_value_expr()
            finally:
                self._leave()
            self.expect_symbol(")")
            return inner
        if tok.kind == "IDENT":
            if tok.upper() in map(str.upper, AGGREGATE_FUNCS) and self.peek(1).kind == "SYMBOL" \
                    and self.peek(1).value == "(":
                return self.parse_aggregate()
            if tok.upper() in RESERVED:
                raise self.error({"value expression"})
            return self.parse_column()
        raise self.error({"value expression"})

    def parse_aggregate(self) -> Aggregate:
        func = self.next().value.lower()
        self.expect_symbol("(")
        distinct = self.eat_keyword("DISTINCT")
        if self.eat_symbol("*"):
            arg: ValueExpr | Star = STAR
        else:
            arg = self.parse_value_expr()
        self.expect_symbol(")")
        return Aggregate(func=func, arg=arg, distinct=distinct)

    # -- DDL -----------------------------------------------------------------

    def parse_create_tables(self) -> list[CreateTable]:
        tables = [self.parse_create_table()]
        while True:
            while self.eat_symbol(";"):
                pass
            if self.peek().kind == "EOF":
                return tables
            tables.append(self.parse_create_table())

    def parse_create_table(self) -> CreateTable:
        tok = self.peek()
        if not (tok.kind == "IDENT" and tok.upper() == "CREATE"):
            raise self.error({"CREATE"})
        self.next()
        tok = self.peek()
        if not (tok.kind == "IDENT" and tok.upper() == "TABLE"):
            raise self.error({"TABLE"})
        self.next()
        name = self.expect_ident("table name")
        self.expect_symbol("(")
        columns = [self.parse_column_def()]
        while self.eat_symbol(","):
            columns.append(self.parse_column_def())
        self.expect_symbol(")")
        return CreateTable(name=name, columns=tuple(columns))

    def parse_column_def(self) -> tuple[str, str]:
        name = self.expect_ident("column name")
        type_parts: list[str] = []
        while True:
            tok = self.peek()
            if tok.kind == "IDENT" and tok.upper() not in RESERVED:
                self.next()
                type_parts.append(tok.value.upper())
            elif tok.kind == "SYMBOL" and tok.value == "(":
                self.next()
                nums = []
                tok = self.peek()
                while tok.kind == "NUMBER":
                    self.next()
                    nums.append(tok.value)
                    if not self.eat_symbol(","):
                        break
                    tok = self.peek()
                self.expect_symbol(")")
                if type_parts:
                    type_parts[-1] += f"({','.join(nums)})"
            else:
                break
        if not type_parts:
            raise self.error({"column type"})
        return (name, " ".join(type_parts))


def parse_sql(text: str) -> Select:
    """Parse one SELECT statement; a trailing semicolon is permitted."""
    try:
        parser = _Parser(text)
        select = parser.parse_select_statement()
        while parser.eat_symbol(";"):
            pass
        if parser.peek().kind != "EOF":
            raise parser.error({"end of input"})
        return select
    except ParseError:
        raise
    except RecursionError:
        raise ParseError("expression nested too deeply", 0) from None


def parse_create_context(text: str) -> list[CreateTable]:
    """Parse one or more CREATE TABLE statements (dataset context fields)."""
    try:
        parser = _Parser(text)
        return parser.parse_create_tables()
    except ParseError:
        raise
    except RecursionError:
        raise ParseError("expression nested too deeply", 0) from None

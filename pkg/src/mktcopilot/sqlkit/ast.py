"""AST for the SELECT-only SQL subset, plus the canonical renderer.

Node equality is plain dataclass equality, so two queries match exactly when
their trees match. Grouping parentheses are not represented: the tree shape
already encodes precedence, and the renderer re-inserts parentheses wherever
the grammar needs them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

AGGREGATE_FUNCS = ("count", "sum", "avg", "min", "max")

COMPARE_OPS = ("=", "!=", "<>", "<", ">", "<=", ">=")


@dataclass(frozen=True)
class Star:
    pass


STAR = Star()


@dataclass(frozen=True)
class Column:
    name: str
    table: str | None = None


@dataclass(frozen=True)
class NumberLit:
    text: str


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class Aggregate:
    func: str
    arg: Union["ValueExpr", Star]
    distinct: bool = False


@dataclass(frozen=True)
class Arith:
    op: str  # + - * /
    left: "ValueExpr"
    right: "ValueExpr"


@dataclass(frozen=True)
class Neg:
    operand: "ValueExpr"


ValueExpr = Union[Column, NumberLit, StringLit, Aggregate, Arith, Neg]


@dataclass(frozen=True)
class Comparison:
    op: str
    left: ValueExpr
    right: ValueExpr


@dataclass(frozen=True)
class Like:
    operand: ValueExpr
    pattern: StringLit
    negated: bool = False


@dataclass(frozen=True)
class InList:
    operand: ValueExpr
    items: tuple[ValueExpr, ...]
    negated: bool = False


@dataclass(frozen=True)
class Between:
    operand: ValueExpr
    low: ValueExpr
    high: ValueExpr
    negated: bool = False


@dataclass(frozen=True)
class Not:
    operand: "BoolExpr"


@dataclass(frozen=True)
class And:
    items: tuple["BoolExpr", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["BoolExpr", ...]


BoolExpr = Union[Comparison, Like, InList, Between, Not, And, Or]


def make_and(items: list["BoolExpr"]) -> "BoolExpr":
    flat: list[BoolExpr] = []
    for item in items:
        flat.extend(item.items) if isinstance(item, And) else flat.append(item)
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def make_or(items: list["BoolExpr"]) -> "BoolExpr":
    flat: list[BoolExpr] = []
    for item in items:
        flat.extend(item.items) if isinstance(item, Or) else flat.append(item)
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


@dataclass(frozen=True)
class SelectItem:
    expr: ValueExpr
    alias: str | None = None


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: str | None = None


@dataclass(frozen=True)
class Join:
    kind: str  # inner | left | right | full
    table: TableRef
    on: BoolExpr


@dataclass(frozen=True)
class OrderItem:
    expr: ValueExpr
    desc: bool = False


@dataclass(frozen=True)
class Select:
    items: Union[tuple[SelectItem, ...], Star]
    table: TableRef
    distinct: bool = False
    joins: tuple[Join, ...] = ()
    where: BoolExpr | None = None
    group_by: tuple[Column, ...] = ()
    having: BoolExpr | None = None
    order_by: tuple[OrderItem, ...] = ()
    limit: int | None = None


@dataclass(frozen=True)
class CreateTable:
    name: str
    columns: tuple[tuple[str, str], ...]  # (column name, type text)


_JOIN_KEYWORD = {"inner": "JOIN", "left": "LEFT JOIN", "right": "RIGHT JOIN", "full": "FULL JOIN"}


def render_value(expr: ValueExpr | Star) -> str:
    if isinstance(expr, Star):
        return "*"
    if isinstance(expr, Column):
        return f"{expr.table}.{expr.name}" if expr.table else expr.name
    if isinstance(expr, NumberLit):
        return expr.text
    if isinstance(expr, StringLit):
        return "'" + expr.value.replace("'", "''") + "'"
    if isinstance(expr, Aggregate):
        inner = ("DISTINCT " if expr.distinct else "") + render_value(expr.arg)
        return f"{expr.func.upper()}({inner})"
    if isinstance(expr, Neg):
        return "-" + _render_operand(expr.operand, level=3)
    if isinstance(expr, Arith):
        level = 1 if expr.op in ("+", "-") else 2
        left = _render_operand(expr.left, level)
        # same-precedence right child needs parens to keep left associativity
        right = _render_operand(expr.right, level + 1)
        return f"{left} {expr.op} {right}"
    raise TypeError(f"not a value expression: {expr!r}")


def _value_level(expr) -> int:
    if isinstance(expr, Arith):
        return 1 if expr.op in ("+", "-") else 2
    if isinstance(expr, Neg):
        return 3
    return 4


def _render_operand(expr, level: int) -> str:
    text = render_value(expr)
    return f"({text})" if _value_level(expr) < level else text


def render_bool(expr: BoolExpr) -> str:
    if isinstance(expr, Comparison):
        return f"{render_value(expr.left)} {expr.op} {render_value(expr.right)}"
    if isinstance(expr, Like):
        op = "NOT LIKE" if expr.negated else "LIKE"
        return f"{render_value(expr.operand)} {op} {render_value(expr.pattern)}"
    if isinstance(expr, InList):
        op = "NOT IN" if expr.negated else "IN"
        items = ", ".join(render_value(i) for i in expr.items)
        return f"{render_value(expr.operand)} {op} ({items})"
    if isinstance(expr, Between):
        op = "NOT BETWEEN" if expr.negated else "BETWEEN"
        return (f"{render_value(expr.operand)} {op} "
                f"{render_value(expr.low)} AND {render_value(expr.high)}")
    if isinstance(expr, Not):
        return "NOT " + _render_bool_operand(expr.operand, level=3)
    if isinstance(expr, And):
        return " AND ".join(_render_bool_operand(i, level=2) for i in expr.items)
    if isinstance(expr, Or):
        return " OR ".join(_render_bool_operand(i, level=1) for i in expr.items)
    raise TypeError(f"not a boolean expression: {expr!r}")


def _bool_level(expr) -> int:
    if isinstance(expr, Or):
        return 1
    if isinstance(expr, And):
        return 2
    if isinstance(expr, Not):
        return 3
    return 4


def _render_bool_operand(expr, level: int) -> str:
    text = render_bool(expr)
    return f"({text})" if _bool_level(expr) < level else text


def render(select: Select) -> str:
    parts = ["SELECT"]
    if select.distinct:
        parts.append("DISTINCT")
    if isinstance(select.items, Star):
        parts.append("*")
    else:
        rendered = []
        for item in select.items:
            text = render_value(item.expr)
            if item.alias:
                text += f" AS {item.alias}"
            rendered.append(text)
        parts.append(", ".join(rendered))
    parts.append("FROM")
    parts.append(select.table.name + (f" {select.table.alias}" if select.table.alias else ""))
    for join in select.joins:
        table = join.table.name + (f" {join.table.alias}" if join.table.alias else "")
        parts.append(f"{_JOIN_KEYWORD[join.kind]} {table} ON {render_bool(join.on)}")
    if select.where is not None:
        parts.append("WHERE " + render_bool(select.where))
    if select.group_by:
        parts.append("GROUP BY " + ", ".join(render_value(c) for c in select.group_by))
    if select.having is not None:
        parts.append("HAVING " + render_bool(select.having))
    if select.order_by:
        keys = []
        for item in select.order_by:
            keys.append(render_value(item.expr) + (" DESC" if item.desc else ""))
        parts.append("ORDER BY " + ", ".join(keys))
    if select.limit is not None:
        parts.append(f"LIMIT {select.limit}")
    return " ".join(parts)

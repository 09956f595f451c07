"""AST canonicalization used by the match scorer.

Strict normalization: case-fold identifiers, canonicalize numeric literals
by value, fold <> into !=. Lenient additionally sorts AND conjuncts and
orients comparisons so commutative rewrites compare equal.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation

from .ast import (
    Aggregate,
    And,
    Arith,
    Between,
    BoolExpr,
    Column,
    Comparison,
    InList,
    Join,
    Like,
    Neg,
    Not,
    NumberLit,
    Or,
    OrderItem,
    Select,
    SelectItem,
    Star,
    StringLit,
    TableRef,
    ValueExpr,
    make_and,
    render_bool,
    render_value,
)

_MIRROR_OP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "=": "=", "!=": "!="}


def canonical_number(text: str) -> str:
    try:
        value = Decimal(text)
    except InvalidOperation:
        return text
    if value == 0:
        return "0"
    return format(value.normalize(), "f")


def _norm_value(expr: ValueExpr | Star) -> ValueExpr | Star:
    if isinstance(expr, Star):
        return expr
    if isinstance(expr, Column):
        return Column(name=expr.name.lower(), table=expr.table.lower() if expr.table else None)
    if isinstance(expr, NumberLit):
        return NumberLit(canonical_number(expr.text))
    if isinstance(expr, StringLit):
        return expr
    if isinstance(expr, Aggregate):
        return Aggregate(func=expr.func.lower(), arg=_norm_value(expr.arg), distinct=expr.distinct)
    if isinstance(expr, Neg):
        operand = _norm_value(expr.operand)
        if isinstance(operand, NumberLit):
            return NumberLit(canonical_number("-" + operand.text))
        return Neg(operand)
    if isinstance(expr, Arith):
        return Arith(op=expr.op, left=_norm_value(expr.left), right=_norm_value(expr.right))
    raise TypeError(f"not a value expression: {expr!r}")


def _norm_bool(expr: BoolExpr, lenient: bool) -> BoolExpr:
    if isinstance(expr, Comparison):
        op = "!=" if expr.op == "<>" else expr.op
        left = _norm_value(expr.left)
        right = _norm_value(expr.right)
        if lenient and op in _MIRROR_OP and render_value(left) > render_value(right):
            left, right, op = right, left, _MIRROR_OP[op]
        return Comparison(op=op, left=left, right=right)
    if isinstance(expr, Like):
        return Like(operand=_norm_value(expr.operand), pattern=expr.pattern, negated=expr.negated)
    if isinstance(expr, InList):
        items = tuple(_norm_value(i) for i in expr.items)
        return InList(operand=_norm_value(expr.operand), items=items, negated=expr.negated)
    if isinstance(expr, Between):
        return Between(operand=_norm_value(expr.operand), low=_norm_value(expr.low),
                       high=_norm_value(expr.high), negated=expr.negated)
    if isinstance(expr, Not):
        return Not(_norm_bool(expr.operand, lenient))
    if isinstance(expr, And):
        items = [_norm_bool(i, lenient) for i in expr.items]
        if lenient:
            items.sort(key=render_bool)
        return make_and(items)
    if isinstance(expr, Or):
        return Or(tuple(_norm_bool(i, lenient) for i in expr.items))
    raise TypeError(f"not a boolean expression: {expr!r}")


def normalize_ast(select: Select, lenient: bool = False) -> Select:
    if isinstance(select.items, Star):
        items: tuple[SelectItem, ...] | Star = select.items
    else:
        items = tuple(
            SelectItem(expr=_norm_value(i.expr), alias=i.alias.lower() if i.alias else None)
            for i in select.items
        )
    table = TableRef(name=select.table.name.lower(),
                     alias=select.table.alias.lower() if select.table.alias else None)
    joins = tuple(
        Join(kind=j.kind, on=_norm_bool(j.on, lenient),
             table=TableRef(name=j.table.name.lower(),
                            alias=j.table.alias.lower() if j.table.alias else None))
        for j in select.joins
    )
    return Select(
        items=items,
        table=table,
        distinct=select.distinct,
        joins=joins,
        where=_norm_bool(select.where, lenient) if select.where is not None else None,
        group_by=tuple(_norm_value(c) for c in select.group_by),
        having=_norm_bool(select.having, lenient) if select.having is not None else None,
        order_by=tuple(OrderItem(expr=_norm_value(o.expr), desc=o.desc) for o in select.order_by),
        limit=select.limit,
    )

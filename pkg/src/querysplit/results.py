"""Result sets, typed column building, and scalar evaluation primitives."""

from __future__ import annotations

from array import array
from collections import Counter
from dataclasses import dataclass

from .errors import QueryTypeMismatch
from .sqlang import Aggregate, BoundQuery, QueryAst


@dataclass
class ResultSet:
    columns: list[str]
    rows: list[tuple]

    def __len__(self) -> int:
        return len(self.rows)

    def multiset(self) -> Counter:
        return Counter(self.rows)


class ColumnBuilder:
    """Appends raw CSV cells as typed values; empty cells become None.

    Numeric columns use compact array storage until the first NULL forces a
    plain list.
    """

    __slots__ = ("tag", "data")

    def __init__(self, tag: str):
        self.tag = tag
        if tag == "int":
            self.data: list | array = array("q")
        elif tag == "float":
            self.data = array("d")
        else:
            self.data = []

    def append_text(self, text: str) -> None:
        if text == "":
            value = None
        elif self.tag == "int":
            value = int(text)
        elif self.tag == "float":
            value = float(text)
        else:
            value = text
        if value is None and isinstance(self.data, array):
            self.data = list(self.data)
        self.data.append(value)


def check_predicate_types(bound: BoundQuery, column_type) -> None:
    """Reject type-incompatible comparisons and aggregates before scanning.

    `column_type` maps (table, column) to a type tag. Numeric columns accept
    int or float literals, text columns accept string literals, and AVG needs
    a numeric argument.
    """
    for pred, ref in zip(bound.ast.predicates, bound.predicate_refs):
        tag = column_type((ref.table, ref.column))
        literal_is_str = isinstance(pred.value, str)
        if (tag == "text") != literal_is_str:
            raise QueryTypeMismatch(
                f"column {ref.table}.{ref.column} is {tag}, literal {pred.value!r} does not compare"
            )
    for proj, ref in zip(bound.ast.projections, bound.projection_refs):
        if isinstance(proj, Aggregate) and proj.func == "avg" and ref is not None:
            if column_type((ref.table, ref.column)) == "text":
                raise QueryTypeMismatch(f"avg({ref.table}.{ref.column}) needs a numeric column")


def passes(value, op: str, literal) -> bool:
    """Evaluate one comparison; NULL never satisfies any operator."""
    if value is None:
        return False
    if op == "=":
        return value == literal
    if op == "<>":
        return value != literal
    if op == "<":
        return value < literal
    if op == "<=":
        return value <= literal
    if op == ">":
        return value > literal
    return value >= literal  # >=


def aggregate_value(func: str, values: list) -> int | float | None:
    """COUNT/AVG/MIN/MAX over non-NULL inputs; empty input yields NULL (COUNT: 0)."""
    present = [v for v in values if v is not None]
    if func == "count":
        return len(present)
    if not present:
        return None
    if func == "avg":
        return sum(present) / len(present)
    if func == "min":
        return min(present)
    return max(present)


def projection_names(ast: QueryAst) -> list[str]:
    return [p.text() for p in ast.projections]

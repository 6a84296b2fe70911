"""Mini-SQL dialect: AST, parser, renderer, and schema binding.

The dialect covers single-level SELECT statements only: plain or aggregate
projections (COUNT/AVG/MIN/MAX, COUNT(*)), comma- or JOIN..ON-combined
sources, a WHERE conjunction of column-vs-literal comparisons plus
column=column join equalities, and an optional LIMIT. Keywords are matched
case-insensitively; identifiers keep their written case in the AST and are
compared case-insensitively everywhere else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

from .errors import AmbiguousColumn, SqlSyntaxError, UnknownAttribute, UnknownTable

if TYPE_CHECKING:
    from .catalog import SchemaCatalog

AGGREGATE_FUNCS = ("count", "avg", "min", "max")

# Constructs we recognise only to reject them with a useful message.
_REJECTED = {
    "order": "ORDER BY",
    "group": "GROUP BY",
    "having": "HAVING",
    "union": "UNION",
    "distinct": "DISTINCT",
    "or": "OR",
    "not": "NOT",
    "between": "BETWEEN",
    "in": "IN",
    "like": "LIKE",
    "is": "IS",
    "null": "NULL",
    "exists": "EXISTS",
    "inner": "INNER JOIN",
    "left": "LEFT JOIN",
    "right": "RIGHT JOIN",
    "outer": "OUTER JOIN",
    "cross": "CROSS JOIN",
    "insert": "INSERT",
    "update": "UPDATE",
    "delete": "DELETE",
}

Literal = Union[int, float, str]


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnRef:
    qualifier: str | None
    column: str

    def text(self) -> str:
        return f"{self.qualifier}.{self.column}" if self.qualifier else self.column


@dataclass(frozen=True)
class Aggregate:
    func: str  # one of AGGREGATE_FUNCS, lower case
    arg: ColumnRef | None  # None only for count(*)

    def text(self) -> str:
        return f"{self.func}({self.arg.text() if self.arg else '*'})"


Projection = Union[ColumnRef, Aggregate]


@dataclass(frozen=True)
class TableInstance:
    table: str
    alias: str | None = None

    def binding_name(self) -> str:
        """Name this instance answers to in qualified references."""
        return (self.alias or self.table).lower()


@dataclass(frozen=True)
class JoinCondition:
    left: ColumnRef
    right: ColumnRef


@dataclass(frozen=True)
class Comparison:
    column: ColumnRef
    op: str  # < <= > >= = <>
    value: Literal


@dataclass(frozen=True)
class QueryAst:
    projections: tuple[Projection, ...]
    sources: tuple[TableInstance, ...]
    join_conditions: tuple[JoinCondition, ...] = ()
    predicates: tuple[Comparison, ...] = ()
    limit: int | None = None

    @property
    def is_aggregate(self) -> bool:
        return bool(self.projections) and isinstance(self.projections[0], Aggregate)


# --- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<string>'(?:[^']|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|<>|<|>|=)
  | (?P<punct>[(),.;*\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # ident / number / string / op / punct / eof
    text: str
    pos: int


def _tokenize(sql: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(sql):
        m = _TOKEN_RE.match(sql, pos)
        if m is None:
            raise SqlSyntaxError(f"unexpected character {sql[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(sql)))
    return tokens


class _Cursor:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text.lower() == word

    def accept_keyword(self, word: str) -> bool:
        if self.at_keyword(word):
            self.next()
            return True
        return False

    def expect_keyword(self, word: str) -> None:
        tok = self.peek()
        if not self.accept_keyword(word):
            raise SqlSyntaxError(
                f"expected {word.upper()}, found {tok.text!r}" if tok.text else f"expected {word.upper()}",
                tok.pos,
            )

    def accept_punct(self, text: str) -> bool:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == text:
            self.next()
            return True
        return False

    def expect_punct(self, text: str) -> None:
        tok = self.peek()
        if not self.accept_punct(text):
            raise SqlSyntaxError(f"expected {text!r}, found {tok.text!r}", tok.pos)

    def reject_known(self) -> None:
        """Raise a named error when the next token starts an unsupported construct."""
        tok = self.peek()
        if tok.kind == "ident" and tok.text.lower() in _REJECTED:
            raise SqlSyntaxError(f"{_REJECTED[tok.text.lower()]} is outside the supported dialect", tok.pos)


# --- parser ------------------------------------------------------------------


def parse_query(sql: str) -> QueryAst:
    """Parse one SELECT statement of the mini dialect into a QueryAst."""
    cur = _Cursor(_tokenize(sql))
    cur.reject_known()
    cur.expect_keyword("select")

    projections = [_parse_projection(cur)]
    while cur.accept_punct(","):
        projections.append(_parse_projection(cur))
    _check_projection_mix(projections, cur)

    cur.reject_known()
    cur.expect_keyword("from")
    sources = [_parse_source(cur)]
    join_conditions: list[JoinCondition] = []
    while True:
        if cur.accept_punct(","):
            sources.append(_parse_source(cur))
        elif cur.accept_keyword("join"):
            sources.append(_parse_source(cur))
            cur.expect_keyword("on")
            join_conditions.append(_parse_join_equality(cur))
            while cur.accept_keyword("and"):
                join_conditions.append(_parse_join_equality(cur))
        else:
            break

    predicates: list[Comparison] = []
    if cur.accept_keyword("where"):
        while True:
            pred = _parse_condition(cur)
            if isinstance(pred, JoinCondition):
                join_conditions.append(pred)
            else:
                predicates.append(pred)
            if not cur.accept_keyword("and"):
                break

    limit: int | None = None
    if cur.accept_keyword("limit"):
        tok = cur.peek()
        if tok.kind == "punct" and tok.text == "-":
            raise SqlSyntaxError("LIMIT must be non-negative", tok.pos)
        if tok.kind != "number" or not re.fullmatch(r"\d+", tok.text):
            raise SqlSyntaxError(f"LIMIT expects an integer, found {tok.text!r}", tok.pos)
        cur.next()
        limit = int(tok.text)

    cur.accept_punct(";")
    cur.reject_known()
    tail = cur.peek()
    if tail.kind != "eof":
        raise SqlSyntaxError(f"unexpected trailing input {tail.text!r}", tail.pos)

    ast = QueryAst(
        projections=tuple(projections),
        sources=tuple(sources),
        join_conditions=tuple(join_conditions),
        predicates=tuple(predicates),
        limit=limit,
    )
    _validate(ast)
    return ast


def _parse_projection(cur: _Cursor) -> Projection:
    cur.reject_known()
    tok = cur.peek()
    if tok.kind == "punct" and tok.text == "(":
        raise SqlSyntaxError("subquery is outside the supported dialect", tok.pos)
    if tok.kind == "punct" and tok.text == "*":
        raise SqlSyntaxError("bare * projection is outside the supported dialect (use COUNT(*))", tok.pos)
    if tok.kind != "ident":
        raise SqlSyntaxError(f"expected column or aggregate, found {tok.text!r}", tok.pos)
    if cur.peek(1).kind == "punct" and cur.peek(1).text == "(":
        func = tok.text.lower()
        if func not in AGGREGATE_FUNCS:
            raise SqlSyntaxError(f"unsupported function {tok.text!r}", tok.pos)
        cur.next()
        cur.expect_punct("(")
        if cur.accept_punct("*"):
            if func != "count":
                raise SqlSyntaxError(f"{func.upper()}(*) is not supported; only COUNT(*)", tok.pos)
            cur.expect_punct(")")
            return Aggregate("count", None)
        arg = _parse_column_ref(cur)
        cur.expect_punct(")")
        return Aggregate(func, arg)
    return _parse_column_ref(cur)


def _check_projection_mix(projections: list[Projection], cur: _Cursor) -> None:
    kinds = {isinstance(p, Aggregate) for p in projections}
    if len(kinds) > 1:
        raise SqlSyntaxError("mixed aggregate and plain column projections are outside the supported dialect")


def _parse_column_ref(cur: _Cursor) -> ColumnRef:
    cur.reject_known()
    tok = cur.peek()
    if tok.kind != "ident":
        raise SqlSyntaxError(f"expected column reference, found {tok.text!r}", tok.pos)
    cur.next()
    if cur.accept_punct("."):
        col = cur.peek()
        if col.kind != "ident":
            raise SqlSyntaxError(f"expected column name after '.', found {col.text!r}", col.pos)
        cur.next()
        return ColumnRef(tok.text, col.text)
    return ColumnRef(None, tok.text)


def _parse_source(cur: _Cursor) -> TableInstance:
    cur.reject_known()
    tok = cur.peek()
    if tok.kind == "punct" and tok.text == "(":
        raise SqlSyntaxError("subquery is outside the supported dialect", tok.pos)
    if tok.kind != "ident":
        raise SqlSyntaxError(f"expected table name, found {tok.text!r}", tok.pos)
    cur.next()
    alias = None
    if cur.accept_keyword("as"):
        alias_tok = cur.peek()
        if alias_tok.kind != "ident":
            raise SqlSyntaxError(f"expected alias after AS, found {alias_tok.text!r}", alias_tok.pos)
        cur.next()
        alias = alias_tok.text
    elif cur.peek().kind == "ident" and cur.peek().text.lower() not in _ALIAS_STOPWORDS:
        alias = cur.next().text
    return TableInstance(tok.text, alias)


_ALIAS_STOPWORDS = {"where", "limit", "join", "on", "and"} | set(_REJECTED)


def _parse_join_equality(cur: _Cursor) -> JoinCondition:
    left = _parse_column_ref(cur)
    tok = cur.peek()
    if not (tok.kind == "op" and tok.text == "="):
        raise SqlSyntaxError(f"JOIN..ON expects an equality, found {tok.text!r}", tok.pos)
    cur.next()
    right = _parse_column_ref(cur)
    return JoinCondition(left, right)


def _parse_condition(cur: _Cursor) -> Comparison | JoinCondition:
    left = _parse_column_ref(cur)
    tok = cur.peek()
    if tok.kind != "op":
        raise SqlSyntaxError(f"expected comparison operator, found {tok.text!r}", tok.pos)
    op = cur.next().text
    rhs = cur.peek()
    if rhs.kind == "ident":
        right = _parse_column_ref(cur)
        if op != "=":
            raise SqlSyntaxError(
                "column-to-column comparison is only supported as an '=' join condition", rhs.pos
            )
        return JoinCondition(left, right)
    return Comparison(left, op, _parse_literal(cur))


def _parse_literal(cur: _Cursor) -> Literal:
    tok = cur.peek()
    negative = False
    if tok.kind == "punct" and tok.text == "-":
        negative = True
        cur.next()
        tok = cur.peek()
    if tok.kind == "number":
        cur.next()
        if re.fullmatch(r"\d+", tok.text):
            value: Literal = int(tok.text)
        else:
            value = float(tok.text)
        return -value if negative else value
    if tok.kind == "string":
        if negative:
            raise SqlSyntaxError("cannot negate a string literal", tok.pos)
        cur.next()
        return tok.text[1:-1].replace("''", "'")
    raise SqlSyntaxError(f"expected literal, found {tok.text!r}", tok.pos)


def _validate(ast: QueryAst) -> None:
    if ast.join_conditions and len(ast.sources) < 2:
        raise SqlSyntaxError("column-to-column equality requires at least two table instances")
    seen_aliases: set[str] = set()
    for src in ast.sources:
        if src.alias is not None:
            low = src.alias.lower()
            if low in seen_aliases:
                raise SqlSyntaxError(f"duplicate alias {src.alias!r}")
            seen_aliases.add(low)


# --- renderer ----------------------------------------------------------------


def render(ast: QueryAst) -> str:
    """Render an AST back to dialect SQL; parse(render(ast)) == ast."""
    parts = ["SELECT ", ", ".join(p.text() for p in ast.projections), " FROM "]
    parts.append(", ".join(f"{s.table} AS {s.alias}" if s.alias else s.table for s in ast.sources))
    conjuncts = [f"{j.left.text()} = {j.right.text()}" for j in ast.join_conditions]
    conjuncts += [f"{p.column.text()} {p.op} {_render_literal(p.value)}" for p in ast.predicates]
    if conjuncts:
        parts.append(" WHERE " + " AND ".join(conjuncts))
    if ast.limit is not None:
        parts.append(f" LIMIT {ast.limit}")
    return "".join(parts)


def _render_literal(value: Literal) -> str:
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    return repr(value)


# --- schema binding ------------------------------------------------------------


@dataclass(frozen=True)
class BoundRef:
    source: int  # index into ast.sources
    table: str  # canonical table name
    column: str  # canonical column name


@dataclass(frozen=True)
class BoundQuery:
    ast: QueryAst
    tables: tuple[str, ...]  # canonical table per source instance
    projection_refs: tuple[BoundRef | None, ...]  # None for COUNT(*)
    predicate_refs: tuple[BoundRef, ...]
    join_refs: tuple[tuple[BoundRef, BoundRef], ...]

    def attributes(self) -> set[tuple[str, str]]:
        refs = [r for r in self.projection_refs if r is not None]
        refs += list(self.predicate_refs)
        for left, right in self.join_refs:
            refs += [left, right]
        return {(r.table, r.column) for r in refs}

    def columns_of_source(self, source: int) -> set[str]:
        """Canonical column names the query touches on one source instance."""
        cols = {r.column for r in self.projection_refs if r is not None and r.source == source}
        cols |= {r.column for r in self.predicate_refs if r.source == source}
        for left, right in self.join_refs:
            for r in (left, right):
                if r.source == source:
                    cols.add(r.column)
        return cols


def bind(ast: QueryAst, schema: "SchemaCatalog") -> BoundQuery:
    """Resolve every column reference to exactly one source instance.

    Raises UnknownTable / UnknownAttribute / AmbiguousColumn when resolution
    fails; a join condition relating an instance to itself is rejected as an
    out-of-dialect construct.
    """
    tables = tuple(schema.resolve_table(src.table) for src in ast.sources)

    def resolve(ref: ColumnRef) -> BoundRef:
        if ref.qualifier is not None:
            q = ref.qualifier.lower()
            matches = [i for i, src in enumerate(ast.sources) if src.binding_name() == q]
            if not matches:
                raise UnknownTable(f"qualifier {ref.qualifier!r} does not match any source")
            if len(matches) > 1:
                raise AmbiguousColumn(
                    f"qualifier {ref.qualifier!r} matches multiple table instances; use aliases"
                )
            idx = matches[0]
            col = schema.resolve_column(tables[idx], ref.column)
            if col is None:
                raise UnknownAttribute(f"table {tables[idx]!r} has no column {ref.column!r}")
            return BoundRef(idx, tables[idx], col)
        candidates = []
        for i, table in enumerate(tables):
            col = schema.resolve_column(table, ref.column)
            if col is not None:
                candidates.append((i, table, col))
        if not candidates:
            raise UnknownAttribute(f"column {ref.column!r} not found in any source table")
        if len(candidates) > 1:
            names = sorted({t for _, t, _ in candidates})
            raise AmbiguousColumn(f"column {ref.column!r} is ambiguous across {names}")
        return BoundRef(*candidates[0])

    projection_refs: list[BoundRef | None] = []
    for proj in ast.projections:
        if isinstance(proj, Aggregate):
            projection_refs.append(None if proj.arg is None else resolve(proj.arg))
        else:
            projection_refs.append(resolve(proj))

    predicate_refs = tuple(resolve(p.column) for p in ast.predicates)

    join_refs = []
    for cond in ast.join_conditions:
        left, right = resolve(cond.left), resolve(cond.right)
        if left.source == right.source:
            raise SqlSyntaxError("join condition must relate two different table instances")
        join_refs.append((left, right))

    return BoundQuery(ast, tables, tuple(projection_refs), predicate_refs, tuple(join_refs))


# --- extraction ------------------------------------------------------------------


def extract_tables(ast: QueryAst) -> list[TableInstance]:
    """Source instances in statement order, duplicates (self-joins) preserved."""
    return list(ast.sources)


def extract_attributes(ast: QueryAst, schema: "SchemaCatalog") -> set[tuple[str, str]]:
    """Every (table, attribute) pair the query references; COUNT(*) adds none."""
    return bind(ast, schema).attributes()

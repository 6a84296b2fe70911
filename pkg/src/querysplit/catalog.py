"""Schema and workload ingestion: DDL files, workload files, query catalogs."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import sqlang
from .errors import (
    DdlSyntaxError,
    DuplicateAttribute,
    DuplicateTable,
    UnknownTable,
    WorkloadFormatError,
)

_TYPE_TAGS = {
    "int": "int",
    "integer": "int",
    "bigint": "int",
    "smallint": "int",
    "tinyint": "int",
    "float": "float",
    "double": "float",
    "real": "float",
    "numeric": "float",
    "decimal": "float",
    "text": "text",
    "varchar": "text",
    "char": "text",
    "character": "text",
    "string": "text",
}


@dataclass(frozen=True)
class ColumnDef:
    name: str
    type_tag: str  # int | float | text
    is_key: bool = False


class SchemaCatalog:
    """Tables and their ordered, typed attributes; lookups are case-insensitive."""

    def __init__(self, tables: dict[str, list[ColumnDef]]):
        self._tables: dict[str, tuple[ColumnDef, ...]] = {}
        self._by_lower: dict[str, str] = {}
        self._col_index: dict[str, dict[str, ColumnDef]] = {}
        for name, cols in tables.items():
            if name.lower() in self._by_lower:
                raise DuplicateTable(f"table {name!r} declared twice")
            if not cols:
                raise DdlSyntaxError(f"table {name!r} declares no columns")
            index: dict[str, ColumnDef] = {}
            for col in cols:
                if col.name.lower() in index:
                    raise DuplicateAttribute(f"table {name!r} declares column {col.name!r} twice")
                index[col.name.lower()] = col
            self._tables[name] = tuple(cols)
            self._by_lower[name.lower()] = name
            self._col_index[name] = index

    def table_names(self) -> tuple[str, ...]:
        return tuple(self._tables)

    def resolve_table(self, name: str) -> str:
        try:
            return self._by_lower[name.lower()]
        except KeyError:
            raise UnknownTable(f"unknown table {name!r}") from None

    def columns(self, table: str) -> tuple[ColumnDef, ...]:
        return self._tables[self.resolve_table(table)]

    def column_names(self, table: str) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns(table))

    def resolve_column(self, table: str, name: str) -> str | None:
        col = self._col_index[self.resolve_table(table)].get(name.lower())
        return col.name if col else None

    def column_type(self, table: str, column: str) -> str:
        return self._col_index[self.resolve_table(table)][column.lower()].type_tag

    def key_columns(self, table: str) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns(table) if c.is_key)

    def key_attrs(self) -> frozenset[tuple[str, str]]:
        return frozenset((t, c.name) for t in self._tables for c in self._tables[t] if c.is_key)

    def all_attrs(self) -> frozenset[tuple[str, str]]:
        return frozenset((t, c.name) for t in self._tables for c in self._tables[t])

    def to_dict(self) -> dict:
        return {
            "tables": {
                name: [
                    {"name": c.name, "type": c.type_tag, "key": c.is_key}
                    for c in cols
                ]
                for name, cols in self._tables.items()
            }
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SchemaCatalog":
        return cls(
            {
                name: [ColumnDef(c["name"], c["type"], c["key"]) for c in cols]
                for name, cols in data["tables"].items()
            }
        )


# --- DDL parsing -------------------------------------------------------------

_CREATE_RE = re.compile(r"^\s*create\s+table\s+([A-Za-z_][A-Za-z_0-9]*)\s*\((.*)\)\s*$", re.I | re.S)


def extract_schema(ddl_text: str) -> SchemaCatalog:
    """Build a SchemaCatalog from CREATE TABLE statements separated by ';'.

    The DDL subset is column name + type keyword + optional PRIMARY KEY; every
    table must flag at least one primary-key column.
    """
    tables: dict[str, list[ColumnDef]] = {}
    for raw in ddl_text.split(";"):
        stmt = "\n".join(line for line in raw.splitlines() if not line.lstrip().startswith("--")).strip()
        if not stmt:
            continue
        m = _CREATE_RE.match(stmt)
        if m is None:
            raise DdlSyntaxError(f"not a CREATE TABLE statement: {stmt[:60]!r}")
        name, body = m.group(1), m.group(2)
        if name.lower() in {t.lower() for t in tables}:
            raise DuplicateTable(f"table {name!r} declared twice")
        cols = [_parse_column_def(name, part) for part in body.split(",") if part.strip()]
        if not cols:
            raise DdlSyntaxError(f"table {name!r} declares no columns")
        if not any(c.is_key for c in cols):
            raise DdlSyntaxError(f"table {name!r} declares no PRIMARY KEY column")
        tables[name] = cols
    return SchemaCatalog(tables)


def _parse_column_def(table: str, text: str) -> ColumnDef:
    words = text.split()
    if len(words) < 2:
        raise DdlSyntaxError(f"table {table!r}: malformed column definition {text.strip()!r}")
    name = words[0]
    rest = [w.lower() for w in words[1:]]
    is_key = False
    if len(rest) >= 2 and rest[-2] == "primary" and rest[-1] == "key":
        is_key = True
        rest = rest[:-2]
    if not rest:
        raise DdlSyntaxError(f"table {table!r}: column {name!r} has no type")
    base = rest[0].split("(")[0]
    if base == "double" and len(rest) > 1 and rest[1] == "precision":
        rest = rest[1:]
    tag = _TYPE_TAGS.get(base)
    if tag is None:
        raise DdlSyntaxError(f"table {table!r}: unsupported column type {rest[0]!r}")
    return ColumnDef(name, tag, is_key)


# --- workload -------------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    task_id: str
    statement: str
    kind: str  # query | load | truncate


@dataclass(frozen=True)
class WorkloadList:
    tasks: tuple[Task, ...]

    def query_tasks(self) -> tuple[Task, ...]:
        return tuple(t for t in self.tasks if t.kind == "query")

    def by_id(self, task_id: str) -> Task:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise KeyError(task_id)


@dataclass(frozen=True)
class QueryInfo:
    ast: sqlang.QueryAst
    tables: tuple[sqlang.TableInstance, ...]
    attributes: frozenset[tuple[str, str]]


@dataclass(frozen=True)
class QueryCatalog:
    entries: dict[str, QueryInfo]

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.entries

    def __getitem__(self, query_id: str) -> QueryInfo:
        return self.entries[query_id]

    def attribute_union(self) -> frozenset[tuple[str, str]]:
        out: set[tuple[str, str]] = set()
        for info in self.entries.values():
            out |= info.attributes
        return frozenset(out)


def classify_statement(statement: str) -> str:
    head = statement.lstrip().split(None, 1)
    if not head:
        raise WorkloadFormatError("empty statement")
    word = head[0].rstrip(";").lower()
    if word == "select":
        return "query"
    if word == "truncate":
        return "truncate"
    if word == "copy":
        return "load"
    raise WorkloadFormatError(f"unrecognized statement kind {head[0]!r}")


_TRUNCATE_RE = re.compile(r"^\s*truncate\s+(?:table\s+)?([A-Za-z_][A-Za-z_0-9]*)", re.I)
_COPY_RE = re.compile(r"^\s*copy\s+([A-Za-z_][A-Za-z_0-9]*)", re.I)


def statement_target_table(task: Task) -> str | None:
    """Table named by a TRUNCATE or COPY task; None for queries."""
    if task.kind == "truncate":
        m = _TRUNCATE_RE.match(task.statement)
    elif task.kind == "load":
        m = _COPY_RE.match(task.statement)
    else:
        return None
    if m is None:
        raise WorkloadFormatError(f"task {task.task_id}: cannot find target table in {task.statement!r}")
    return m.group(1)


def extract_workload(workload_text: str, schema: SchemaCatalog) -> tuple[WorkloadList, QueryCatalog]:
    """Read `task_id<TAB>statement` lines into a workload list and query catalog.

    '#'-prefixed lines and blank lines are ignored. Parser and binder errors
    are re-raised with the offending task_id attached.
    """
    tasks: list[Task] = []
    entries: dict[str, QueryInfo] = {}
    seen: set[str] = set()
    for lineno, line in enumerate(workload_text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise WorkloadFormatError(f"line {lineno}: expected 'task_id<TAB>statement'")
        task_id, statement = line.split("\t", 1)
        task_id, statement = task_id.strip(), statement.strip()
        if task_id in seen:
            raise WorkloadFormatError(f"line {lineno}: duplicate task id {task_id!r}")
        seen.add(task_id)
        try:
            kind = classify_statement(statement)
            if kind == "query":
                ast = sqlang.parse_query(statement)
                entries[task_id] = QueryInfo(
                    ast=ast,
                    tables=tuple(sqlang.extract_tables(ast)),
                    attributes=frozenset(sqlang.extract_attributes(ast, schema)),
                )
            tasks.append(Task(task_id, statement, kind))
        except Exception as exc:
            exc.task_id = task_id  # type: ignore[attr-defined]
            raise
    return WorkloadList(tuple(tasks)), QueryCatalog(entries)


# --- plan-inputs serialization ----------------------------------------------------


def ingest_to_dict(schema: SchemaCatalog, workload: WorkloadList) -> dict:
    return {
        "version": 1,
        "schema": schema.to_dict(),
        "tasks": [{"task_id": t.task_id, "statement": t.statement, "kind": t.kind} for t in workload.tasks],
    }


def ingest_from_dict(data: dict) -> tuple[SchemaCatalog, WorkloadList, QueryCatalog]:
    schema = SchemaCatalog.from_dict(data["schema"])
    lines = "\n".join(f"{t['task_id']}\t{t['statement']}" for t in data["tasks"])
    workload, queries = extract_workload(lines, schema)
    return schema, workload, queries

"""Query routing and cross-format execution over a partition layout.

Fully covered queries are delegated to the owning engine; partially covered
ones are decomposed into per-fragment sub-scans (single-fragment predicates
pushed down), reassembled by key, joined, and projected. Reassembly by key
assumes primary keys are unique, which the loaded engine can enforce at load
time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Mapping

from .catalog import SchemaCatalog
from .errors import CaseNotExecutable, RoutingError
from .loaded_engine import LoadedStore
from .placement import RAW, Fragment, PartitionLayout
from .raw_engine import RawConnection
from .results import ResultSet, aggregate_value, check_predicate_types, projection_names
from .sqlang import (
    Aggregate,
    ColumnRef,
    Comparison,
    QueryAst,
    TableInstance,
    bind,
)


@dataclass(frozen=True)
class QueryStats:
    query_id: str
    micros: int
    rows: int
    engine: str  # raw | loaded | federated
    raw_bytes_read: int
    cells_scanned: int
    connection_ids: tuple[int, ...]


def run_query(
    query_id: str,
    ast: QueryAst,
    layout: PartitionLayout,
    schema: SchemaCatalog,
    raw_conns: Mapping[str, RawConnection],
    store: LoadedStore,
) -> tuple[ResultSet, QueryStats]:
    """Execute one routed query and report per-query work."""
    if not layout.executable():
        raise CaseNotExecutable(
            f"case {layout.case_id} layouts are planned only; they are never executed"
        )
    route = layout.routing.get(query_id)
    if route is None:
        raise RoutingError(f"query {query_id!r} is not routed by this layout")

    frags = [layout.fragment(name) for name in route.fragments]
    raw_frags = [f for f in frags if f.fmt == RAW]
    conns = {f.name: raw_conns[f.name] for f in raw_frags}
    io_before = {name: conn.io.snapshot() for name, conn in conns.items()}
    cells_before = store.cells_scanned

    start = time.perf_counter_ns()
    if not route.cross_format:
        home = layout.fragment(route.home)
        if home.fmt == RAW:
            engine = "raw"
            result = conns[home.name].execute(ast)
        else:
            engine = "loaded"
            table_map = {f.table.lower(): f.name for f in frags}
            result = store.execute(ast, schema, table_map)
    else:
        engine = "federated"
        result = _execute_decomposed(ast, schema, frags, conns, store)
    micros = (time.perf_counter_ns() - start) // 1000

    raw_bytes = sum(
        conn.io.file_bytes_read - io_before[name].file_bytes_read for name, conn in conns.items()
    )
    raw_cells = sum(
        conn.io.cells_scanned - io_before[name].cells_scanned for name, conn in conns.items()
    )
    stats = QueryStats(
        query_id=query_id,
        micros=micros,
        rows=len(result.rows),
        engine=engine,
        raw_bytes_read=raw_bytes,
        cells_scanned=raw_cells + (store.cells_scanned - cells_before),
        connection_ids=tuple(sorted(conn.connection_id for conn in conns.values())),
    )
    return result, stats


# --- decomposition ---------------------------------------------------------------


@dataclass
class _Assembled:
    col_pos: dict[str, int]  # lower-case column name -> tuple index
    rows: list[tuple]


def _execute_decomposed(
    ast: QueryAst,
    schema: SchemaCatalog,
    frags: list[Fragment],
    conns: Mapping[str, RawConnection],
    store: LoadedStore,
) -> ResultSet:
    bound = bind(ast, schema)
    check_predicate_types(bound, lambda attr: schema.column_type(*attr))
    assembled = [
        _assemble_source(ast, bound, s, schema, frags, conns, store)
        for s in range(len(ast.sources))
    ]
    joined = _join_sources(bound, assembled)

    names = projection_names(ast)
    if ast.is_aggregate:
        out = []
        for proj, ref in zip(ast.projections, bound.projection_refs):
            assert isinstance(proj, Aggregate)
            if ref is None:
                out.append(len(joined))
            else:
                src = assembled[ref.source]
                pos = src.col_pos[ref.column.lower()]
                out.append(aggregate_value(proj.func, [src.rows[t[ref.source]][pos] for t in joined]))
        rows = [tuple(out)]
    else:
        getters = [
            (ref.source, assembled[ref.source].col_pos[ref.column.lower()])
            for ref in bound.projection_refs
        ]
        rows = [tuple(assembled[s].rows[t[s]][pos] for s, pos in getters) for t in joined]
    if ast.limit is not None:
        rows = rows[: ast.limit]
    return ResultSet(names, rows)


def _assemble_source(
    ast: QueryAst,
    bound,
    source: int,
    schema: SchemaCatalog,
    frags: list[Fragment],
    conns: Mapping[str, RawConnection],
    store: LoadedStore,
) -> _Assembled:
    """Reconstruct one source instance's needed columns by key-joining fragment scans."""
    table = bound.tables[source]
    keys = [c.lower() for c in schema.key_columns(table)]
    needed = sorted(c.lower() for c in bound.columns_of_source(source) if c.lower() not in keys)
    table_frags = [f for f in frags if f.table.lower() == table.lower()]

    owners: dict[str, list[str]] = {}
    for col in needed:
        owner = next(
            (f.name for f in table_frags if col in {c.lower() for c in f.value_columns()}), None
        )
        if owner is None:
            raise RoutingError(
                f"column {col!r} of table {table!r} is not covered by the routed fragments"
            )
        owners.setdefault(owner, []).append(col)
    if not owners:
        owners = {table_frags[0].name: []}

    sub_results: list[tuple[list[str], list[tuple]]] = []
    for frag in table_frags:
        if frag.name not in owners:
            continue
        cols = owners[frag.name]
        frag_cols = {c.lower() for c in frag.columns}
        preds = tuple(
            Comparison(ColumnRef(None, ref.column), p.op, p.value)
            for p, ref in zip(ast.predicates, bound.predicate_refs)
            if ref.source == source and (ref.column.lower() in cols or ref.column.lower() in keys)
            and ref.column.lower() in frag_cols
        )
        sub_ast = QueryAst(
            projections=tuple(ColumnRef(None, c) for c in keys + cols),
            sources=(TableInstance(table, None),),
            predicates=preds,
        )
        if frag.fmt == RAW:
            rs = conns[frag.name].execute(sub_ast)
        else:
            rs = store.execute(sub_ast, schema, {table.lower(): frag.name})
        sub_results.append((keys + cols, rs.rows))

    out_cols, out_rows = sub_results[0]
    arity = len(keys)
    for cols, rows in sub_results[1:]:
        index = {row[:arity]: row for row in rows}
        merged = []
        for row in out_rows:
            other = index.get(row[:arity])
            if other is not None:
                merged.append(row + other[arity:])
        out_rows = merged
        out_cols = out_cols + cols[arity:]
    return _Assembled({c: i for i, c in enumerate(out_cols)}, out_rows)


def _join_sources(bound, assembled: list[_Assembled]) -> list[tuple]:
    tuples: list[tuple] = [(i,) for i in range(len(assembled[0].rows))]
    for s in range(1, len(assembled)):
        conds = []
        for left, right in bound.join_refs:
            if right.source == s and left.source < s:
                conds.append((left, right))
            elif left.source == s and right.source < s:
                conds.append((right, left))
        if not conds:
            tuples = [t + (i,) for t in tuples for i in range(len(assembled[s].rows))]
            continue
        new = assembled[s]
        new_pos = [new.col_pos[ref.column.lower()] for _old, ref in conds]
        build: dict = {}
        for i, row in enumerate(new.rows):
            key = tuple(row[p] for p in new_pos)
            if any(v is None for v in key):
                continue
            build.setdefault(key, []).append(i)
        old_getters = [(ref.source, assembled[ref.source].col_pos[ref.column.lower()]) for ref, _new in conds]
        out = []
        for t in tuples:
            key = tuple(assembled[src].rows[t[src]][pos] for src, pos in old_getters)
            if any(v is None for v in key):
                continue
            for i in build.get(key, ()):
                out.append(t + (i,))
        tuples = out
    return tuples

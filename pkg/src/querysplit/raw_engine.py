"""In-situ engine over fragment CSVs with per-connection column caching.

A connection parses columns out of the file on first reference and keeps them
in memory; repeated access is free. IO accounting: the first scan of the file
costs its full byte size (row-oriented CSV forces full-line reads) and records
each column's byte footprint; later misses cost only the missing columns'
footprints. Caches are never shared between connections.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .catalog import SchemaCatalog
from .csvio import CsvSpec, check_header, file_size, iter_raw_rows
from .errors import AttributeNotInFragment, CellParseError
from .results import (
    ColumnBuilder,
    ResultSet,
    aggregate_value,
    check_predicate_types,
    passes,
    projection_names,
)
from .sqlang import Aggregate, QueryAst, bind

_connection_ids = itertools.count(1)


@dataclass
class IoCounters:
    file_bytes_read: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    cells_scanned: int = 0  # deterministic work unit

    def snapshot(self) -> "IoCounters":
        return IoCounters(self.file_bytes_read, self.cache_hits, self.cache_misses, self.cells_scanned)


@dataclass
class RawConnection:
    spec: CsvSpec
    schema: SchemaCatalog
    connection_id: int = field(default_factory=lambda: next(_connection_ids))
    io: IoCounters = field(default_factory=IoCounters)

    def __post_init__(self):
        check_header(self.spec)
        self._table = self.schema.resolve_table(self.spec.table)
        self._types = {
            c.lower(): self.schema.column_type(self._table, c) for c in self.spec.columns
        }
        self._cache: dict[str, list] = {}
        self._col_bytes: dict[str, int] | None = None
        self._file_size = file_size(self.spec)
        self._row_count: int | None = None
        self.evictions = 0

    # -- cache -----------------------------------------------------------

    def cached_columns(self) -> frozenset[str]:
        return frozenset(self._cache)

    def evict(self, columns: Iterable[str] | None = None) -> None:
        """Drop named columns from the cache (all when columns is None)."""
        if columns is None:
            self._cache.clear()
        else:
            for c in columns:
                self._cache.pop(c.lower(), None)
        self.evictions += 1

    def _ensure_cached(self, columns: list[str]) -> None:
        missing = [c for c in columns if c not in self._cache]
        for c in columns:
            if c in self._cache:
                self.io.cache_hits += 1
            else:
                self.io.cache_misses += 1
        if not missing:
            return
        builders = {c: ColumnBuilder(self._types[c]) for c in missing}
        first_scan = self._col_bytes is None
        col_bytes = {c.lower(): 0 for c in self.spec.columns} if first_scan else None
        positions = {c.lower(): i for i, c in enumerate(self.spec.columns)}
        rows = 0
        for rowno, cells in iter_raw_rows(self.spec):
            rows += 1
            if first_scan:
                for c, i in positions.items():
                    col_bytes[c] += len(cells[i]) + 1
            for c, builder in builders.items():
                try:
                    builder.append_text(cells[positions[c]])
                except ValueError as exc:
                    raise CellParseError(
                        f"{self.spec.path}: row {rowno}, column {c}: {exc}"
                    ) from exc
        if first_scan:
            self._col_bytes = col_bytes
            self._row_count = rows
            self.io.file_bytes_read += self._file_size
        else:
            self.io.file_bytes_read += sum(self._col_bytes[c] for c in missing)
        for c, builder in builders.items():
            self._cache[c] = builder.data

    # -- execution ----------------------------------------------------------

    def execute(self, ast: QueryAst) -> ResultSet:
        """Run a single-source query whose attributes all live in this fragment."""
        if len(ast.sources) != 1:
            raise AttributeNotInFragment(
                "raw engine executes single-source queries only; joins belong elsewhere"
            )
        bound = bind(ast, self.schema)
        if bound.tables[0].lower() != self._table.lower():
            raise AttributeNotInFragment(
                f"query reads table {bound.tables[0]!r}, fragment serves {self._table!r}"
            )
        referenced = sorted(c.lower() for c in bound.columns_of_source(0))
        outside = [c for c in referenced if c not in self._types]
        if outside:
            raise AttributeNotInFragment(
                f"columns {outside} are not in fragment {self.spec.table} "
                f"({self.spec.path}); the query was mis-routed"
            )
        check_predicate_types(bound, lambda attr: self.schema.column_type(*attr))
        self._ensure_cached(referenced)
        if self._row_count is None:
            # No column was ever needed (e.g. COUNT(*)); a row count still is.
            self._ensure_cached([self.spec.columns[0].lower()])

        n = self._row_count or 0
        preds = [
            (self._cache.get(ref.column.lower()), p.op, p.value)
            for p, ref in zip(ast.predicates, bound.predicate_refs)
        ]

        matching: list[int] = []
        limit = ast.limit
        scan_cap = None if (ast.is_aggregate or limit is None) else limit
        for i in range(n):
            ok = True
            for col, op, value in preds:
                self.io.cells_scanned += 1
                if not passes(col[i], op, value):
                    ok = False
                    break
            if ok:
                matching.append(i)
                if scan_cap is not None and len(matching) >= scan_cap:
                    break

        names = projection_names(ast)
        if ast.is_aggregate:
            out_row = []
            for proj in ast.projections:
                assert isinstance(proj, Aggregate)
                if proj.arg is None:
                    out_row.append(len(matching))
                else:
                    col = self._cache[proj.arg.column.lower()]
                    out_row.append(aggregate_value(proj.func, [col[i] for i in matching]))
            rows = [tuple(out_row)]
            if limit is not None:
                rows = rows[:limit]
            return ResultSet(names, rows)

        proj_cols = [self._cache[ref.column.lower()] for ref in bound.projection_refs]
        rows = [tuple(col[i] for col in proj_cols) for i in matching]
        self.io.cells_scanned += len(rows) * len(proj_cols)
        if limit is not None:
            rows = rows[:limit]
        return ResultSet(names, rows)

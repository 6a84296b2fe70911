"""In-memory columnar store with an explicit, timed load step and key-indexed joins."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .catalog import SchemaCatalog
from .csvio import CsvSpec, check_header, file_size, iter_raw_rows
from .errors import AttributeNotInFragment, CellParseError, DuplicateKey, TableNotLoaded
from .results import (
    ColumnBuilder,
    ResultSet,
    aggregate_value,
    check_predicate_types,
    passes,
    projection_names,
)
from .sqlang import Aggregate, QueryAst, bind


@dataclass(frozen=True)
class LoadRecord:
    name: str
    table: str
    micros: int
    bytes_loaded: int
    rows: int


@dataclass
class _StoredTable:
    table: str
    columns: dict[str, list]  # lower-case column name -> typed vector
    types: dict[str, str]
    n: int
    key_columns: tuple[str, ...]
    key_index: dict  # key value (or tuple) -> list of row positions


@dataclass
class LoadedStore:
    tables: dict[str, _StoredTable] = field(default_factory=dict)
    load_log: list[LoadRecord] = field(default_factory=list)
    cells_scanned: int = 0  # deterministic work unit across queries

    # -- loading -------------------------------------------------------------

    def load(
        self,
        spec: CsvSpec,
        schema: SchemaCatalog,
        name: str | None = None,
        unique_keys: bool = False,
    ) -> LoadRecord:
        """Parse a fragment file fully into typed columns plus a key index.

        Loading is all-or-nothing: any parse failure leaves the store unchanged.
        Wall-clock duration and byte size land in the load log.
        """
        start = time.perf_counter_ns()
        check_header(spec)
        table = schema.resolve_table(spec.table)
        types = {c.lower(): schema.column_type(table, c) for c in spec.columns}
        builders = {c.lower(): ColumnBuilder(types[c.lower()]) for c in spec.columns}
        order = [c.lower() for c in spec.columns]
        rows = 0
        for rowno, cells in iter_raw_rows(spec):
            rows += 1
            for c, cell in zip(order, cells):
                try:
                    builders[c].append_text(cell)
                except ValueError as exc:
                    raise CellParseError(f"{spec.path}: row {rowno}, column {c}: {exc}") from exc

        key_columns = tuple(
            c for c in spec.columns if c.lower() in {k.lower() for k in schema.key_columns(table)}
        )
        columns = {c: b.data for c, b in builders.items()}
        key_index: dict = {}
        key_cols = [columns[k.lower()] for k in key_columns]
        for i in range(rows):
            key = key_cols[0][i] if len(key_cols) == 1 else tuple(col[i] for col in key_cols)
            bucket = key_index.setdefault(key, [])
            if bucket and unique_keys:
                raise DuplicateKey(f"{spec.path}: key {key!r} occurs more than once")
            bucket.append(i)

        stored_name = name or spec.table
        self.tables[stored_name] = _StoredTable(
            table=table, columns=columns, types=types, n=rows, key_columns=key_columns, key_index=key_index
        )
        record = LoadRecord(
            name=stored_name,
            table=table,
            micros=(time.perf_counter_ns() - start) // 1000,
            bytes_loaded=file_size(spec),
            rows=rows,
        )
        self.load_log.append(record)
        return record

    def truncate(self, name: str) -> None:
        """Drop a stored table; missing names are a no-op. The load log survives."""
        self.tables.pop(name, None)

    # -- execution ---------------------------------------------------------------

    def execute(self, ast: QueryAst, schema: SchemaCatalog, table_map: dict[str, str] | None = None) -> ResultSet:
        """Run a query whose sources are all loaded; equi-joins via hash lookup.

        `table_map` redirects logical table names (lower case) to stored
        fragment names; identity by default.
        """
        bound = bind(ast, schema)
        stored: list[_StoredTable] = []
        for src, table in zip(ast.sources, bound.tables):
            key = (table_map or {}).get(table.lower(), table)
            target = self.tables.get(key)
            if target is None:
                # Fall back to any stored name matching the logical table.
                matches = [t for t in self.tables.values() if t.table.lower() == table.lower()]
                if (table_map is None or table.lower() not in table_map) and len(matches) == 1:
                    target = matches[0]
            if target is None:
                raise TableNotLoaded(f"table {table!r} (stored name {key!r}) is not loaded")
            stored.append(target)

        for ref in [r for r in bound.projection_refs if r is not None] + list(bound.predicate_refs):
            if ref.column.lower() not in stored[ref.source].columns:
                raise AttributeNotInFragment(
                    f"column {ref.column!r} is not in loaded fragment for table {ref.table!r}"
                )
        for left, right in bound.join_refs:
            for ref in (left, right):
                if ref.column.lower() not in stored[ref.source].columns:
                    raise AttributeNotInFragment(
                        f"join column {ref.column!r} is not in loaded fragment for table {ref.table!r}"
                    )
        check_predicate_types(bound, lambda attr: schema.column_type(*attr))

        # Per-source predicate filtering.
        per_source_rows: list[list[int]] = []
        for s, st in enumerate(stored):
            preds = [
                (st.columns[ref.column.lower()], p.op, p.value)
                for p, ref in zip(ast.predicates, bound.predicate_refs)
                if ref.source == s
            ]
            rows = []
            for i in range(st.n):
                ok = True
                for col, op, value in preds:
                    self.cells_scanned += 1
                    if not passes(col[i], op, value):
                        ok = False
                        break
                if ok:
                    rows.append(i)
            per_source_rows.append(rows)

        joined = self._join(bound, stored, per_source_rows)

        names = projection_names(ast)
        limit = ast.limit
        if ast.is_aggregate:
            out_row = []
            for proj, ref in zip(ast.projections, bound.projection_refs):
                assert isinstance(proj, Aggregate)
                if ref is None:
                    out_row.append(len(joined))
                else:
                    col = stored[ref.source].columns[ref.column.lower()]
                    out_row.append(aggregate_value(proj.func, [col[t[ref.source]] for t in joined]))
            rows_out = [tuple(out_row)]
        else:
            proj = [(stored[r.source].columns[r.column.lower()], r.source) for r in bound.projection_refs]
            rows_out = [tuple(col[t[s]] for col, s in proj) for t in joined]
            self.cells_scanned += len(rows_out) * len(proj)
        if limit is not None:
            rows_out = rows_out[:limit]
        return ResultSet(names, rows_out)

    def _join(self, bound, stored: list[_StoredTable], per_source_rows: list[list[int]]) -> list[tuple]:
        """Fold sources left to right, hash-joining on available equality conditions."""
        tuples: list[tuple] = [(r,) for r in per_source_rows[0]]
        for s in range(1, len(stored)):
            conds = []
            for left, right in bound.join_refs:
                if right.source == s and left.source < s:
                    conds.append((left, right))
                elif left.source == s and right.source < s:
                    conds.append((right, left))
            new_rows = per_source_rows[s]
            if not conds:
                tuples = [t + (r,) for t in tuples for r in new_rows]
                continue
            build: dict = {}
            key_cols = [stored[s].columns[new.column.lower()] for _old, new in conds]
            for r in new_rows:
                key = tuple(col[r] for col in key_cols)
                if any(v is None for v in key):
                    continue  # NULL never joins
                build.setdefault(key, []).append(r)
            self.cells_scanned += len(new_rows) * len(key_cols)
            old_cols = [(stored[old.source].columns[old.column.lower()], old.source) for old, _new in conds]
            out = []
            for t in tuples:
                key = tuple(col[t[src]] for col, src in old_cols)
                if any(v is None for v in key):
                    continue
                for r in build.get(key, ()):
                    out.append(t + (r,))
            tuples = out
        return tuples

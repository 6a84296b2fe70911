"""Seeded synthetic wide-table datasets and workloads for desk-scale experiments."""

from __future__ import annotations

import csv
import json
import os
import random
from dataclasses import dataclass

import numpy as np

from .catalog import SchemaCatalog
from .csvio import CsvSpec
from .errors import InfeasiblePattern, IoFailure

DEFAULT_TABLE = "events"
DEFAULT_KEY = "id"

# Default 12-query demo pattern: join structure of the reference workload,
# with query 8 (absent from the published type table) chosen complex.
DEFAULT_PATTERN: tuple[tuple[str, int], ...] = (
    ("1", 1), ("2", 0), ("3", 1), ("4", 0), ("5", 1), ("6", 0),
    ("7", 0), ("8", 1), ("9", 1), ("10", 0), ("11", 1), ("12", 1),
)


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    type_tag: str
    width: int  # logical bytes per row, used by replication accounting


@dataclass(frozen=True)
class DatasetManifest:
    table: str
    csv_path: str
    ddl_path: str
    delimiter: str
    rows: int
    seed: int
    key: str
    columns: tuple[ColumnSpec, ...]
    workload_path: str | None = None

    def widths(self) -> dict[tuple[str, str], int]:
        return {(self.table, c.name): c.width for c in self.columns}

    def csv_spec(self) -> CsvSpec:
        return CsvSpec(
            path=self.csv_path,
            table=self.table,
            columns=tuple(c.name for c in self.columns),
            delimiter=self.delimiter,
            column_types=tuple(c.type_tag for c in self.columns),
        )

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "table": self.table,
            "csv_path": self.csv_path,
            "ddl_path": self.ddl_path,
            "workload_path": self.workload_path,
            "delimiter": self.delimiter,
            "rows": self.rows,
            "seed": self.seed,
            "key": self.key,
            "columns": [{"name": c.name, "type": c.type_tag, "width": c.width} for c in self.columns],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        return cls(
            table=data["table"],
            csv_path=data["csv_path"],
            ddl_path=data["ddl_path"],
            workload_path=data.get("workload_path"),
            delimiter=data["delimiter"],
            rows=data["rows"],
            seed=data["seed"],
            key=data["key"],
            columns=tuple(ColumnSpec(c["name"], c["type"], c["width"]) for c in data["columns"]),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "DatasetManifest":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except OSError as exc:
            raise IoFailure(f"cannot read dataset manifest {path}: {exc}") from exc


def gen_table(
    columns: int,
    rows: int,
    *,
    out_dir: str,
    seed: int = 7,
    table: str = DEFAULT_TABLE,
    key: str = DEFAULT_KEY,
    text_columns: int = 0,
    text_len: int = 12,
    delimiter: str = ";",
    value_range: tuple[float, float] = (0.0, 1000.0),
) -> DatasetManifest:
    """Write a deterministic CSV (integer key plus uniform float columns), its DDL,
    and a manifest with logical column widths. Same seed, same bytes."""
    if columns < 2:
        raise ValueError("need at least a key column and one value column")
    if rows < 0:
        raise ValueError("rows must be >= 0")
    if text_columns > columns - 1:
        raise ValueError("too many text columns")

    os.makedirs(out_dir, exist_ok=True)
    n_float = columns - 1 - text_columns
    pad = max(3, len(str(columns)))
    names = [key]
    names += [f"c{str(i).zfill(pad)}" for i in range(1, n_float + 1)]
    names += [f"t{str(i).zfill(pad)}" for i in range(1, text_columns + 1)]

    csv_path = os.path.join(out_dir, "data.csv")
    rng = np.random.default_rng(seed)
    lo, hi = value_range
    try:
        if text_columns == 0:
            keys = np.arange(rows, dtype=np.float64).reshape(-1, 1)
            values = rng.uniform(lo, hi, size=(rows, n_float))
            matrix = np.hstack([keys, values]) if rows else np.empty((0, columns))
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(delimiter.join(names) + "\n")
                np.savetxt(fh, matrix, fmt=["%d"] + ["%.6f"] * n_float, delimiter=delimiter)
        else:
            pyrng = random.Random(seed)
            values = rng.uniform(lo, hi, size=(rows, n_float))
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, delimiter=delimiter)
                writer.writerow(names)
                for i in range(rows):
                    row = [str(i)] + [f"{v:.6f}" for v in values[i]]
                    row += [
                        f"s{pyrng.randrange(10 ** max(1, text_len - 1)):0{max(1, text_len - 1)}d}"
                        for _ in range(text_columns)
                    ]
                    writer.writerow(row)
    except OSError as exc:
        raise IoFailure(f"cannot write dataset: {exc}") from exc

    ddl_path = os.path.join(out_dir, "schema.sql")
    col_defs = [f"{key} BIGINT PRIMARY KEY"]
    col_defs += [f"{n} DOUBLE" for n in names[1 : 1 + n_float]]
    col_defs += [f"{n} VARCHAR({text_len})" for n in names[1 + n_float :]]
    with open(ddl_path, "w", encoding="utf-8") as fh:
        fh.write(f"CREATE TABLE {table} (\n  " + ",\n  ".join(col_defs) + "\n);\n")

    specs = [ColumnSpec(key, "int", 8)]
    specs += [ColumnSpec(n, "float", 8) for n in names[1 : 1 + n_float]]
    specs += [ColumnSpec(n, "text", text_len) for n in names[1 + n_float :]]
    manifest = DatasetManifest(
        table=table,
        csv_path=csv_path,
        ddl_path=ddl_path,
        delimiter=delimiter,
        rows=rows,
        seed=seed,
        key=key,
        columns=tuple(specs),
    )
    manifest.save(os.path.join(out_dir, "dataset.json"))
    return manifest


# --- workload generation -----------------------------------------------------------


@dataclass(frozen=True)
class PoolSpec:
    """Non-key attribute quota per group; forces exact union and overlap sizes."""

    simple_only: int
    shared: int
    complex_only: int

    @property
    def total(self) -> int:
        return self.simple_only + self.shared + self.complex_only


def gen_workload(
    schema: SchemaCatalog,
    pattern,
    *,
    out_path: str,
    copy_source: str,
    seed: int = 7,
    table: str | None = None,
    pools: PoolSpec | None = None,
    shared_per_query: int = 2,
    predicate_selectivity: float = 0.02,
    limit_prob: float = 0.25,
    value_range: tuple[float, float] = (0.0, 1000.0),
) -> str:
    """Emit TRUN + COPY tasks followed by queries matching `pattern` exactly.

    Pattern entries are (query_id, type) or (query_id, type, attr_count); type 0
    yields single-source statements, type 1 yields key self-joins, so running
    the classifier on the output reproduces the pattern. With `pools`, attribute
    draws are constrained so the generated groups have exactly the requested
    exclusive/shared sizes (attr counts must then be left unset).
    """
    table = table or schema.table_names()[0]
    table = schema.resolve_table(table)
    key_cols = schema.key_columns(table)
    nonkey = [c.name for c in schema.columns(table) if not c.is_key]
    entries = [_normalize_entry(e) for e in pattern]
    ids = [qid for qid, _, _ in entries]
    if len(set(ids)) != len(ids):
        raise InfeasiblePattern("duplicate query ids in pattern")
    if {"TRUN", "COPY"} & set(ids):
        raise InfeasiblePattern("query ids TRUN and COPY are reserved")
    if len(key_cols) != 1:
        raise InfeasiblePattern("workload generation needs a single-column primary key")
    key = key_cols[0]

    rng = random.Random(seed)
    if pools is not None:
        attrs_of = _pooled_attrs(entries, nonkey, pools, shared_per_query, rng)
    else:
        attrs_of = {}
        for qid, qtype, count in entries:
            n = count if count is not None else rng.randint(1 if qtype == 0 else 2, min(5, len(nonkey)))
            if n > len(nonkey):
                raise InfeasiblePattern(
                    f"query {qid}: wants {n} attributes, table has {len(nonkey)} non-key columns"
                )
            attrs_of[qid] = sorted(rng.sample(nonkey, n))

    lines = [
        f"TRUN\tTRUNCATE TABLE {table};",
        f"COPY\tCOPY {table} FROM '{copy_source}' (DELIMITER ';');",
    ]
    for qid, qtype, _count in entries:
        attrs = sorted(attrs_of[qid])
        if qtype == 0:
            sql = _simple_sql(table, attrs, rng, predicate_selectivity, limit_prob, value_range)
        else:
            sql = _complex_sql(table, key, attrs, rng, predicate_selectivity, value_range)
        lines.append(f"{qid}\t{sql}")

    text = "\n".join(lines) + "\n"
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def _normalize_entry(entry) -> tuple[str, int, int | None]:
    if len(entry) == 2:
        qid, qtype = entry
        count = None
    else:
        qid, qtype, count = entry
    if qtype not in (0, 1):
        raise InfeasiblePattern(f"query {qid}: type must be 0 or 1, got {qtype!r}")
    if count is not None and count < 1:
        raise InfeasiblePattern(f"query {qid}: attribute count must be >= 1")
    return str(qid), qtype, count


def _pooled_attrs(
    entries, nonkey: list[str], pools: PoolSpec, shared_per_query: int, rng: random.Random
) -> dict[str, set[str]]:
    if any(count is not None for _, _, count in entries):
        raise InfeasiblePattern("attr counts cannot be combined with pool quotas")
    if pools.total > len(nonkey):
        raise InfeasiblePattern(
            f"pools need {pools.total} non-key columns, table has {len(nonkey)}"
        )
    simple_ids = [qid for qid, t, _ in entries if t == 0]
    complex_ids = [qid for qid, t, _ in entries if t == 1]
    if pools.simple_only and not simple_ids:
        raise InfeasiblePattern("simple-only pool requires at least one simple query")
    if pools.complex_only and not complex_ids:
        raise InfeasiblePattern("complex-only pool requires at least one complex query")
    if pools.shared and (not simple_ids or not complex_ids):
        raise InfeasiblePattern("shared pool requires both query types")

    union = rng.sample(nonkey, pools.total)
    simple_pool = union[: pools.simple_only]
    shared_pool = union[pools.simple_only : pools.simple_only + pools.shared]
    complex_pool = union[pools.simple_only + pools.shared :]

    attrs_of: dict[str, set[str]] = {qid: set() for qid, _, _ in entries}
    for i, attr in enumerate(simple_pool):
        attrs_of[simple_ids[i % len(simple_ids)]].add(attr)
    for i, attr in enumerate(complex_pool):
        attrs_of[complex_ids[i % len(complex_ids)]].add(attr)
    for ids in (simple_ids, complex_ids):
        if not ids or not shared_pool:
            continue
        for i, attr in enumerate(shared_pool):
            attrs_of[ids[i % len(ids)]].add(attr)
        want = min(shared_per_query, len(shared_pool))
        for j, qid in enumerate(ids):
            k = 0
            while len(attrs_of[qid] & set(shared_pool)) < want:
                attrs_of[qid].add(shared_pool[(j + k) % len(shared_pool)])
                k += 1
    return attrs_of


def _predicate(col: str, rng: random.Random, selectivity: float, value_range: tuple[float, float]) -> str:
    lo_bound, hi_bound = value_range
    span = (hi_bound - lo_bound) * selectivity
    lo = rng.uniform(lo_bound, hi_bound - span)
    return f"{col} > {lo:.3f} AND {col} < {lo + span:.3f}"


def _simple_sql(table, attrs, rng, selectivity, limit_prob, value_range) -> str:
    if not attrs:
        return f"SELECT count(*) FROM {table};"
    if len(attrs) == 1 and rng.random() < 0.3:
        func = rng.choice(["count", "avg", "min", "max"])
        return f"SELECT {func}({attrs[0]}) FROM {table};"
    parts = [f"SELECT {', '.join(attrs)} FROM {table}"]
    n_preds = rng.randint(1, min(2, len(attrs)))
    preds = [_predicate(c, rng, selectivity, value_range) for c in rng.sample(attrs, n_preds)]
    parts.append("WHERE " + " AND ".join(preds))
    if rng.random() < limit_prob:
        parts.append(f"LIMIT {rng.randint(1, 200)}")
    return " ".join(parts) + ";"


def _complex_sql(table, key, attrs, rng, selectivity, value_range) -> str:
    left = attrs[::2]
    right = attrs[1::2]
    projs = [f"a.{c}" for c in left] + [f"b.{c}" for c in right]
    if not projs:
        projs = [f"a.{key}"]
    conds = [f"a.{key} = b.{key}"]
    if left:
        conds.append(_qualified_predicate("a", rng.choice(left), rng, selectivity, value_range))
    if right:
        conds.append(_qualified_predicate("b", rng.choice(right), rng, selectivity, value_range))
    if len(conds) == 1:
        # Keep self-joins selective even without value columns.
        conds.append(f"a.{key} < {max(1, int(rng.uniform(10, 1000)))}")
    return f"SELECT {', '.join(projs)} FROM {table} AS a, {table} AS b WHERE {' AND '.join(conds)};"


def _qualified_predicate(alias, col, rng, selectivity, value_range) -> str:
    lo_bound, hi_bound = value_range
    span = (hi_bound - lo_bound) * selectivity
    lo = rng.uniform(lo_bound, hi_bound - span)
    return f"{alias}.{col} > {lo:.3f} AND {alias}.{col} < {lo + span:.3f}"

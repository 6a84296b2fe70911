"""Physical layouts for the five distribution cases plus the all-loaded baseline.

A layout places attribute groups onto raw/loaded fragments per node, routes
every query to the fragment(s) covering it, and supports byte-exact
replication accounting. Cases III and IV are planned but never executed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .catalog import QueryCatalog, SchemaCatalog
from .errors import EmptyPartition, InvalidCase, MissingWidth
from .partition import COMPLEX, Attr, PartitionPlan

CASE_IDS = ("I", "II", "III", "IV", "V")
WA_CASE = "WA"

RAW = "raw"
LOADED = "loaded"


@dataclass(frozen=True)
class Fragment:
    name: str
    table: str
    columns: tuple[str, ...]  # key columns first, then attributes in schema order
    key_columns: tuple[str, ...]
    fmt: str  # raw | loaded
    node: int

    def value_columns(self) -> tuple[str, ...]:
        return tuple(c for c in self.columns if c not in self.key_columns)

    def attrs(self) -> frozenset[Attr]:
        return frozenset((self.table, c) for c in self.columns)


@dataclass(frozen=True)
class Route:
    fragments: tuple[str, ...]
    cross_format: bool
    home: str  # fragment whose engine the query is assigned to
    node: int


@dataclass(frozen=True)
class PartitionLayout:
    case_id: str  # I..V or WA
    nodes: int
    fragments: tuple[Fragment, ...]
    routing: dict[str, Route]

    def fragment(self, name: str) -> Fragment:
        for f in self.fragments:
            if f.name == name:
                return f
        raise KeyError(name)

    def fragments_of(self, table: str, fmt: str | None = None) -> tuple[Fragment, ...]:
        return tuple(
            f for f in self.fragments if f.table == table and (fmt is None or f.fmt == fmt)
        )

    def executable(self) -> bool:
        return self.case_id not in ("III", "IV")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "case": self.case_id,
            "nodes": self.nodes,
            "fragments": [
                {
                    "name": f.name,
                    "table": f.table,
                    "columns": list(f.columns),
                    "key_columns": list(f.key_columns),
                    "format": f.fmt,
                    "node": f.node,
                }
                for f in self.fragments
            ],
            "routing": {
                q: {
                    "fragments": list(r.fragments),
                    "cross_format": r.cross_format,
                    "home": r.home,
                    "node": r.node,
                }
                for q, r in self.routing.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PartitionLayout":
        return cls(
            case_id=data["case"],
            nodes=data["nodes"],
            fragments=tuple(
                Fragment(
                    name=f["name"],
                    table=f["table"],
                    columns=tuple(f["columns"]),
                    key_columns=tuple(f["key_columns"]),
                    fmt=f["format"],
                    node=f["node"],
                )
                for f in data["fragments"]
            ),
            routing={
                q: Route(tuple(r["fragments"]), r["cross_format"], r["home"], r["node"])
                for q, r in data["routing"].items()
            },
        )


# --- case layouts -------------------------------------------------------------


def plan_layout(
    plan: PartitionPlan, case_id: str, schema: SchemaCatalog, nodes: int
) -> PartitionLayout:
    """Place the plan's attribute groups per distribution case and route queries.

    With two or more nodes, loaded fragments live on node 1 and raw fragments
    round-robin over the remaining nodes. Empty sides are reported as
    EmptyPartition, never silently repaired.
    """
    if case_id not in CASE_IDS:
        raise InvalidCase(f"unknown distribution case {case_id!r}; expected one of {CASE_IDS}")
    if nodes < 1:
        raise ValueError("nodes must be >= 1")

    simple, complex_, common = plan.simple_attrs, plan.complex_attrs, plan.common_attrs
    sides = _case_sides(case_id, simple, complex_, common)
    for side_name, (attrs, _fmt) in sides.items():
        if not attrs:
            raise EmptyPartition(
                f"case {case_id} needs a non-empty {side_name} attribute group"
            )

    tables = sorted(
        {t for t, _ in simple | complex_} | {t for tabs in plan.query_tables.values() for t in tabs}
    )

    fragments: list[Fragment] = []
    for table in tables:
        for side_name, (attrs, fmt) in sides.items():
            cols = _table_columns(schema, table, attrs)
            if not cols and side_name != "shared":
                # Table-local empty group: this table simply has no fragment on
                # that side (only possible in multi-table workloads).
                continue
            if not cols:
                continue
            fragments.append(
                Fragment(
                    name=f"{table}_{side_name}",
                    table=table,
                    columns=tuple(schema.key_columns(table)) + cols,
                    key_columns=tuple(schema.key_columns(table)),
                    fmt=fmt,
                    node=0,  # assigned below
                )
            )
    fragments = _assign_nodes(fragments, nodes)

    routing = _route_queries(plan, schema, fragments)
    return PartitionLayout(case_id=case_id, nodes=nodes, fragments=tuple(fragments), routing=routing)


def _case_sides(
    case_id: str,
    simple: frozenset[Attr],
    complex_: frozenset[Attr],
    common: frozenset[Attr],
) -> dict[str, tuple[frozenset[Attr], str]]:
    """Attribute group and storage format per fragment side for a case."""
    if case_id == "I":
        return {"raw": (simple - common, RAW), "loaded": (complex_, LOADED)}
    if case_id == "II":
        return {"raw": (simple, RAW), "loaded": (complex_ - common, LOADED)}
    if case_id == "III":
        return {
            "raw": (simple - common, RAW),
            "loaded": (complex_ - common, LOADED),
            "shared": (common, LOADED),
        }
    if case_id == "IV":
        return {
            "raw": (simple - common, RAW),
            "loaded": (complex_ - common, LOADED),
            "shared": (common, RAW),
        }
    return {"raw": (simple, RAW), "loaded": (complex_, LOADED)}  # case V


def _table_columns(schema: SchemaCatalog, table: str, attrs: frozenset[Attr]) -> tuple[str, ...]:
    wanted = {a for t, a in attrs if t == table}
    return tuple(c.name for c in schema.columns(table) if c.name in wanted and not c.is_key)


def _assign_nodes(fragments: list[Fragment], nodes: int) -> list[Fragment]:
    ordered = sorted(fragments, key=lambda f: f.name)
    if nodes == 1:
        return [_with_node(f, 1) for f in ordered]
    raw_nodes = list(range(2, nodes + 1))
    out = []
    raw_i = 0
    for f in ordered:
        if f.fmt == LOADED:
            out.append(_with_node(f, 1))
        else:
            out.append(_with_node(f, raw_nodes[raw_i % len(raw_nodes)]))
            raw_i += 1
    return out


def _with_node(f: Fragment, node: int) -> Fragment:
    return Fragment(f.name, f.table, f.columns, f.key_columns, f.fmt, node)


def _route_queries(
    plan: PartitionPlan, schema: SchemaCatalog, fragments: list[Fragment]
) -> dict[str, Route]:
    by_table: dict[str, list[Fragment]] = {}
    for f in fragments:
        by_table.setdefault(f.table, []).append(f)

    routing: dict[str, Route] = {}
    for query_id, qtype in plan.types.items():
        home_fmt = LOADED if qtype == COMPLEX else RAW
        needed_by_table: dict[str, set[str]] = {}
        for table in plan.query_tables[query_id]:
            needed_by_table.setdefault(table, set())
        for t, a in plan.query_attrs[query_id] - plan.key_attrs:
            needed_by_table.setdefault(t, set()).add(a)

        used: list[str] = []
        spans = False
        home: str | None = None
        for table, needed in needed_by_table.items():
            candidates = sorted(by_table.get(table, ()), key=lambda f: (f.fmt != home_fmt, f.name))
            if not candidates:
                raise EmptyPartition(f"query {query_id!r}: no fragments exist for table {table!r}")
            cover: list[Fragment] = []
            remaining = set(needed)
            for frag in candidates:
                frag_cols = set(frag.value_columns())
                if not cover and (frag_cols & remaining or not needed):
                    cover.append(frag)
                    remaining -= frag_cols
                elif frag_cols & remaining:
                    cover.append(frag)
                    remaining -= frag_cols
                if not remaining and cover:
                    break
            if remaining:
                raise EmptyPartition(
                    f"query {query_id!r}: attributes {sorted(remaining)} of table {table!r} "
                    "are not covered by any fragment"
                )
            if len(cover) > 1:
                spans = True
            if home is None:
                home = cover[0].name
            used.extend(f.name for f in cover)

        cross = spans
        dedup = tuple(dict.fromkeys(used))
        assert home is not None
        routing[query_id] = Route(
            fragments=dedup,
            cross_format=cross,
            home=home,
            node=next(f.node for f in fragments if f.name == home),
        )
    return routing


# --- all-loaded baseline ---------------------------------------------------------


def wa_baseline_layout(queries: QueryCatalog, schema: SchemaCatalog, nodes: int) -> PartitionLayout:
    """Baseline: load the union of all workload attributes, replicated on every node.

    Queries are spread across nodes round-robin in workload order; every query
    runs entirely in the loaded engine.
    """
    query_attrs = {q: info.attributes for q, info in queries.entries.items()}
    query_tables = {
        q: tuple(schema.resolve_table(t.table) for t in info.tables)
        for q, info in queries.entries.items()
    }
    return wa_layout_from_attrs(query_attrs, query_tables, schema, nodes)


def wa_layout_from_attrs(
    query_attrs: dict[str, frozenset[Attr]],
    query_tables: dict[str, tuple[str, ...]],
    schema: SchemaCatalog,
    nodes: int,
) -> PartitionLayout:
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    union: set[Attr] = set()
    for attrs in query_attrs.values():
        union |= attrs
    union -= schema.key_attrs()
    tables = sorted({t for t, _ in union} | {t for tabs in query_tables.values() for t in tabs})

    fragments: list[Fragment] = []
    for table in tables:
        cols = _table_columns(schema, table, frozenset(union))
        for node in range(1, nodes + 1):
            fragments.append(
                Fragment(
                    name=f"{table}_hot_n{node}",
                    table=table,
                    columns=tuple(schema.key_columns(table)) + cols,
                    key_columns=tuple(schema.key_columns(table)),
                    fmt=LOADED,
                    node=node,
                )
            )

    routing: dict[str, Route] = {}
    for i, query_id in enumerate(query_attrs):
        node = (i % nodes) + 1
        frags = tuple(
            f"{table}_hot_n{node}" for table in dict.fromkeys(query_tables[query_id])
        )
        routing[query_id] = Route(fragments=frags, cross_format=False, home=frags[0], node=node)
    return PartitionLayout(case_id=WA_CASE, nodes=nodes, fragments=tuple(fragments), routing=routing)


# --- replication accounting -------------------------------------------------------


@dataclass(frozen=True)
class ReplicationReport:
    total_dataset_bytes: int
    fragment_bytes: dict[str, int]
    replicated_bytes: int
    replication_pct: float
    accessed_bytes_by_format: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "total_dataset_bytes": self.total_dataset_bytes,
            "fragment_bytes": dict(self.fragment_bytes),
            "replicated_bytes": self.replicated_bytes,
            "replication_pct": self.replication_pct,
            "accessed_bytes_by_format": dict(self.accessed_bytes_by_format),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReplicationReport":
        return cls(
            total_dataset_bytes=data["total_dataset_bytes"],
            fragment_bytes=dict(data["fragment_bytes"]),
            replicated_bytes=data["replicated_bytes"],
            replication_pct=data["replication_pct"],
            accessed_bytes_by_format=dict(data["accessed_bytes_by_format"]),
        )


def replication_report(
    layout: PartitionLayout, column_widths: dict[Attr, int], row_count: int
) -> ReplicationReport:
    """Byte-exact storage accounting for a layout.

    An attribute stored in k fragments contributes (k-1) extra copies; data
    stored exactly once (including columns outside every fragment) adds zero
    replicated bytes. Widths are logical bytes-per-row per attribute and must
    cover every fragment column.
    """
    copies: Counter[Attr] = Counter()
    fragment_bytes: dict[str, int] = {}
    for f in layout.fragments:
        total = 0
        for col in f.columns:
            attr = (f.table, col)
            if attr not in column_widths:
                raise MissingWidth(f"no byte width known for {f.table}.{col}")
            copies[attr] += 1
            total += column_widths[attr] * row_count
        fragment_bytes[f.name] = total

    replicated = sum(
        (n - 1) * column_widths[attr] * row_count for attr, n in copies.items() if n > 1
    )
    total_dataset = sum(w * row_count for w in column_widths.values())

    accessed_names = {name for route in layout.routing.values() for name in route.fragments}
    accessed: dict[str, int] = {RAW: 0, LOADED: 0}
    for f in layout.fragments:
        if f.name in accessed_names:
            accessed[f.fmt] += fragment_bytes[f.name]

    return ReplicationReport(
        total_dataset_bytes=total_dataset,
        fragment_bytes=fragment_bytes,
        replicated_bytes=replicated,
        replication_pct=(replicated / total_dataset) if total_dataset else 0.0,
        accessed_bytes_by_format=accessed,
    )

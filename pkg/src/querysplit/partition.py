"""Join-complexity classification and attribute-group partitioning.

Queries touching two or more table instances (self-joins included) are
complex; the rest are simple. The attribute unions of the two classes form
the raw-destined and load-destined partitions, their intersection is the
shared partition that may be replicated, and per-partition coverage flags
drive optional refinement rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import QueryCatalog, SchemaCatalog, WorkloadList
from .errors import MissingCatalogEntry

SIMPLE = 0
COMPLEX = 1

Attr = tuple[str, str]


@dataclass(frozen=True)
class PartitionRound:
    number: int
    seed: str  # "complexity" for round 1, else "round<N>/<side>" parentage
    types: dict[str, int]
    simple_attrs: frozenset[Attr]
    complex_attrs: frozenset[Attr]
    common_attrs: frozenset[Attr]
    outside_simple: dict[str, int]  # 1 = query has an attribute outside simple_attrs - common
    outside_complex: dict[str, int]
    partial_simple: frozenset[str]
    partial_complex: frozenset[str]

    def covered_ids(self) -> set[str]:
        """Queries fully answered by one of this round's partitions minus the shared part."""
        return {
            q
            for q in self.types
            if self.outside_simple[q] == 0 or self.outside_complex[q] == 0
        }


@dataclass(frozen=True)
class PartitionPlan:
    types: dict[str, int]
    simple_attrs: frozenset[Attr]
    complex_attrs: frozenset[Attr]
    common_attrs: frozenset[Attr]
    partial_simple: frozenset[str]
    partial_complex: frozenset[str]
    key_attrs: frozenset[Attr]
    rounds: tuple[PartitionRound, ...]
    # Per-query snapshots so a serialized plan is self-contained for layout planning.
    query_attrs: dict[str, frozenset[Attr]]
    query_tables: dict[str, tuple[str, ...]]

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "types": dict(self.types),
            "simple_attrs": _attrs_list(self.simple_attrs),
            "complex_attrs": _attrs_list(self.complex_attrs),
            "common_attrs": _attrs_list(self.common_attrs),
            "partial_simple": sorted(self.partial_simple),
            "partial_complex": sorted(self.partial_complex),
            "key_attrs": _attrs_list(self.key_attrs),
            "query_attrs": {q: _attrs_list(a) for q, a in self.query_attrs.items()},
            "query_tables": {q: list(t) for q, t in self.query_tables.items()},
            "rounds": [
                {
                    "number": r.number,
                    "seed": r.seed,
                    "types": dict(r.types),
                    "simple_attrs": _attrs_list(r.simple_attrs),
                    "complex_attrs": _attrs_list(r.complex_attrs),
                    "common_attrs": _attrs_list(r.common_attrs),
                    "outside_simple": dict(r.outside_simple),
                    "outside_complex": dict(r.outside_complex),
                    "partial_simple": sorted(r.partial_simple),
                    "partial_complex": sorted(r.partial_complex),
                }
                for r in self.rounds
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PartitionPlan":
        rounds = tuple(
            PartitionRound(
                number=r["number"],
                seed=r["seed"],
                types=dict(r["types"]),
                simple_attrs=_attrs_set(r["simple_attrs"]),
                complex_attrs=_attrs_set(r["complex_attrs"]),
                common_attrs=_attrs_set(r["common_attrs"]),
                outside_simple=dict(r["outside_simple"]),
                outside_complex=dict(r["outside_complex"]),
                partial_simple=frozenset(r["partial_simple"]),
                partial_complex=frozenset(r["partial_complex"]),
            )
            for r in data["rounds"]
        )
        return cls(
            types=dict(data["types"]),
            simple_attrs=_attrs_set(data["simple_attrs"]),
            complex_attrs=_attrs_set(data["complex_attrs"]),
            common_attrs=_attrs_set(data["common_attrs"]),
            partial_simple=frozenset(data["partial_simple"]),
            partial_complex=frozenset(data["partial_complex"]),
            key_attrs=_attrs_set(data["key_attrs"]),
            rounds=rounds,
            query_attrs={q: _attrs_set(a) for q, a in data["query_attrs"].items()},
            query_tables={q: tuple(t) for q, t in data["query_tables"].items()},
        )


def _attrs_list(attrs: frozenset[Attr]) -> list[list[str]]:
    return [[t, a] for t, a in sorted(attrs)]


def _attrs_set(items: list) -> frozenset[Attr]:
    return frozenset((t, a) for t, a in items)


# --- operations -----------------------------------------------------------------


def classify_queries(workload: WorkloadList, queries: QueryCatalog) -> dict[str, int]:
    """Type each query task: COMPLEX when it has >= 2 table instances."""
    types: dict[str, int] = {}
    for task in workload.query_tasks():
        if task.task_id not in queries:
            raise MissingCatalogEntry(f"query task {task.task_id!r} has no catalog entry")
        types[task.task_id] = COMPLEX if len(queries[task.task_id].tables) >= 2 else SIMPLE
    return types


def group_attributes(
    queries: QueryCatalog, types: dict[str, int], key_attrs: frozenset[Attr] = frozenset()
) -> tuple[frozenset[Attr], frozenset[Attr]]:
    """Union the (non-key) attributes of type-0 and type-1 queries separately."""
    simple: set[Attr] = set()
    complex_: set[Attr] = set()
    for query_id, qtype in types.items():
        attrs = queries[query_id].attributes - key_attrs
        (complex_ if qtype == COMPLEX else simple).update(attrs)
    return frozenset(simple), frozenset(complex_)


def common_attributes(simple_attrs: frozenset[Attr], complex_attrs: frozenset[Attr]) -> frozenset[Attr]:
    return simple_attrs & complex_attrs


def flag_uncovered(
    queries: QueryCatalog,
    partition: frozenset[Attr],
    workload: WorkloadList,
    key_attrs: frozenset[Attr] = frozenset(),
) -> dict[str, int]:
    """Per-query 0/1 map: 1 when the query needs >= 1 attribute outside `partition`.

    Key attributes are ignored (they are replicated into every materialized
    fragment). The map starts at 0 for every query task in workload order.
    """
    flags = {task.task_id: 0 for task in workload.query_tasks()}
    for query_id in flags:
        if (queries[query_id].attributes - key_attrs) - partition:
            flags[query_id] = 1
    return flags


def build_plan(
    workload: WorkloadList,
    queries: QueryCatalog,
    schema: SchemaCatalog,
    max_rounds: int = 1,
) -> PartitionPlan:
    """Run classification, grouping, and coverage flagging, with optional refinement.

    Refinement treats each coverage map of the previous round as a fresh binary
    type assignment and re-runs grouping on it; it stops early once every query
    is fully covered by some recorded partition minus the shared attributes, or
    when an assignment repeats.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    key_attrs = schema.key_attrs()
    types = classify_queries(workload, queries)

    def make_round(number: int, seed: str, assignment: dict[str, int]) -> PartitionRound:
        simple_attrs, complex_attrs = group_attributes(queries, assignment, key_attrs)
        common = common_attributes(simple_attrs, complex_attrs)
        outside_simple = flag_uncovered(queries, simple_attrs - common, workload, key_attrs)
        outside_complex = flag_uncovered(queries, complex_attrs - common, workload, key_attrs)
        return PartitionRound(
            number=number,
            seed=seed,
            types=dict(assignment),
            simple_attrs=simple_attrs,
            complex_attrs=complex_attrs,
            common_attrs=common,
            outside_simple=outside_simple,
            outside_complex=outside_complex,
            partial_simple=frozenset(
                q for q, t in assignment.items() if t == SIMPLE and outside_simple[q] == 1
            ),
            partial_complex=frozenset(
                q for q, t in assignment.items() if t == COMPLEX and outside_complex[q] == 1
            ),
        )

    first = make_round(1, "complexity", types)
    rounds = [first]
    covered = first.covered_ids()
    seen = {_assignment_key(types)}
    frontier = [first]

    number = 2
    while number <= max_rounds and covered != set(types):
        next_frontier: list[PartitionRound] = []
        for parent in frontier:
            for side, assignment in (
                ("simple-side", parent.outside_simple),
                ("complex-side", parent.outside_complex),
            ):
                key = _assignment_key(assignment)
                if key in seen:
                    continue
                seen.add(key)
                child = make_round(number, f"round{parent.number}/{side}", assignment)
                rounds.append(child)
                next_frontier.append(child)
                covered |= child.covered_ids()
        if not next_frontier:
            break
        frontier = next_frontier
        number += 1

    return PartitionPlan(
        types=types,
        simple_attrs=first.simple_attrs,
        complex_attrs=first.complex_attrs,
        common_attrs=first.common_attrs,
        partial_simple=first.partial_simple,
        partial_complex=first.partial_complex,
        key_attrs=key_attrs,
        rounds=tuple(rounds),
        query_attrs={q: queries[q].attributes for q in types},
        query_tables={
            q: tuple(schema.resolve_table(t.table) for t in queries[q].tables) for q in types
        },
    )


def _assignment_key(assignment: dict[str, int]) -> frozenset:
    return frozenset(assignment.items())


def summarize(plan: PartitionPlan) -> str:
    """Human-readable plan report for the CLI."""
    lines = ["query types (0=simple, 1=complex):"]
    lines.append("  " + "  ".join(f"{q}:{t}" for q, t in plan.types.items()))
    lines.append(
        f"attribute groups: simple={len(plan.simple_attrs)} complex={len(plan.complex_attrs)} "
        f"shared={len(plan.common_attrs)} "
        f"(union={len(plan.simple_attrs | plan.complex_attrs)}, keys={len(plan.key_attrs)})"
    )
    lines.append(
        f"partially covered: simple-side={sorted(plan.partial_simple)} "
        f"complex-side={sorted(plan.partial_complex)}"
    )
    for r in plan.rounds:
        lines.append(
            f"round {r.number} [{r.seed}]: group0={len(r.simple_attrs)} group1={len(r.complex_attrs)} "
            f"shared={len(r.common_attrs)} covered={len(r.covered_ids())}/{len(r.types)}"
        )
    return "\n".join(lines)

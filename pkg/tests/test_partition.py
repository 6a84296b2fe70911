import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fake_query_info, fake_workload, make_workload
from querysplit.catalog import extract_schema
from querysplit.errors import MissingCatalogEntry
from querysplit.partition import (
    PartitionPlan,
    build_plan,
    classify_queries,
    common_attributes,
    flag_uncovered,
    group_attributes,
)

TABLE_II_TYPES = {
    "1": 1, "2": 0, "3": 1, "4": 0, "5": 1, "6": 0,
    "7": 0, "9": 1, "10": 0, "11": 1, "12": 1,
}


def _sky(attr_names):
    return {("sky", a) for a in attr_names}


def test_classify_single_count_query(sky_schema):
    workload, queries = make_workload(sky_schema, {"Q": "SELECT count(id) FROM sky"})
    assert classify_queries(workload, queries) == {"Q": 0}


def test_classify_self_join_is_complex(sky_schema):
    workload, queries = make_workload(
        sky_schema, {"Q": "SELECT x.a FROM sky x, sky y WHERE x.id = y.id"}
    )
    assert classify_queries(workload, queries) == {"Q": 1}


def test_classify_reproduces_reference_pattern(sky_schema):
    statements = {}
    for qid, qtype in TABLE_II_TYPES.items():
        if qtype == 0:
            statements[qid] = "SELECT a, b FROM sky"
        else:
            statements[qid] = "SELECT x.a, y.b FROM sky x, sky y WHERE x.id = y.id"
    workload, queries = make_workload(sky_schema, statements)
    assert classify_queries(workload, queries) == TABLE_II_TYPES


def test_classify_missing_entry():
    workload, queries = fake_workload({"A": fake_query_info(["sky"], _sky(["a"]))})
    broken = type(queries)(entries={})
    with pytest.raises(MissingCatalogEntry):
        classify_queries(workload, broken)


def test_group_attributes_direct_union():
    workload, queries = fake_workload(
        {
            "A": fake_query_info(["sky", "sky"], _sky(["a", "b"])),
            "B": fake_query_info(["sky"], _sky(["b", "c"])),
        }
    )
    types = classify_queries(workload, queries)
    simple, complex_ = group_attributes(queries, types)
    assert simple == _sky(["b", "c"])
    assert complex_ == _sky(["a", "b"])


def test_group_attributes_all_simple_gives_empty_complex():
    workload, queries = fake_workload(
        {
            "A": fake_query_info(["sky"], _sky(["a"])),
            "B": fake_query_info(["sky"], _sky(["b"])),
        }
    )
    simple, complex_ = group_attributes(queries, classify_queries(workload, queries))
    assert complex_ == frozenset()
    assert simple == _sky(["a", "b"])


def test_common_attributes_cases():
    assert common_attributes(frozenset({("t", "a"), ("t", "b")}), frozenset({("t", "b"), ("t", "c")})) == {
        ("t", "b")
    }
    assert common_attributes(frozenset({("t", "a")}), frozenset({("t", "c")})) == frozenset()
    s = frozenset({("t", "a"), ("t", "b")})
    assert common_attributes(s, s) == s


def test_flag_uncovered_brute_force_example():
    workload, queries = fake_workload({"B": fake_query_info(["sky"], _sky(["b", "c"]))})
    # Brute-force membership: attribute b is outside {c}, so B is flagged.
    flags = flag_uncovered(queries, frozenset(_sky(["c"])), workload)
    assert flags == {"B": 1}
    flags = flag_uncovered(queries, frozenset(_sky(["b", "c", "d"])), workload)
    assert flags == {"B": 0}


def test_plan_single_simple_query(sky_schema):
    workload, queries = make_workload(sky_schema, {"Q": "SELECT a FROM sky WHERE a > 1"})
    plan = build_plan(workload, queries, sky_schema)
    assert plan.complex_attrs == frozenset()
    assert plan.common_attrs == frozenset()
    assert plan.partial_simple == frozenset()
    assert plan.partial_complex == frozenset()


def test_plan_disjoint_queries_fully_covered_terminates(sky_schema):
    workload, queries = make_workload(
        sky_schema,
        {
            "S": "SELECT a, b FROM sky",
            "C": "SELECT x.c, y.d FROM sky x, sky y WHERE x.id = y.id",
        },
    )
    plan = build_plan(workload, queries, sky_schema, max_rounds=3)
    assert plan.common_attrs == frozenset()
    # Exhaustive check: both queries fit inside their partitions minus the shared part.
    assert queries["S"].attributes - plan.key_attrs <= plan.simple_attrs - plan.common_attrs
    assert queries["C"].attributes - plan.key_attrs <= plan.complex_attrs - plan.common_attrs
    assert len(plan.rounds) == 1  # early stop, refinement never triggered


def test_plan_keys_excluded_but_snapshot_complete(sky_schema):
    workload, queries = make_workload(
        sky_schema, {"Q": "SELECT id, a FROM sky WHERE id > 3"}
    )
    plan = build_plan(workload, queries, sky_schema)
    assert plan.simple_attrs == _sky(["a"])
    assert ("sky", "id") in plan.query_attrs["Q"]


def test_plan_refinement_records_rounds(sky_schema):
    # Overlapping attributes force partial coverage, enabling a second round.
    workload, queries = make_workload(
        sky_schema,
        {
            "S1": "SELECT a, b FROM sky",
            "S2": "SELECT b, c FROM sky",
            "C1": "SELECT x.b, y.d FROM sky x, sky y WHERE x.id = y.id",
        },
    )
    plan1 = build_plan(workload, queries, sky_schema, max_rounds=1)
    plan3 = build_plan(workload, queries, sky_schema, max_rounds=3)
    assert len(plan1.rounds) == 1
    assert len(plan3.rounds) > 1
    assert plan3.rounds[0].common_attrs == _sky(["b"])
    for extra in plan3.rounds[1:]:
        assert extra.number >= 2
        assert extra.seed.startswith("round")
        # Round invariants hold for every recorded round.
        assert extra.common_attrs == extra.simple_attrs & extra.complex_attrs


def test_plan_serialization_round_trip(sky_schema):
    workload, queries = make_workload(
        sky_schema,
        {
            "S1": "SELECT a, b FROM sky WHERE a > 1",
            "C1": "SELECT x.b, y.c FROM sky x, sky y WHERE x.id = y.id",
        },
    )
    plan = build_plan(workload, queries, sky_schema, max_rounds=2)
    again = PartitionPlan.from_dict(plan.to_dict())
    assert again == plan


def test_plan_determinism(sky_schema):
    statements = {
        "S1": "SELECT a, c FROM sky",
        "C1": "SELECT x.c, y.e FROM sky x, sky y WHERE x.id = y.id",
        "S2": "SELECT e, b FROM sky",
    }
    workload, queries = make_workload(sky_schema, statements)
    dicts = {
        str(build_plan(workload, queries, sky_schema, max_rounds=2).to_dict()) for _ in range(5)
    }
    assert len(dicts) == 1


# --- property: plan invariants over random synthetic workloads ---------------------


def _random_catalog(rng: random.Random, n_queries: int):
    attrs = [f"a{i}" for i in range(12)]
    entries = {}
    for i in range(n_queries):
        qid = f"q{i}"
        n_tables = 1 if rng.random() < 0.5 else rng.randint(2, 3)
        attr_set = _sky(rng.sample(attrs, rng.randint(0, 5)))
        entries[qid] = fake_query_info(["sky"] * n_tables, attr_set)
    return fake_workload(entries)


def _check_plan_invariants(plan, queries, keys):
    assert plan.common_attrs == plan.simple_attrs & plan.complex_attrs
    simple_expect, complex_expect = set(), set()
    for qid, qtype in plan.types.items():
        target = complex_expect if qtype else simple_expect
        target |= queries[qid].attributes - keys
    assert plan.simple_attrs == frozenset(simple_expect)
    assert plan.complex_attrs == frozenset(complex_expect)
    assert plan.common_attrs <= plan.simple_attrs
    assert plan.common_attrs <= plan.complex_attrs
    for qid in plan.types:
        assert queries[qid].attributes - keys <= plan.simple_attrs | plan.complex_attrs
    # Partially covered sets match brute-force membership recomputation.
    expect_ps = {
        q
        for q, t in plan.types.items()
        if t == 0 and (queries[q].attributes - keys) - (plan.simple_attrs - plan.common_attrs)
    }
    expect_pc = {
        q
        for q, t in plan.types.items()
        if t == 1 and (queries[q].attributes - keys) - (plan.complex_attrs - plan.common_attrs)
    }
    assert plan.partial_simple == frozenset(expect_ps)
    assert plan.partial_complex == frozenset(expect_pc)
    for qid, qtype in plan.types.items():
        target = plan.complex_attrs if qtype else plan.simple_attrs
        assert queries[qid].attributes - keys <= target


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_plan_invariants_random(seed, n_queries):
    schema = extract_schema(
        "CREATE TABLE sky (id BIGINT PRIMARY KEY, "
        + ", ".join(f"a{i} DOUBLE" for i in range(12))
        + ");"
    )
    rng = random.Random(seed)
    workload, queries = _random_catalog(rng, n_queries)
    plan = build_plan(workload, queries, schema, max_rounds=rng.choice([1, 1, 2, 3]))
    _check_plan_invariants(plan, queries, schema.key_attrs())


def test_thousand_query_workload_partitions_fast(sky_schema):
    rng = random.Random(99)
    workload, queries = _random_catalog(rng, 1000)
    start = time.perf_counter()
    build_plan(workload, queries, sky_schema)
    assert time.perf_counter() - start < 1.0

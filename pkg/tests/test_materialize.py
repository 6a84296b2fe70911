import random

import pytest

from conftest import make_workload
from querysplit.catalog import extract_schema
from querysplit.csvio import CsvSpec, write_csv
from querysplit.errors import RowArityMismatch
from querysplit.materialize import split, verify_split
from querysplit.partition import build_plan
from querysplit.placement import plan_layout

DDL = "CREATE TABLE pts (id BIGINT PRIMARY KEY, x DOUBLE, y DOUBLE, z DOUBLE, w DOUBLE);"

STATEMENTS = {
    "S": "SELECT x, y FROM pts WHERE x > 0",
    "C": "SELECT p.z, q.y FROM pts p, pts q WHERE p.id = q.id AND q.w > 1",
}


def _setup(tmp_path, rows):
    schema = extract_schema(DDL)
    spec = CsvSpec(
        path=str(tmp_path / "pts.csv"),
        table="pts",
        columns=("id", "x", "y", "z", "w"),
        column_types=("int", "float", "float", "float", "float"),
    )
    write_csv(spec, rows)
    workload, queries = make_workload(schema, STATEMENTS)
    plan = build_plan(workload, queries, schema)
    layout = plan_layout(plan, "V", schema, 1)
    return schema, spec, layout


def test_split_three_rows_case_v(tmp_path):
    rows = [(0, 1.5, 2.5, 3.5, 4.5), (1, -1.0, 0.0, 9.5, 2.0), (2, 7.0, 8.0, 9.0, 1.0)]
    schema, spec, layout = _setup(tmp_path, rows)
    frags = split(spec, layout, str(tmp_path / "out"))
    assert set(frags) == {"pts_raw", "pts_loaded"}
    for frag_spec in frags.values():
        lines = open(frag_spec.path).read().strip().splitlines()
        assert len(lines) == 4  # header + 3 rows
        assert frag_spec.columns[0] == "id"  # keys lead every fragment


def test_split_identity_projection_reorders_bytes(tmp_path):
    rows = [(0, 1.5, 2.5, 3.5, 4.5), (1, 6.5, 7.5, 8.5, 9.5)]
    schema, spec, layout = _setup(tmp_path, rows)
    # A fragment holding every source column in source order is byte-identical.
    from querysplit.placement import Fragment, PartitionLayout, Route

    full = PartitionLayout(
        case_id="V",
        nodes=1,
        fragments=(
            Fragment("pts_all", "pts", ("id", "x", "y", "z", "w"), ("id",), "raw", 1),
        ),
        routing={},
    )
    frags = split(spec, full, str(tmp_path / "full"))
    assert open(frags["pts_all"].path, "rb").read() == open(spec.path, "rb").read()


def test_split_idempotent_bytes(tmp_path):
    rows = [(i, i * 1.5, i * 2.5, i * 3.5, i * 4.5) for i in range(20)]
    schema, spec, layout = _setup(tmp_path, rows)
    frags1 = split(spec, layout, str(tmp_path / "out"))
    first = {n: open(s.path, "rb").read() for n, s in frags1.items()}
    frags2 = split(spec, layout, str(tmp_path / "out"))
    second = {n: open(s.path, "rb").read() for n, s in frags2.items()}
    assert first == second


def test_split_column_counts_match_layout(tmp_path):
    rows = [(i, 1.0, 2.0, 3.0, 4.0) for i in range(5)]
    schema, spec, layout = _setup(tmp_path, rows)
    frags = split(spec, layout, str(tmp_path / "out"))
    for frag in layout.fragments:
        emitted = open(frags[frag.name].path).readline().strip().split(";")
        assert len(emitted) == len(frag.columns)


def test_split_row_arity_mismatch(tmp_path):
    schema, spec, layout = _setup(tmp_path, [(0, 1.0, 2.0, 3.0, 4.0)])
    with open(spec.path, "a") as fh:
        fh.write("5;6.0\n")
    with pytest.raises(RowArityMismatch) as err:
        split(spec, layout, str(tmp_path / "out"))
    assert err.value.row == 2


def test_verify_identity_split(tmp_path):
    rows = [(i, i + 0.5, i + 1.5, i + 2.5, i + 3.5) for i in range(10)]
    schema, spec, layout = _setup(tmp_path, rows)
    frags = split(spec, layout, str(tmp_path / "out"))
    report = verify_split(spec, frags, ("id",))
    assert report.ok
    assert report.rows_checked == 20


def test_verify_flags_corrupted_cell(tmp_path):
    rows = [(i, 1.0, 2.0, 3.0, 4.0) for i in range(4)]
    schema, spec, layout = _setup(tmp_path, rows)
    frags = split(spec, layout, str(tmp_path / "out"))
    target = frags["pts_raw"].path
    lines = open(target).read().splitlines()
    cells = lines[2].split(";")
    cells[1] = "999.25"
    lines[2] = ";".join(cells)
    open(target, "w").write("\n".join(lines) + "\n")
    report = verify_split(spec, frags, ("id",))
    assert len(report.mismatches) == 1
    assert "999.25" in report.mismatches[0]


def test_verify_randomized_instance(tmp_path):
    rng = random.Random(42)
    rows = [
        (i, rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, 100))
        for i in range(1000)
    ]
    schema, spec, layout = _setup(tmp_path, rows)
    frags = split(spec, layout, str(tmp_path / "out"))
    report = verify_split(spec, frags, ("id",))
    assert report.ok
    assert report.rows_checked == 2000

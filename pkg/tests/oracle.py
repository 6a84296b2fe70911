"""Independent brute-force reference engine for equivalence testing.

Deliberately shares no evaluation code with the package: it materializes every
table as a list of dicts, enumerates source combinations with nested loops,
and applies comparisons and aggregates with its own logic. LIMIT is not
applied here; use `check_limit` so tests can verify size-plus-membership
semantics instead of trusting row order.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import Counter

from querysplit.sqlang import Aggregate, QueryAst


def load_rows(csv_path: str, columns, types, delimiter=";") -> list[dict]:
    rows = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        next(reader)  # header
        for raw in reader:
            row = {}
            for name, tag, cell in zip(columns, types, raw):
                if cell == "":
                    row[name.lower()] = None
                elif tag == "int":
                    row[name.lower()] = int(cell)
                elif tag == "float":
                    row[name.lower()] = float(cell)
                else:
                    row[name.lower()] = cell
            rows.append(row)
    return rows


def _compare(value, op, literal) -> bool:
    if value is None:
        return False
    if op == "=":
        return value == literal
    if op == "<>":
        return value != literal
    if op == "<":
        return value < literal
    if op == "<=":
        return value <= literal
    if op == ">":
        return value > literal
    if op == ">=":
        return value >= literal
    raise AssertionError(op)


def run_oracle(
    ast: QueryAst, tables: dict[str, list[dict]], columns_of: dict[str, set[str]]
) -> list[tuple]:
    """All matching output rows (LIMIT ignored, aggregates evaluated).

    `columns_of` maps lower-case table name to its lower-case column names,
    so resolution works even for empty tables.
    """
    sources = []
    binders = []  # per source: name it answers to (alias or table), lower
    source_cols = []
    for src in ast.sources:
        sources.append(tables[src.table.lower()])
        binders.append((src.alias or src.table).lower())
        source_cols.append(columns_of[src.table.lower()])

    def resolve(ref):
        if ref.qualifier is not None:
            idx = [i for i, b in enumerate(binders) if b == ref.qualifier.lower()]
            assert len(idx) == 1, f"oracle cannot resolve {ref}"
            return idx[0], ref.column.lower()
        idx = [i for i, cols in enumerate(source_cols) if ref.column.lower() in cols]
        assert len(idx) == 1, f"oracle ambiguity for {ref}"
        return idx[0], ref.column.lower()

    matching = []
    for combo in itertools.product(*sources):
        ok = True
        for cond in ast.join_conditions:
            li, lc = resolve(cond.left)
            ri, rc = resolve(cond.right)
            lv, rv = combo[li][lc], combo[ri][rc]
            if lv is None or rv is None or lv != rv:
                ok = False
                break
        if not ok:
            continue
        for pred in ast.predicates:
            i, c = resolve(pred.column)
            if not _compare(combo[i][c], pred.op, pred.value):
                ok = False
                break
        if ok:
            matching.append(combo)

    if ast.is_aggregate:
        out = []
        for proj in ast.projections:
            assert isinstance(proj, Aggregate)
            if proj.arg is None:
                out.append(len(matching))
                continue
            i, c = resolve(proj.arg)
            values = [combo[i][c] for combo in matching if combo[i][c] is not None]
            if proj.func == "count":
                out.append(len(values))
            elif not values:
                out.append(None)
            elif proj.func == "avg":
                out.append(sum(values) / len(values))
            elif proj.func == "min":
                out.append(min(values))
            else:
                out.append(max(values))
        return [tuple(out)]

    getters = [resolve(p) for p in ast.projections]
    return [tuple(combo[i][c] for i, c in getters) for combo in matching]


# --- comparison helpers ------------------------------------------------------------


def _close(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)
    return a == b


def same_multiset(actual: list[tuple], expected: list[tuple], aggregate: bool = False) -> bool:
    """Multiset equality; aggregate rows tolerate float rounding from sum order."""
    if aggregate:
        if len(actual) != len(expected):
            return False
        return all(
            len(a) == len(e) and all(_close(x, y) for x, y in zip(a, e))
            for a, e in zip(actual, expected)
        )
    return Counter(actual) == Counter(expected)


def check_limit(actual: list[tuple], full_expected: list[tuple], limit: int) -> bool:
    """LIMIT semantics: size is min(limit, |matches|) and rows are a sub-multiset."""
    if len(actual) != min(limit, len(full_expected)):
        return False
    remaining = Counter(full_expected)
    for row in actual:
        if remaining[row] <= 0:
            return False
        remaining[row] -= 1
    return True

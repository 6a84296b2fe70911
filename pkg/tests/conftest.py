import pytest

from querysplit import catalog, sqlang

SKY_DDL = """
CREATE TABLE sky (
  id BIGINT PRIMARY KEY,
  a DOUBLE,
  b DOUBLE,
  c DOUBLE,
  d DOUBLE,
  e DOUBLE,
  f DOUBLE,
  g DOUBLE,
  h DOUBLE,
  name VARCHAR(12)
);
"""


@pytest.fixture
def sky_schema():
    return catalog.extract_schema(SKY_DDL)


def make_workload(schema, statements: dict[str, str]):
    """Build (WorkloadList, QueryCatalog) from {task_id: sql} preserving order."""
    text = "\n".join(f"{tid}\t{sql}" for tid, sql in statements.items())
    return catalog.extract_workload(text, schema)


def fake_query_info(tables: list[str], attrs: set[tuple[str, str]]) -> catalog.QueryInfo:
    """Catalog entry for partitioner tests; the AST is never consulted there."""
    return catalog.QueryInfo(
        ast=None,
        tables=tuple(sqlang.TableInstance(t) for t in tables),
        attributes=frozenset(attrs),
    )


def fake_workload(entries: dict[str, catalog.QueryInfo]):
    tasks = tuple(
        catalog.Task(task_id=qid, statement="SELECT synthetic", kind="query") for qid in entries
    )
    return catalog.WorkloadList(tasks), catalog.QueryCatalog(dict(entries))

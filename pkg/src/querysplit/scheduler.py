"""Workload execution under a layout: sequential, multicore-overlap, and multinode.

Every task's duration is measured wall-clock around its real execution; the
parallel regimes then compose a deterministic greedy timeline honoring the
barrier (loaded-routed queries never start before their load finishes) and the
overlap rule (raw-only queries stream on a dedicated worker from t=0 over one
shared connection). Multinode runs are simulated in-process with fully
isolated engine sets per node.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass, field

from .catalog import QueryCatalog, SchemaCatalog, WorkloadList, statement_target_table
from .csvio import CsvSpec
from .errors import CaseNotExecutable, InvalidCase, IoFailure, QuerySplitError, RoutingError
from .federated import run_query
from .loaded_engine import LoadedStore
from .placement import LOADED, RAW, PartitionLayout
from .raw_engine import RawConnection


@dataclass(frozen=True)
class SchedulerConfig:
    workers: int | None = None  # None: max(2, cpu count) in multicore mode
    # Makespan sanity budget: multicore WET <= sequential WET * (1+rel) + abs.
    overhead_rel: float = 0.5
    overhead_abs_us: int = 500_000


@dataclass
class TaskRecord:
    task_id: str
    kind: str  # query | load | truncate
    node: int
    worker: int
    start_us: int
    end_us: int
    engine: str  # raw | loaded | federated | none
    bytes_read: int
    cells_scanned: int
    connection_ids: tuple[int, ...]
    rows: int
    error: str | None = None

    @property
    def duration_us(self) -> int:
        return self.end_us - self.start_us


@dataclass
class ExecutionReport:
    mode: str  # seq | multicore | multinode
    case_id: str
    nodes: int
    workers: int
    tasks: list[TaskRecord]
    load_total_us: int
    makespan_us: int
    per_node_makespan_us: dict[int, int]
    query_us: dict[str, int]
    replication: dict | None = None
    error: str | None = None
    version: int = 1

    def mean_node_makespan_us(self) -> float:
        if not self.per_node_makespan_us:
            return 0.0
        return sum(self.per_node_makespan_us.values()) / len(self.per_node_makespan_us)

    def query_total_us(self) -> int:
        return sum(self.query_us.values())

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "mode": self.mode,
            "case": self.case_id,
            "nodes": self.nodes,
            "workers": self.workers,
            "load_total_us": self.load_total_us,
            "makespan_us": self.makespan_us,
            "per_node_makespan_us": {str(k): v for k, v in self.per_node_makespan_us.items()},
            "query_us": dict(self.query_us),
            "replication": self.replication,
            "error": self.error,
            "tasks": [
                {
                    "task_id": t.task_id,
                    "kind": t.kind,
                    "node": t.node,
                    "worker": t.worker,
                    "start_us": t.start_us,
                    "end_us": t.end_us,
                    "engine": t.engine,
                    "bytes_read": t.bytes_read,
                    "cells_scanned": t.cells_scanned,
                    "connection_ids": list(t.connection_ids),
                    "rows": t.rows,
                    "error": t.error,
                }
                for t in self.tasks
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExecutionReport":
        return cls(
            mode=data["mode"],
            case_id=data["case"],
            nodes=data["nodes"],
            workers=data["workers"],
            tasks=[
                TaskRecord(
                    task_id=t["task_id"],
                    kind=t["kind"],
                    node=t["node"],
                    worker=t["worker"],
                    start_us=t["start_us"],
                    end_us=t["end_us"],
                    engine=t["engine"],
                    bytes_read=t["bytes_read"],
                    cells_scanned=t["cells_scanned"],
                    connection_ids=tuple(t["connection_ids"]),
                    rows=t["rows"],
                    error=t.get("error"),
                )
                for t in data["tasks"]
            ],
            load_total_us=data["load_total_us"],
            makespan_us=data["makespan_us"],
            per_node_makespan_us={int(k): v for k, v in data["per_node_makespan_us"].items()},
            query_us=dict(data["query_us"]),
            replication=data.get("replication"),
            error=data.get("error"),
            version=data.get("version", 1),
        )


def emit_report(report: ExecutionReport, path: str, fmt: str = "json") -> None:
    """Serialize a report; json round-trips, csv is a one-row-per-task summary."""
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        if fmt == "json":
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=2)
                fh.write("\n")
        elif fmt == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(
                    ["task_id", "kind", "node", "worker", "start_us", "end_us", "engine",
                     "bytes_read", "cells_scanned", "rows"]
                )
                for t in report.tasks:
                    writer.writerow(
                        [t.task_id, t.kind, t.node, t.worker, t.start_us, t.end_us, t.engine,
                         t.bytes_read, t.cells_scanned, t.rows]
                    )
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise IoFailure(f"cannot write report {path}: {exc}") from exc


def load_report(path: str) -> ExecutionReport:
    try:
        with open(path, encoding="utf-8") as fh:
            return ExecutionReport.from_dict(json.load(fh))
    except OSError as exc:
        raise IoFailure(f"cannot read report {path}: {exc}") from exc


# --- engine hosting ------------------------------------------------------------


class _ConnPool:
    """Fragment-name -> RawConnection mapping; creates connections on first use."""

    def __init__(self, specs: dict[str, CsvSpec], schema: SchemaCatalog, shared: dict | None):
        self._specs = specs
        self._schema = schema
        self._conns: dict[str, RawConnection] = shared if shared is not None else {}

    def __getitem__(self, name: str) -> RawConnection:
        conn = self._conns.get(name)
        if conn is None:
            conn = RawConnection(self._specs[name], self._schema)
            self._conns[name] = conn
        return conn


class EngineHost:
    """One node's engines: a loaded store plus raw connections over local fragments."""

    def __init__(
        self,
        layout: PartitionLayout,
        frag_specs: dict[str, CsvSpec],
        schema: SchemaCatalog,
        node: int | None = None,
    ):
        self.layout = layout
        self.schema = schema
        self.fragments = [f for f in layout.fragments if node is None or f.node == node]
        missing = [f.name for f in self.fragments if f.name not in frag_specs]
        if missing:
            raise RoutingError(f"no materialized files for fragments {missing}; run materialize first")
        self.frag_specs = {f.name: frag_specs[f.name] for f in self.fragments}
        self.store = LoadedStore()
        self.shared_conns: dict[str, RawConnection] = {}

    def loaded_fragments_of(self, table: str):
        return [
            f for f in self.fragments if f.fmt == LOADED and f.table.lower() == table.lower()
        ]

    def shared_pool(self) -> _ConnPool:
        return _ConnPool(self.frag_specs, self.schema, self.shared_conns)

    def fresh_pool(self) -> _ConnPool:
        return _ConnPool(self.frag_specs, self.schema, None)


def _run_task(task, host: EngineHost, queries: QueryCatalog, pool: _ConnPool, node: int) -> TaskRecord:
    """Execute one task, measuring wall-clock; stamps are filled in later."""
    start = time.perf_counter_ns()
    engine, bytes_read, cells, conn_ids, rows, error = "none", 0, 0, (), 0, None
    try:
        if task.kind == "truncate":
            table = statement_target_table(task)
            for frag in host.loaded_fragments_of(table):
                host.store.truncate(frag.name)
            engine = "loaded"
        elif task.kind == "load":
            table = statement_target_table(task)
            for frag in host.loaded_fragments_of(table):
                record = host.store.load(host.frag_specs[frag.name], host.schema, name=frag.name)
                bytes_read += record.bytes_loaded
                rows += record.rows
            engine = "loaded"
        else:
            result, stats = run_query(
                task.task_id, queries[task.task_id].ast, host.layout, host.schema, pool, host.store
            )
            engine = stats.engine
            bytes_read = stats.raw_bytes_read
            cells = stats.cells_scanned
            conn_ids = stats.connection_ids
            rows = stats.rows
    except QuerySplitError as exc:
        error = f"{type(exc).__name__}: {exc}"
    micros = (time.perf_counter_ns() - start) // 1000
    return TaskRecord(
        task_id=task.task_id,
        kind=task.kind,
        node=node,
        worker=1,
        start_us=0,
        end_us=micros,
        engine=engine,
        bytes_read=bytes_read,
        cells_scanned=cells,
        connection_ids=conn_ids,
        rows=rows,
        error=error,
    )


def _check_runnable(layout: PartitionLayout) -> None:
    if not layout.executable():
        raise CaseNotExecutable(
            f"case {layout.case_id} is layout-only; run cases I, II, V, or WA"
        )


def _stamp(record: TaskRecord, start: int, worker: int) -> TaskRecord:
    record.start_us, record.end_us = start, start + record.end_us
    record.worker = worker
    return record


def _finish(
    mode: str,
    layout: PartitionLayout,
    workers: int,
    records: list[TaskRecord],
    per_node: dict[int, int],
    error: str | None,
) -> ExecutionReport:
    return ExecutionReport(
        mode=mode,
        case_id=layout.case_id,
        nodes=layout.nodes,
        workers=workers,
        tasks=records,
        load_total_us=sum(r.duration_us for r in records if r.kind == "load"),
        makespan_us=max((r.end_us for r in records), default=0),
        per_node_makespan_us=per_node,
        query_us={r.task_id: r.duration_us for r in records if r.kind == "query"},
        error=error,
    )


# --- modes -----------------------------------------------------------------------


def run_sequential(
    workload: WorkloadList,
    layout: PartitionLayout,
    frag_specs: dict[str, CsvSpec],
    schema: SchemaCatalog,
    queries: QueryCatalog,
    config: SchedulerConfig = SchedulerConfig(),
) -> ExecutionReport:
    """One worker, strict workload-file order; a task error aborts with a partial report."""
    _check_runnable(layout)
    host = EngineHost(layout, frag_specs, schema)
    pool = host.shared_pool()
    records: list[TaskRecord] = []
    clock = 0
    error = None
    for task in workload.tasks:
        node = _task_node(task, layout, host)
        record = _stamp(_run_task(task, host, queries, pool, node), clock, worker=1)
        clock = record.end_us
        records.append(record)
        if record.error:
            error = f"task {task.task_id}: {record.error}"
            break
    return _finish("seq", layout, 1, records, {1: clock} if records else {}, error)


def run_multicore(
    workload: WorkloadList,
    layout: PartitionLayout,
    frag_specs: dict[str, CsvSpec],
    schema: SchemaCatalog,
    queries: QueryCatalog,
    config: SchedulerConfig = SchedulerConfig(),
) -> ExecutionReport:
    """Load/truncate chain on worker 1 from t=0; raw-only queries stream on worker 2
    from t=0 over one shared connection; everything touching loaded data is
    dispatched greedily across all workers once loading completes."""
    _check_runnable(layout)
    workers = config.workers or max(2, os.cpu_count() or 2)
    workers = max(2, workers)
    host = EngineHost(layout, frag_specs, schema)

    load_chain = [t for t in workload.tasks if t.kind in ("load", "truncate")]
    query_tasks = [t for t in workload.tasks if t.kind == "query"]
    raw_only: list = []
    pooled: list = []
    for task in query_tasks:
        route = layout.routing.get(task.task_id)
        if route is not None and all(
            layout.fragment(name).fmt == RAW for name in route.fragments
        ):
            raw_only.append(task)
        else:
            pooled.append(task)

    error = None
    load_records: list[TaskRecord] = []
    for task in load_chain:
        record = _run_task(task, host, queries, host.shared_pool(), _task_node(task, layout, host))
        load_records.append(record)
        if record.error:
            error = f"task {task.task_id}: {record.error}"
            break

    sq_pool = host.shared_pool()  # the dedicated single connection stream
    sq_records: list[TaskRecord] = []
    if error is None:
        for task in raw_only:
            record = _run_task(task, host, queries, sq_pool, _task_node(task, layout, host))
            sq_records.append(record)
            if record.error:
                error = f"task {task.task_id}: {record.error}"
                break

    pooled_records: list[TaskRecord] = []
    if error is None:
        for task in pooled:
            record = _run_task(task, host, queries, host.fresh_pool(), _task_node(task, layout, host))
            pooled_records.append(record)
            if record.error:
                error = f"task {task.task_id}: {record.error}"
                break

    # Compose the timeline.
    clock = 0
    for record in load_records:
        record = _stamp(record, clock, worker=1)
        clock = record.end_us
    load_end = clock

    clock = 0
    for record in sq_records:
        record = _stamp(record, clock, worker=2)
        clock = record.end_us
    sq_end = clock

    available = [load_end] * workers
    if sq_records:
        available[1] = max(load_end, sq_end)
    for record in pooled_records:
        w = min(range(workers), key=lambda i: available[i])
        record = _stamp(record, available[w], worker=w + 1)
        available[w] = record.end_us

    by_id = {r.task_id: r for r in load_records + sq_records + pooled_records}
    records = [by_id[t.task_id] for t in workload.tasks if t.task_id in by_id]
    makespan = max([load_end, sq_end] + [r.end_us for r in records], default=0)
    report = _finish("multicore", layout, workers, records, {1: makespan}, error)
    report.makespan_us = makespan
    return report


def run_multinode(
    workload: WorkloadList,
    layout: PartitionLayout,
    frag_specs: dict[str, CsvSpec],
    schema: SchemaCatalog,
    queries: QueryCatalog,
    nodes: int = 2,
    config: SchedulerConfig = SchedulerConfig(),
) -> ExecutionReport:
    """Isolated per-node sequential execution; queries run on the node holding
    their fragments, loads run only on nodes hosting loaded fragments."""
    _check_runnable(layout)
    if layout.nodes != nodes:
        raise InvalidCase(f"layout was planned for {layout.nodes} node(s), requested {nodes}")
    for query_id, route in layout.routing.items():
        node_set = {layout.fragment(name).node for name in route.fragments}
        if len(node_set) > 1:
            raise CaseNotExecutable(
                f"query {query_id!r} spans nodes {sorted(node_set)}; cross-node joins are not supported"
            )

    all_records: list[TaskRecord] = []
    per_node: dict[int, int] = {}
    error = None
    for node in range(1, nodes + 1):
        host = EngineHost(layout, frag_specs, schema, node=node)
        pool = host.shared_pool()
        clock = 0
        for task in workload.tasks:
            if task.kind == "query":
                route = layout.routing.get(task.task_id)
                if route is None or route.node != node:
                    continue
            else:
                table = statement_target_table(task)
                if not host.loaded_fragments_of(table):
                    continue
            record = _stamp(_run_task(task, host, queries, pool, node), clock, worker=1)
            clock = record.end_us
            all_records.append(record)
            if record.error:
                error = f"task {task.task_id} (node {node}): {record.error}"
                break
        per_node[node] = clock
        del host, pool  # nodes are isolated; free engine memory before the next one
        if error:
            break

    report = _finish("multinode", layout, 1, all_records, per_node, error)
    report.makespan_us = max(per_node.values(), default=0)
    return report


def _task_node(task, layout: PartitionLayout, host: EngineHost) -> int:
    if task.kind == "query":
        route = layout.routing.get(task.task_id)
        return route.node if route else 1
    frags = host.loaded_fragments_of(statement_target_table(task))
    return frags[0].node if frags else 1

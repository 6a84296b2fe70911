"""Vertical partitioning by query join complexity, with hybrid raw/loaded execution.

SQL workloads are classified by table-instance count (self-joins are complex),
attribute groups are split into raw-destined and load-destined partitions with
a shared replicable group, and workloads run under five distribution cases and
three scheduling regimes with byte-exact replication accounting.
"""

from .catalog import (
    QueryCatalog,
    SchemaCatalog,
    Task,
    WorkloadList,
    extract_schema,
    extract_workload,
)
from .csvio import CsvSpec
from .datagen import DatasetManifest, PoolSpec, gen_table, gen_workload
from .federated import run_query
from .loaded_engine import LoadedStore
from .materialize import split, verify_split
from .partition import PartitionPlan, build_plan, classify_queries
from .placement import (
    Fragment,
    PartitionLayout,
    ReplicationReport,
    plan_layout,
    replication_report,
    wa_baseline_layout,
)
from .raw_engine import RawConnection
from .scheduler import (
    ExecutionReport,
    SchedulerConfig,
    emit_report,
    run_multicore,
    run_multinode,
    run_sequential,
)
from .sqlang import QueryAst, parse_query, render

__version__ = "0.1.0"

__all__ = [
    "CsvSpec",
    "DatasetManifest",
    "ExecutionReport",
    "Fragment",
    "LoadedStore",
    "PartitionLayout",
    "PartitionPlan",
    "PoolSpec",
    "QueryAst",
    "QueryCatalog",
    "RawConnection",
    "ReplicationReport",
    "SchedulerConfig",
    "SchemaCatalog",
    "Task",
    "WorkloadList",
    "build_plan",
    "classify_queries",
    "emit_report",
    "extract_schema",
    "extract_workload",
    "gen_table",
    "gen_workload",
    "parse_query",
    "plan_layout",
    "render",
    "replication_report",
    "run_multicore",
    "run_multinode",
    "run_query",
    "run_sequential",
    "split",
    "verify_split",
    "wa_baseline_layout",
]

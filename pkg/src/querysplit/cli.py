"""Command-line pipeline: gen-data, ingest, partition, plan, materialize, run, compare.

Every command reads and writes plain files so the pipeline can be resumed or
golden-tested at any step. Exit codes: 0 success, 2 usage, 3 input validation,
4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import catalog, datagen, materialize, partition, placement, scheduler
from .csvio import CsvSpec, read_header
from .errors import (
    AmbiguousColumn,
    CaseNotExecutable,
    DdlSyntaxError,
    DuplicateAttribute,
    DuplicateKey,
    DuplicateTable,
    EmptyPartition,
    InfeasiblePattern,
    InvalidCase,
    MissingCatalogEntry,
    MissingWidth,
    QuerySplitError,
    SqlSyntaxError,
    UnknownAttribute,
    UnknownTable,
    WorkloadFormatError,
)

_VALIDATION_ERRORS = (
    SqlSyntaxError,
    UnknownTable,
    UnknownAttribute,
    AmbiguousColumn,
    DdlSyntaxError,
    DuplicateTable,
    DuplicateAttribute,
    WorkloadFormatError,
    MissingCatalogEntry,
    InvalidCase,
    EmptyPartition,
    MissingWidth,
    InfeasiblePattern,
    DuplicateKey,
    MissingCatalogEntry,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4

# Reference constants for the comparison table: fully replicated multi-store
# systems sit at 100%, horizontally partitioned distribution at 0%.
REFERENCE_REPLICATION = {"HTAP": 1.0, "PDC": 0.0}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except QuerySplitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="querysplit",
        description="Vertical partitioning by query join complexity, with hybrid raw/loaded execution.",
    )
    sub = parser.add_subparsers(required=True, metavar="command")

    p = sub.add_parser("gen-data", help="generate a seeded dataset, schema, and workload")
    p.add_argument("--columns", type=int, default=100)
    p.add_argument("--rows", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--table", default=datagen.DEFAULT_TABLE)
    p.add_argument("--text-columns", type=int, default=0)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("ingest", help="parse schema DDL and workload into plan inputs")
    p.add_argument("--schema", required=True)
    p.add_argument("--workload", required=True)
    p.add_argument("--out", required=True, help="plan-inputs JSON file")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("partition", help="classify queries and compute attribute groups")
    p.add_argument("--inputs", required=True, help="plan-inputs JSON from ingest")
    p.add_argument("--max-rounds", type=int, default=1)
    p.add_argument("--out", required=True, help="plan JSON file")
    p.set_defaults(func=_cmd_partition)

    p = sub.add_parser("plan", help="place attribute groups for a distribution case")
    p.add_argument("--plan", required=True, help="plan JSON from partition")
    p.add_argument("--case", required=True, choices=["I", "II", "III", "IV", "V", "WA"])
    p.add_argument("--nodes", type=int, default=1)
    p.add_argument("--dataset", required=True, help="dataset manifest JSON from gen-data")
    p.add_argument("--out", required=True, help="layout JSON file")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("materialize", help="split the source CSV into fragment files")
    p.add_argument("--layout", required=True)
    p.add_argument("--source", required=True, help="source CSV file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--delimiter", default=";")
    p.add_argument("--verify", action="store_true", help="run the conservation check after splitting")
    p.set_defaults(func=_cmd_materialize)

    p = sub.add_parser("run", help="execute the workload under a layout")
    p.add_argument("--layout", required=True)
    p.add_argument("--fragments", required=True, help="materialize output directory")
    p.add_argument("--inputs", required=True, help="plan-inputs JSON from ingest")
    p.add_argument("--mode", choices=["seq", "multicore", "multinode"], default="seq")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--report", required=True, help="report JSON file")
    p.add_argument("--task-csv", default=None, help="also write a per-task CSV summary")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="side-by-side table of run reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.set_defaults(func=_cmd_compare)

    return parser


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(path: str, data: dict) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


# --- commands ----------------------------------------------------------------------


def _cmd_gen_data(args) -> int:
    manifest = datagen.gen_table(
        args.columns,
        args.rows,
        out_dir=args.out,
        seed=args.seed,
        table=args.table,
        text_columns=args.text_columns,
    )
    schema = catalog.extract_schema(open(manifest.ddl_path, encoding="utf-8").read())
    nonkey = args.columns - 1
    pools = datagen.PoolSpec(
        simple_only=max(1, round(nonkey * 0.21)),
        shared=max(1, round(nonkey * 0.10)),
        complex_only=max(1, round(nonkey * 0.23)),
    )
    workload_path = os.path.join(args.out, "workload.tsv")
    datagen.gen_workload(
        schema,
        datagen.DEFAULT_PATTERN,
        out_path=workload_path,
        copy_source=manifest.csv_path,
        seed=args.seed,
        table=args.table,
        pools=pools,
    )
    manifest = datagen.DatasetManifest.from_dict(
        {**manifest.to_dict(), "workload_path": workload_path}
    )
    manifest.save(os.path.join(args.out, "dataset.json"))
    print(f"dataset: {manifest.csv_path} ({args.rows} rows, {args.columns} columns)")
    print(f"schema: {manifest.ddl_path}")
    print(f"workload: {workload_path} ({len(datagen.DEFAULT_PATTERN)} queries)")
    print(f"manifest: {os.path.join(args.out, 'dataset.json')}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    with open(args.schema, encoding="utf-8") as fh:
        schema = catalog.extract_schema(fh.read())
    with open(args.workload, encoding="utf-8") as fh:
        workload, queries = catalog.extract_workload(fh.read(), schema)
    _write_json(args.out, catalog.ingest_to_dict(schema, workload))
    n_attrs = len(queries.attribute_union())
    print(
        f"ingested {len(workload.tasks)} tasks ({len(workload.query_tasks())} queries) "
        f"over {len(schema.table_names())} table(s); {n_attrs} workload attributes"
    )
    print(f"plan inputs: {args.out}")
    return EXIT_OK


def _cmd_partition(args) -> int:
    schema, workload, queries = catalog.ingest_from_dict(_read_json(args.inputs))
    plan = partition.build_plan(workload, queries, schema, max_rounds=args.max_rounds)
    _write_json(args.out, plan.to_dict())
    print(partition.summarize(plan))
    print(f"plan: {args.out}")
    return EXIT_OK


def _cmd_plan(args) -> int:
    plan = partition.PartitionPlan.from_dict(_read_json(args.plan))
    manifest = datagen.DatasetManifest.load(args.dataset)
    schema = catalog.extract_schema(open(manifest.ddl_path, encoding="utf-8").read())
    if args.case == "WA":
        layout = placement.wa_layout_from_attrs(
            plan.query_attrs, plan.query_tables, schema, args.nodes
        )
    else:
        layout = placement.plan_layout(plan, args.case, schema, args.nodes)
    report = placement.replication_report(layout, manifest.widths(), manifest.rows)
    data = layout.to_dict()
    data["replication"] = report.to_dict()
    _write_json(args.out, data)

    print(f"case {layout.case_id}, {layout.nodes} node(s), {len(layout.fragments)} fragment(s):")
    for f in layout.fragments:
        print(
            f"  {f.name}: {f.fmt}, node {f.node}, {len(f.columns)} columns "
            f"({report.fragment_bytes[f.name]:,} bytes)"
        )
    crossing = sum(1 for r in layout.routing.values() if r.cross_format)
    print(f"routing: {len(layout.routing)} queries, {crossing} need cross-format joins")
    print(
        f"replication: {report.replicated_bytes:,} of {report.total_dataset_bytes:,} bytes "
        f"({report.replication_pct:.2%})"
    )
    print(f"layout: {args.out}")
    return EXIT_OK


def _cmd_materialize(args) -> int:
    layout_data = _read_json(args.layout)
    layout = placement.PartitionLayout.from_dict(layout_data)
    tables =      sorted({f.table for f in layout.fragments})
    if len(tables) != 1:
        raise InvalidCase(
            f"materialize handles one table per source CSV; layout has {tables}"
        )
    header = tuple(
        read_header(CsvSpec(path=args.source, table=tables[0], columns=(), delimiter=args.delimiter))
    )
    source = CsvSpec(path=args.source, table=tables[0], columns=header, delimiter=args.delimiter)
    frag_specs = materialize.split(source, layout, args.out)
    _write_json(
        os.path.join(args.out, "fragments.json"),
        {"version": 1, "source": source.to_dict(), "fragments": {n: s.to_dict() for n, s in frag_specs.items()}},
    )
    for name, spec in frag_specs.items():
        print(f"  {name}: {spec.path} ({len(spec.columns)} columns)")
    if args.verify:
        key_cols = layout.fragments[0].key_columns
        report = materialize.verify_split(source, frag_specs, key_cols)
        status = "ok" if report.ok else f"{len(report.mismatches)} mismatches"
        print(f"verify: {report.rows_checked} fragment rows checked, {status}")
        if not report.ok:
            for line in report.mismatches[:10]:
                print(f"  {line}")
            return EXIT_RUNTIME
    print(f"fragment manifest: {os.path.join(args.out, 'fragments.json')}")
    return EXIT_OK


def _cmd_run(args) -> int:
    layout_data = _read_json(args.layout)
    layout = placement.PartitionLayout.from_dict(layout_data)
    schema, workload, queries = catalog.ingest_from_dict(_read_json(args.inputs))
    frag_data = _read_json(os.path.join(args.fragments, "fragments.json"))
    frag_specs = {n: CsvSpec.from_dict(d) for n, d in frag_data["fragments"].items()}

    config = scheduler.SchedulerConfig(workers=args.workers)
    if args.mode == "seq":
        report = scheduler.run_sequential(workload, layout, frag_specs, schema, queries, config)
    elif args.mode == "multicore":
        report = scheduler.run_multicore(workload, layout, frag_specs, schema, queries, config)
    else:
        report = scheduler.run_multinode(
            workload, layout, frag_specs, schema, queries, nodes=layout.nodes, config=config
        )
    report.replication = layout_data.get("replication")
    scheduler.emit_report(report, args.report, "json")
    if args.task_csv:
        scheduler.emit_report(report, args.task_csv, "csv")

    print(
        f"mode {report.mode}, case {report.case_id}: total {report.makespan_us / 1e6:.3f}s "
        f"(load {report.load_total_us / 1e6:.3f}s, queries {report.query_total_us() / 1e6:.3f}s)"
    )
    for node, span in sorted(report.per_node_makespan_us.items()):
        print(f"  node {node}: {span / 1e6:.3f}s")
    print(f"report: {args.report}")
    if report.error:
        print(f"error: aborted - {report.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_compare(args) -> int:
    rows = []
    for path in args.reports:
        rep = scheduler.load_report(path)
        repl = rep.replication or {}
        rows.append(
            {
                "label": f"{rep.case_id}/{rep.mode}",
                "wet_s": rep.makespan_us / 1e6,
                "dlt_s": rep.load_total_us / 1e6,
                "qet_s": rep.query_total_us() / 1e6,
                "repl": repl.get("replication_pct"),
                "nodes": rep.nodes,
            }
        )
    header = f"{'config':<18} {'WET(s)':>10} {'DLT(s)':>10} {'QET(s)':>10} {'repl%':>8} {'nodes':>6}"
    print(header)
    print("-" * len(header))
    for r in rows:
        repl = f"{r['repl'] * 100:.2f}" if r["repl"] is not None else "-"
        print(
            f"{r['label']:<18} {r['wet_s']:>10.3f} {r['dlt_s']:>10.3f} "
            f"{r['qet_s']:>10.3f} {repl:>8} {r['nodes']:>6}"
        )
    for name, pct in REFERENCE_REPLICATION.items():
        print(f"{name + ' (reference)':<18} {'-':>10} {'-':>10} {'-':>10} {pct * 100:>8.2f} {'-':>6}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

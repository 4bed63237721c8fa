"""``ekg`` command-line driver.

Verbs share one snapshot file per graph, so they compose across invocations::

    ekg import --config cfg.json --csv events.csv --out graph.snap
    ekg validate graph.snap --families V1,V3
    ekg query graph.snap --file q.txt --format csv
    ekg qf graph.snap duration --type Offer --from "Create Offer" --to "Offer Returned"
    ekg aggregate graph.snap --class Activity --entities Offer,Application --min-count 1
    ekg export graph.snap --dot out.dot --scope entityType=Offer
    ekg stats graph.snap

Results go to stdout, progress and errors to stderr. Exit codes: 0 ok,
1 usage, 2 bad input, 3 violations found (``validate``), 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from ekg import aggregate, query, snapshot, tabular
from ekg.config import ClassifierRule
from ekg.errors import EKGError, StageError
from ekg.export import ExportSelection, export_dot, export_graphml
from ekg.pattern import evaluate, explain, parse
from ekg.pipeline import run_pipeline
from ekg.validate import FAMILIES, validate

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_VIOLATIONS, EXIT_INTERNAL = 0, 1, 2, 3, 4

log = logging.getLogger("ekg")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _csv_list(text: str) -> list[str]:
    return [part for part in text.split(",") if part]


def _families(text: str) -> list[str]:
    families = _csv_list(text)
    bad = [f for f in families if f not in FAMILIES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown families {', '.join(bad)}; choose from {', '.join(FAMILIES)}")
    return families


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


# -- verbs -----------------------------------------------------------------


def cmd_import(args) -> int:
    try:
        graph, summary = run_pipeline(args.config, args.csv)
    except StageError as exc:
        partial = getattr(exc, "graph", None)
        if args.keep_partial and partial is not None:
            partial.meta["failedStage"] = exc.stage
            snapshot.save(partial, args.out)
            log.error("partial graph written to %s", args.out)
        raise
    snapshot.save(graph, args.out)
    log.info("snapshot written to %s", args.out)
    sys.stdout.write(summary.to_text(timings=not args.no_timings))
    return EXIT_OK


def cmd_validate(args) -> int:
    graph = snapshot.load(args.snapshot)
    report = validate(graph, args.families or FAMILIES, cross_log_df=args.cross_log_df)
    if args.format == "json":
        sys.stdout.write(report.to_json_lines())
    else:
        sys.stdout.write(report.to_text())
    return EXIT_OK if report.ok else EXIT_VIOLATIONS


def cmd_query(args) -> int:
    if args.file is None and args.text is None:
        raise _UsageError("query needs --file or --text")
    text = Path(args.file).read_text(encoding="utf-8") if args.file else args.text
    ast = parse(text)
    graph = snapshot.load(args.snapshot)
    if args.explain:
        sys.stdout.write(explain(ast, graph))
        return EXIT_OK
    result = evaluate(graph, ast, max_hops=args.max_hops)
    sys.stdout.write(result.to_csv() if args.format == "csv" else result.to_text())
    return EXIT_OK


def _where(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise _UsageError(f"--where expects key=value, got {pair!r}")
        out[key] = value
    return out


def cmd_qf(args) -> int:
    graph = snapshot.load(args.snapshot)
    fmt = args.format
    if args.primitive == "events":
        refs = sorted(query.events_of_entity(graph, args.entity, _where(args.where) or None))
        rows = [(f"n{r}", graph.node(r).get("Activity"), graph.node(r).get("timestamp")) for r in refs]
        out = tabular.write(("event", "Activity", "timestamp"), rows, fmt)
    elif args.primitive == "df":
        pairs = query.directly_follows_pairs(graph, args.type, args.from_activity, args.to_activity)
        out = tabular.write(("source", "target"), [(f"n{a}", f"n{b}") for a, b in pairs], fmt)
    elif args.primitive == "ef":
        paths = query.eventually_follows(graph, args.type, args.from_activity, args.to_activity)
        out = tabular.write(query.PATH_COLUMNS, query.path_rows(graph, paths), fmt)
    elif args.primitive == "variant":
        acts = query.variant_of(graph, args.entity, args.type)
        out = tabular.write(("position", "Activity"), list(enumerate(acts, 1)), fmt)
    elif args.primitive == "duration":
        results = query.duration_between(graph, args.type, args.from_activity, args.to_activity, args.mode)
        out = tabular.write(query.DURATION_COLUMNS, query.duration_rows(results), fmt)
    else:
        if args.parent_from:
            found = query.parent_paths_for_pattern(
                graph, args.child, args.from_activity, args.to_activity, args.parent, args.min_count, args.parent_from
            )
            paths = [p for uid in found for p in found[uid]]
            out = tabular.write(query.PATH_COLUMNS, query.path_rows(graph, paths), fmt)
        else:
            uids = query.entities_with_df_pattern(
                graph, args.child, args.from_activity, args.to_activity, args.parent, args.min_count
            )
            out = tabular.write(("entity",), [(u,) for u in sorted(uids)], fmt)
    sys.stdout.write(out)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    graph = snapshot.load(args.snapshot)
    keys = tuple(_csv_list(args.keys)) if args.keys else (args.class_type,)
    rule = ClassifierRule(args.class_type, keys)
    created = aggregate.derive_classes(graph, rule)
    linked = aggregate.link_event_classes(graph, rule)
    log.info("%d new %s classes, %d new E_C edges", created, args.class_type, linked)
    result = aggregate.entity_centric_dfg(graph, args.class_type, args.entities)
    result = aggregate.filter_by_count(result, args.min_count)
    if not args.no_save:
        snapshot.save(graph, args.snapshot)
    if args.format == "csv":
        sys.stdout.write(result.to_csv())
    else:
        rows = [(e.source_id, e.target_id, e.entity_type, e.count) for e in result.edges]
        sys.stdout.write(tabular.to_text(("sourceClassID", "targetClassID", "entityType", "count"), rows))
    return EXIT_OK


def cmd_export(args) -> int:
    if not args.dot and not args.graphml:
        raise _UsageError("export needs --dot and/or --graphml")
    graph = snapshot.load(args.snapshot)
    extra = {}
    if args.rel_types:
        extra["include_rel_types"] = frozenset(_csv_list(args.rel_types))
    if args.node_kinds:
        extra["include_node_kinds"] = frozenset(_csv_list(args.node_kinds))
    selection = ExportSelection.parse(args.scope, **extra)
    if args.dot:
        export_dot(graph, selection, args.dot)
        log.info("DOT written to %s", args.dot)
    if args.graphml:
        export_graphml(graph, selection, args.graphml)
        log.info("GraphML written to %s", args.graphml)
    return EXIT_OK


def cmd_stats(args) -> int:
    graph = snapshot.load(args.snapshot)
    census = graph.census()
    if args.format == "json":
        sys.stdout.write(json.dumps(census, sort_keys=True) + "\n")
        return EXIT_OK
    rows = [("nodes", census["nodes"]), ("relationships", census["relationships"])]
    rows += [(f"label {k}", v) for k, v in census["labels"].items()]
    rows += [(f"type {k}", v) for k, v in census["relTypes"].items()]
    sys.stdout.write(tabular.to_text(("item", "count"), rows))
    return EXIT_OK


class _UsageError(Exception):
    pass


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ekg", description="Build, check, query and export event knowledge graphs.")
    p.add_argument("-v", "--verbose", action="store_true", help="progress details on stderr")
    verbs = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    v = verbs.add_parser("import", help="convert an event table into a graph snapshot")
    v.add_argument("--config", required=True)
    v.add_argument("--csv", required=True)
    v.add_argument("--out", required=True)
    v.add_argument("--keep-partial", action="store_true", help="save the partial graph if a stage fails")
    v.add_argument("--no-timings", action="store_true", help="omit wall time from the summary")
    v.set_defaults(run=cmd_import)

    v = verbs.add_parser("validate", help="check the graph's semantic constraints")
    v.add_argument("snapshot")
    v.add_argument("--families", type=_families, help="comma-separated, e.g. V1,V3")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.add_argument("--cross-log-df", action="store_true", help="treat DF across logs as a warning")
    v.set_defaults(run=cmd_validate)

    v = verbs.add_parser("query", help="evaluate a pattern query")
    v.add_argument("snapshot")
    src = v.add_mutually_exclusive_group()
    src.add_argument("--file")
    src.add_argument("--text")
    v.add_argument("--format", choices=tabular.FORMATS, default="text")
    v.add_argument("--explain", action="store_true", help="print the plan instead of running")
    v.add_argument("--max-hops", type=_positive, default=1000)
    v.set_defaults(run=cmd_query)

    v = verbs.add_parser("qf", help="run a named query primitive")
    v.add_argument("snapshot")
    v.add_argument("--format", choices=tabular.FORMATS, default="text")
    prims = v.add_subparsers(dest="primitive", required=True, parser_class=_Parser)
    q = prims.add_parser("events", help="events of one entity")
    q.add_argument("--entity", required=True)
    q.add_argument("--where", action="append", default=[], metavar="KEY=VALUE")
    q = prims.add_parser("df", help="directly-follows pairs of one entity type")
    q.add_argument("--type", required=True)
    q.add_argument("--from", dest="from_activity")
    q.add_argument("--to", dest="to_activity")
    q = prims.add_parser("ef", help="eventually-follows paths")
    q.add_argument("--type", required=True)
    q.add_argument("--from", dest="from_activity", required=True)
    q.add_argument("--to", dest="to_activity", required=True)
    q = prims.add_parser("variant", help="activity sequence of one entity")
    q.add_argument("--entity", required=True)
    q.add_argument("--type", required=True)
    q = prims.add_parser("duration", help="elapsed time between two activities")
    q.add_argument("--type", required=True)
    q.add_argument("--from", dest="from_activity", required=True)
    q.add_argument("--to", dest="to_activity", required=True)
    q.add_argument("--mode", choices=("max", "min", "all"), default="max")
    q = prims.add_parser("pattern", help="parents whose children show a DF step")
    q.add_argument("--child", required=True)
    q.add_argument("--from", dest="from_activity", required=True)
    q.add_argument("--to", dest="to_activity", required=True)
    q.add_argument("--parent", required=True)
    q.add_argument("--min-count", type=_positive, default=1)
    q.add_argument("--parent-from", help="also list parent paths starting at this activity")
    v.set_defaults(run=cmd_qf)

    v = verbs.add_parser("aggregate", help="class-level DF graph (DF_C), stored back into the snapshot")
    v.add_argument("snapshot")
    v.add_argument("--class", dest="class_type", required=True)
    v.add_argument("--keys", help="key columns of the classifier (default: the class name)")
    v.add_argument("--entities", type=_csv_list, required=True)
    v.add_argument("--min-count", type=_positive, default=1)
    v.add_argument("--format", choices=tabular.FORMATS, default="text")
    v.add_argument("--no-save", action="store_true", help="do not write DF_C edges back")
    v.set_defaults(run=cmd_aggregate)

    v = verbs.add_parser("export", help="write DOT and/or GraphML")
    v.add_argument("snapshot")
    v.add_argument("--dot")
    v.add_argument("--graphml")
    v.add_argument("--scope", default="full", help="full | entity=UID | entityType=A,B | aggregated=Class:A,B:MIN")
    v.add_argument("--rel-types", help="comma-separated relationship types to keep")
    v.add_argument("--node-kinds", help="comma-separated node labels to keep")
    v.set_defaults(run=cmd_export)

    v = verbs.add_parser("stats", help="node and relationship counts")
    v.add_argument("snapshot")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.set_defaults(run=cmd_stats)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="ekg: %(message)s",
        stream=sys.stderr,
    )
    started = time.perf_counter()
    try:
        code = args.run(args)
    except _UsageError as exc:
        print(f"ekg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"ekg: {exc}", file=sys.stderr)
        return EXIT_INPUT if isinstance(exc.cause, (EKGError, OSError)) else EXIT_INTERNAL
    except (EKGError, OSError) as exc:
        print(f"ekg: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort report
        print(f"ekg: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    log.info("done in %.3fs", time.perf_counter() - started)
    return code


if __name__ == "__main__":
    sys.exit(main())

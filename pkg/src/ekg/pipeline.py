"""End-to-end conversion of an event table into a validated event graph."""

from __future__ import annotations

import logging
import time
from collections import Counter
from collections.abc import Callable
from dataclasses import dataclass, field
from os import PathLike
from typing import Any

from ekg import aggregate, ingest
from ekg.config import DerivationConfig, load_config
from ekg.errors import EKGError, StageError
from ekg.ingest import EventTable
from ekg.store import LabeledPropertyGraph
from ekg.validate import FAMILIES, ViolationReport, validate
from ekg.vocab import DF, ENTITY_TYPE

log = logging.getLogger(__name__)


@dataclass
class PipelineSummary:
    census: dict[str, Any]
    df_counts: dict[str, int]
    report: ViolationReport
    stages: list[tuple[str, float]] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def violations(self) -> int:
        return len(self.report.violations)

    def to_text(self, timings: bool = True) -> str:
        rows = [("Events", self.census["labels"].get("Event", 0))]
        rows += [("Entities", self.census["labels"].get("Entity", 0))]
        rows += [("Logs", self.census["labels"].get("Log", 0))]
        rows += [("Classes", self.census["labels"].get("Class", 0))]
        rows += [("Nodes", self.census["nodes"]), ("Relationships", self.census["relationships"])]
        rows += [(f"  {t}", n) for t, n in self.census["relTypes"].items()]
        rows += [(f"  DF {t}", n) for t, n in self.df_counts.items()]
        rows += [("Violations", self.violations)]
        rows += [(f"  {fam}", n) for fam, n in self.report.counts().items() if n]
        if timings:
            rows += [("Time (s)", f"{self.wall_time:.3f}")]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows) + "\n"


def df_counts(graph: LabeledPropertyGraph) -> dict[str, int]:
    counts = Counter(rel.get(ENTITY_TYPE) for rel in graph.relationships(DF))
    return dict(sorted(counts.items(), key=lambda kv: str(kv[0])))


def _steps(config: DerivationConfig) -> list[tuple[str, Callable[[LabeledPropertyGraph], Any]]]:
    steps: list[tuple[str, Callable[[LabeledPropertyGraph], Any]]] = [
        ("create_logs", lambda g: ingest.create_logs(g, config.import_config.default_log_id)),
    ]
    for rule in config.entities:
        steps.append((f"derive_entities[{rule.entity_type}]", lambda g, r=rule: ingest.derive_entities(g, r)))
        steps.append((f"correlate_events[{rule.entity_type}]", lambda g, r=rule: ingest.correlate_events(g, r)))
    seen: list[str] = []
    for rule in config.entities:
        if rule.entity_type not in seen:
            seen.append(rule.entity_type)
            steps.append((f"derive_df[{rule.entity_type}]", lambda g, t=rule.entity_type: ingest.derive_df(g, t)))
    for rule in config.reifications:
        ctype = rule.composite_type
        steps.append((f"reify_relation[{ctype}]", lambda g, r=rule: ingest.reify_relation(g, r)))
        for member in (rule.type1, rule.type2):
            steps.append(
                (
                    f"correlate_composite[{ctype}/{member}]",
                    lambda g, c=ctype, m=member: ingest.correlate_composite(g, c, m),
                )
            )
        steps.append((f"derive_df[{ctype}]", lambda g, t=ctype: ingest.derive_df(g, t)))
    for rule in config.classifiers:
        steps.append((f"derive_classes[{rule.class_type}]", lambda g, r=rule: aggregate.derive_classes(g, r)))
        steps.append((f"link_event_classes[{rule.class_type}]", lambda g, r=rule: aggregate.link_event_classes(g, r)))
    return steps


def build_graph(
    table: EventTable,
    config: DerivationConfig,
    graph: LabeledPropertyGraph | None = None,
    timings: list[tuple[str, float]] | None = None,
) -> LabeledPropertyGraph:
    """Run every derivation step on ``table``; a failing step raises :class:`StageError`.

    The partially built graph stays reachable as ``StageError.graph``.
    """
    graph = graph if graph is not None else LabeledPropertyGraph()
    steps = [("import_events", lambda g: ingest.import_events(g, table))] + _steps(config)
    for name, step in steps:
        started = time.perf_counter()
        try:
            result = step(graph)
        except EKGError as exc:
            err = StageError(name, exc)
            err.graph = graph
            raise err from exc
        elapsed = time.perf_counter() - started
        log.info("%s: %s (%.3fs)", name, result, elapsed)
        if timings is not None:
            timings.append((name, elapsed))
    return graph


def run_pipeline(
    config_path: str | PathLike,
    csv_path: str | PathLike,
    *,
    families=FAMILIES,
    graph: LabeledPropertyGraph | None = None,
) -> tuple[LabeledPropertyGraph, PipelineSummary]:
    """Load, convert and validate; returns the graph and a summary of it."""
    started = time.perf_counter()
    timings: list[tuple[str, float]] = []
    try:
        config = load_config(config_path)
    except EKGError as exc:
        raise StageError("config", exc) from exc
    try:
        table = ingest.load_event_table(csv_path, config.import_config)
    except EKGError as exc:
        raise StageError("load", exc) from exc
    except OSError as exc:
        raise StageError("load", exc) from exc
    timings.append(("load", time.perf_counter() - started))
    graph = build_graph(table, config, graph, timings)
    t0 = time.perf_counter()
    report = validate(graph, families)
    timings.append(("validate", time.perf_counter() - t0))
    summary = PipelineSummary(graph.census(), df_counts(graph), report, timings, time.perf_counter() - started)
    return graph, summary

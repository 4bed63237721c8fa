"""Lift event-level behaviour to event classes.

Classes group events by the values of one or more properties. DF_C edges
between two classes of the same type count the DF edges of one entity type
running from events of the first class to events of the second; over the
``Resource`` classifier along a case-like entity type this is the
handover-of-work network.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from dataclasses import dataclass, field

from ekg.config import ClassifierRule
from ekg.errors import UnknownClassType, UnknownColumn, UnknownEntityType
from ekg.ingest import entities_of_type, known_columns
from ekg.store import LabeledPropertyGraph, NodeRef
from ekg.values import render
from ekg.vocab import CLASS, COUNT, DF, DF_C, E_C, E_EN, ENTITY_TYPE, ENTITY_UID, EVENT, ID, TYPE, UID

log = logging.getLogger(__name__)


def class_id(values, separator: str = "+") -> str:
    return separator.join(render(v) for v in values)


def _key_values(props: dict, rule: ClassifierRule):
    values = [props.get(col) for col in rule.key_columns]
    return None if any(v is None for v in values) else values


def _check(graph: LabeledPropertyGraph, rule: ClassifierRule) -> None:
    known = known_columns(graph)
    for col in rule.key_columns:
        if known and col not in known:
            raise UnknownColumn(col)


def classes_of_type(graph: LabeledPropertyGraph, class_type: str) -> dict[str, NodeRef]:
    """Class ID -> node for one classifier type."""
    return {
        graph.node(ref).properties[ID]: ref
        for ref in sorted(graph.find_nodes(CLASS, [(TYPE, "=", class_type)]))
    }


def derive_classes(graph: LabeledPropertyGraph, rule: ClassifierRule) -> int:
    """Create one Class node per distinct combination of the rule's key values."""
    _check(graph, rule)
    graph.ensure_index(CLASS, TYPE)
    existing = classes_of_type(graph, rule.class_type)
    created = 0
    for event in graph.nodes(EVENT):
        values = _key_values(event.properties, rule)
        if values is None:
            continue
        cid = class_id(values, rule.separator)
        if cid in existing:
            continue
        props = {TYPE: rule.class_type, ID: cid}
        for col, value in zip(rule.key_columns, values):
            if col not in props:
                props[col] = value
        existing[cid] = graph.add_node({CLASS}, props)
        created += 1
    return created


def link_event_classes(graph: LabeledPropertyGraph, rule: ClassifierRule) -> int:
    """Give every event exactly one E_C edge to its class of ``rule.class_type``.

    Events lacking one of the key properties are skipped with a warning.
    """
    _check(graph, rule)
    classes = classes_of_type(graph, rule.class_type)
    created = skipped = 0
    for event in graph.nodes(EVENT):
        values = _key_values(event.properties, rule)
        if values is None:
            skipped += 1
            continue
        target = classes.get(class_id(values, rule.separator))
        if target is None:
            skipped += 1
            continue
        if any(graph.rel(r).target == target for r in graph.out_rels(event.ref, E_C)):
            continue
        graph.add_relationship(event.ref, target, E_C)
        created += 1
    if skipped:
        log.warning("%d event(s) lack a %s class and were skipped", skipped, rule.class_type)
    return created


@dataclass(frozen=True)
class AggregatedEdge:
    source: NodeRef
    target: NodeRef
    source_id: str
    target_id: str
    entity_type: str
    count: int
    ref: int | None = None


@dataclass
class AggregatedGraph:
    """Class nodes plus DF_C edges of one classifier type."""

    class_type: str
    classes: dict[NodeRef, str] = field(default_factory=dict)  # ref -> class ID
    edges: list[AggregatedEdge] = field(default_factory=list)

    def counts(self) -> dict[tuple[str, str, str], int]:
        return {(e.source_id, e.target_id, e.entity_type): e.count for e in self.edges}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sourceClassID", "targetClassID", "entityType", "count"])
        for e in self.edges:
            writer.writerow([e.source_id, e.target_id, e.entity_type, e.count])
        return buf.getvalue()


def _class_of(graph: LabeledPropertyGraph, event: NodeRef, class_type: str) -> NodeRef | None:
    for r in graph.out_rels(event, E_C):
        target = graph.rel(r).target
        if graph.node(target).get(TYPE) == class_type:
            return target
    return None


def _entities(graph: LabeledPropertyGraph, event: NodeRef, entity_type: str) -> set[NodeRef]:
    out = set()
    for r in graph.out_rels(event, E_EN):
        target = graph.rel(r).target
        if graph.node(target).get(ENTITY_TYPE) == entity_type:
            out.add(target)
    return out


def _df_shares_entity(graph: LabeledPropertyGraph, rel, entity_type: str) -> bool:
    uid = rel.get(ENTITY_UID)
    shared = _entities(graph, rel.source, entity_type) & _entities(graph, rel.target, entity_type)
    if uid is None:
        return bool(shared)
    return any(graph.node(n).get(UID) == uid for n in shared)


def aggregate_df(graph: LabeledPropertyGraph, class_type: str, entity_type: str) -> int:
    """Rebuild the DF_C edges of ``(class_type, entity_type)``; returns how many exist now.

    Each DF edge of the entity type whose endpoints share an entity of that
    type and both carry a class of ``class_type`` adds one to the count of
    the corresponding class pair. Self-loops are kept.
    """
    if not entities_of_type(graph, entity_type):
        raise UnknownEntityType(entity_type)
    if not classes_of_type(graph, class_type):
        raise UnknownClassType(class_type)

    for rel in list(graph.relationships(DF_C)):
        if rel.get(ENTITY_TYPE) == entity_type and graph.node(rel.source).get(TYPE) == class_type:
            graph.remove_relationship(rel.ref)

    counts: Counter[tuple[NodeRef, NodeRef]] = Counter()
    for rel in graph.relationships(DF):
        if rel.get(ENTITY_TYPE) != entity_type:
            continue
        c1 = _class_of(graph, rel.source, class_type)
        c2 = _class_of(graph, rel.target, class_type)
        if c1 is None or c2 is None or not _df_shares_entity(graph, rel, entity_type):
            continue
        counts[(c1, c2)] += 1
    for (c1, c2), n in sorted(counts.items()):
        graph.add_relationship(c1, c2, DF_C, {ENTITY_TYPE: entity_type, COUNT: n})
    return len(counts)


def read_aggregated(graph: LabeledPropertyGraph, class_type: str, entity_types=None) -> AggregatedGraph:
    """Collect existing DF_C edges of one class type (optionally only some entity types)."""
    wanted = None if entity_types is None else set(entity_types)
    agg = AggregatedGraph(class_type)
    for rel in graph.relationships(DF_C):
        src, tgt = graph.node(rel.source), graph.node(rel.target)
        if src.get(TYPE) != class_type:
            continue
        etype = rel.get(ENTITY_TYPE)
        if wanted is not None and etype not in wanted:
            continue
        agg.edges.append(
            AggregatedEdge(src.ref, tgt.ref, src.get(ID), tgt.get(ID), etype, rel.get(COUNT), rel.ref)
        )
        agg.classes[src.ref] = src.get(ID)
        agg.classes[tgt.ref] = tgt.get(ID)
    agg.edges.sort(key=lambda e: (e.entity_type, e.source, e.target))
    agg.classes = dict(sorted(agg.classes.items()))
    return agg


def handover_network(
    graph: LabeledPropertyGraph, case_entity_type: str, resource_class_type: str = "Resource"
) -> AggregatedGraph:
    """Who hands work to whom along the DF chains of ``case_entity_type``."""
    aggregate_df(graph, resource_class_type, case_entity_type)
    return read_aggregated(graph, resource_class_type, [case_entity_type])


def filter_by_count(aggregated: AggregatedGraph, min_count: int) -> AggregatedGraph:
    """Keep edges with ``count >= min_count`` and the classes they touch."""
    if min_count < 1:
        raise ValueError("min_count must be a positive integer")
    edges = [e for e in aggregated.edges if e.count >= min_count]
    keep = {e.source for e in edges} | {e.target for e in edges}
    classes = {ref: cid for ref, cid in aggregated.classes.items() if ref in keep}
    return AggregatedGraph(aggregated.class_type, classes, edges)


def entity_centric_dfg(graph: LabeledPropertyGraph, class_type: str, entity_types) -> AggregatedGraph:
    """Union of per-entity-type class-level DF graphs, edges tagged by entity type."""
    entity_types = list(entity_types)
    if not entity_types:
        return AggregatedGraph(class_type)
    for etype in entity_types:
        aggregate_df(graph, class_type, etype)
    return read_aggregated(graph, class_type, entity_types)


"""DOT and GraphML writers for whole graphs, entity neighbourhoods and aggregates.

Output is deterministic: nodes by ref, relationships by ref, GraphML keys by
name. Writing the same selection of the same graph twice gives identical bytes.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from os import PathLike
from pathlib import Path

from ekg.aggregate import classes_of_type, filter_by_count, read_aggregated
from ekg.errors import UnknownSelection
from ekg.ingest import correlated_events, entities_of_type, find_entity
from ekg.store import LabeledPropertyGraph, NodeRef, RelRef
from ekg.values import Timestamp, variant
from ekg.vocab import (
    ACTIVITY,
    CLASS,
    COUNT,
    DF,
    DF_C,
    E_EN,
    ENDPOINTS,
    ENTITY,
    ENTITY_TYPE,
    ENTITY_UID,
    EVENT,
    ID,
    LOG,
    TIMESTAMP,
    UID,
)

SCOPES = ("full", "entity", "entityType", "aggregated")
SHAPES = {EVENT: "box", ENTITY: "ellipse", CLASS: "hexagon", LOG: "note"}


@dataclass(frozen=True)
class ExportSelection:
    """What to export.

    ``scope`` is one of ``full``, ``entity`` (needs ``entity_uid``),
    ``entityType`` (needs ``entity_types``) or ``aggregated`` (needs
    ``class_type``; reads DF_C edges already in the graph). When only
    ``include_rel_types`` is given, node kinds default to the endpoint labels
    of those relationship types.
    """

    scope: str = "full"
    entity_uid: str | None = None
    entity_types: tuple[str, ...] = ()
    class_type: str | None = None
    min_count: int = 1
    include_node_kinds: frozenset[str] | None = None
    include_rel_types: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if self.scope not in SCOPES:
            raise UnknownSelection(f"unknown scope {self.scope!r}; use one of {', '.join(SCOPES)}")

    @classmethod
    def parse(cls, text: str, **kwargs) -> ExportSelection:
        """``full``, ``entity=Offer2``, ``entityType=Offer,Application`` or
        ``aggregated=Activity:Offer,Application:2`` (class type, entity types, min count).
        """
        name, _, arg = text.partition("=")
        if name == "full" and not arg:
            return cls("full", **kwargs)
        if name == "entity" and arg:
            return cls("entity", entity_uid=arg, **kwargs)
        if name == "entityType" and arg:
            return cls("entityType", entity_types=tuple(t for t in arg.split(",") if t), **kwargs)
        if name == "aggregated" and arg:
            parts = arg.split(":")
            if len(parts) > 3 or not parts[0]:
                raise UnknownSelection(f"bad aggregated scope {text!r}")
            types = tuple(t for t in parts[1].split(",") if t) if len(parts) > 1 else ()
            try:
                min_count = int(parts[2]) if len(parts) > 2 else 1
            except ValueError:
                raise UnknownSelection(f"bad minimum count in {text!r}") from None
            return cls("aggregated", class_type=parts[0], entity_types=types, min_count=min_count, **kwargs)
        raise UnknownSelection(f"cannot parse scope {text!r}")

    def node_kinds(self) -> frozenset[str] | None:
        if self.include_node_kinds is not None:
            return self.include_node_kinds
        if self.include_rel_types is not None:
            return frozenset(label for t in self.include_rel_types if t in ENDPOINTS for label in ENDPOINTS[t])
        return None


@dataclass
class Subgraph:
    nodes: list[NodeRef]
    rels: list[RelRef]


def _kind_ok(graph: LabeledPropertyGraph, ref: NodeRef, kinds) -> bool:
    return kinds is None or bool(graph.node(ref).labels & kinds)


def select(graph: LabeledPropertyGraph, selection: ExportSelection) -> Subgraph:
    """Resolve a selection to sorted node and relationship refs."""
    if selection.scope == "full":
        nodes = {n.ref for n in graph.nodes()}
        rels = {r.ref for r in graph.relationships()}
    elif selection.scope == "entity":
        uid = selection.entity_uid
        entity = find_entity(graph, uid) if uid else None
        if entity is None:
            raise UnknownSelection(f"no entity with uID {uid!r}")
        nodes, rels = _entity_part(graph, [entity])
    elif selection.scope == "entityType":
        if not selection.entity_types:
            raise UnknownSelection("entityType scope needs at least one entity type")
        entities = []
        for t in selection.entity_types:
            found = entities_of_type(graph, t)
            if not found:
                raise UnknownSelection(f"no entities of type {t!r}")
            entities += found
        nodes, rels = _entity_part(graph, entities)
    else:
        if not selection.class_type or not classes_of_type(graph, selection.class_type):
            raise UnknownSelection(f"no event classes of type {selection.class_type!r}")
        agg = read_aggregated(graph, selection.class_type, selection.entity_types or None)
        agg = filter_by_count(agg, selection.min_count)
        nodes = set(agg.classes)
        rels = {e.ref for e in agg.edges}

    kinds = selection.node_kinds()
    nodes = {n for n in nodes if _kind_ok(graph, n, kinds)}
    types = selection.include_rel_types
    kept = set()
    for r in rels:
        rel = graph.rel(r)
        if types is not None and rel.type not in types:
            continue
        if rel.source in nodes and rel.target in nodes:
            kept.add(r)
    return Subgraph(sorted(nodes), sorted(kept))


def _entity_part(graph: LabeledPropertyGraph, entities: list[NodeRef]) -> tuple[set[NodeRef], set[RelRef]]:
    nodes, rels = set(entities), set()
    for entity in entities:
        node = graph.node(entity)
        uid, etype = node.get(UID), node.get(ENTITY_TYPE)
        events = correlated_events(graph, entity)
        nodes.update(events)
        members = set(events)
        for event in events:
            rels.update(r for r in graph.out_rels(event, E_EN) if graph.rel(r).target == entity)
            for r in graph.out_rels(event, DF):
                rel = graph.rel(r)
                if rel.get(ENTITY_TYPE) != etype or rel.target not in members:
                    continue
                if rel.get(ENTITY_UID) in (uid, None):
                    rels.add(r)
    return nodes, rels


# -- DOT -------------------------------------------------------------------


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _semantic_label(graph: LabeledPropertyGraph, ref: NodeRef) -> str | None:
    labels = graph.node(ref).labels
    for label in (EVENT, ENTITY, CLASS, LOG):
        if label in labels:
            return label
    return None


def _node_caption(graph: LabeledPropertyGraph, ref: NodeRef) -> str:
    node = graph.node(ref)
    kind = _semantic_label(graph, ref)
    if kind == EVENT:
        ts = node.get(TIMESTAMP)
        when = ts.isoformat() if isinstance(ts, Timestamp) else ""
        return f"{node.get(ACTIVITY, '')}\n{when}".rstrip()
    if kind == ENTITY:
        return str(node.get(UID, node.get(ID, ref)))
    if kind in (CLASS, LOG):
        return str(node.get(ID, ref))
    return ":".join(sorted(node.labels))


def _edge_caption(graph: LabeledPropertyGraph, ref: RelRef) -> str:
    rel = graph.rel(ref)
    if rel.type == DF:
        return str(rel.get(ENTITY_TYPE, DF))
    if rel.type == DF_C:
        return f"{rel.get(ENTITY_TYPE, DF_C)} ({rel.get(COUNT)})"
    return rel.type


def dot_text(graph: LabeledPropertyGraph, selection: ExportSelection | None = None) -> str:
    sub = select(graph, selection or ExportSelection())
    lines = ["digraph ekg {"]
    if sub.nodes:
        lines.append('  node [fontname="Helvetica"];')
    for ref in sub.nodes:
        shape = SHAPES.get(_semantic_label(graph, ref), "plaintext")
        lines.append(f"  n{ref} [shape={shape}, label={_dot_quote(_node_caption(graph, ref))}];")
    for ref in sub.rels:
        rel = graph.rel(ref)
        lines.append(f"  n{rel.source} -> n{rel.target} [label={_dot_quote(_edge_caption(graph, ref))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(
    graph: LabeledPropertyGraph, selection: ExportSelection | None = None, path: str | PathLike | None = None
) -> str:
    """Render the selection as a Graphviz digraph; also written to ``path`` when given."""
    text = dot_text(graph, selection)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# -- GraphML ---------------------------------------------------------------

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"
_GRAPHML_TYPES = {"text": "string", "timestamp": "string", "list": "string", "int": "long", "float": "double", "bool": "boolean"}


def _graphml_value(value) -> str:
    kind = variant(value)
    if kind == "timestamp":
        return value.isoformat()
    if kind == "bool":
        return "true" if value else "false"
    if kind == "list":
        return json.dumps(list(value))
    if kind == "float":
        return repr(value)
    return str(value)


def _keys(items, domain: str) -> dict[str, tuple[str, str]]:
    """property name -> (key id, GraphML attr.type); mixed variants fall back to string."""
    seen: dict[str, set[str]] = {}
    for props in items:
        for k, v in props.items():
            seen.setdefault(k, set()).add(_GRAPHML_TYPES[variant(v)])
    prefix = "n" if domain == "node" else "e"
    return {
        k: (f"{prefix}_{k}", kinds.pop() if len(kinds) == 1 else "string") for k, kinds in sorted(seen.items())
    }


def graphml_bytes(graph: LabeledPropertyGraph, selection: ExportSelection | None = None) -> bytes:
    sub = select(graph, selection or ExportSelection())
    root = ET.Element("graphml", {"xmlns": GRAPHML_NS})
    node_keys = _keys((graph.node(n).properties for n in sub.nodes), "node")
    edge_keys = _keys((graph.rel(r).properties for r in sub.rels), "edge")
    ET.SubElement(root, "key", {"id": "labels", "for": "node", "attr.name": "labels", "attr.type": "string"})
    for name, (kid, kind) in node_keys.items():
        ET.SubElement(root, "key", {"id": kid, "for": "node", "attr.name": name, "attr.type": kind})
    ET.SubElement(root, "key", {"id": "type", "for": "edge", "attr.name": "type", "attr.type": "string"})
    for name, (kid, kind) in edge_keys.items():
        ET.SubElement(root, "key", {"id": kid, "for": "edge", "attr.name": name, "attr.type": kind})
    g = ET.SubElement(root, "graph", {"id": "G", "edgedefault": "directed"})
    for ref in sub.nodes:
        node = graph.node(ref)
        el = ET.SubElement(g, "node", {"id": f"n{ref}"})
        ET.SubElement(el, "data", {"key": "labels"}).text = ":".join(sorted(node.labels))
        for k in sorted(node.properties):
            ET.SubElement(el, "data", {"key": node_keys[k][0]}).text = _graphml_value(node.properties[k])
    for ref in sub.rels:
        rel = graph.rel(ref)
        el = ET.SubElement(g, "edge", {"id": f"r{ref}", "source": f"n{rel.source}", "target": f"n{rel.target}"})
        ET.SubElement(el, "data", {"key": "type"}).text = rel.type
        for k in sorted(rel.properties):
            ET.SubElement(el, "data", {"key": edge_keys[k][0]}).text = _graphml_value(rel.properties[k])
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def export_graphml(
    graph: LabeledPropertyGraph, selection: ExportSelection | None = None, path: str | PathLike | None = None
) -> bytes:
    """GraphML 1.0 with a declared key for every property in the selection."""
    data = graphml_bytes(graph, selection)
    if path is not None:
        Path(path).write_bytes(data)
    return data

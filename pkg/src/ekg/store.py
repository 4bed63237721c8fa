"""In-memory labeled property graph with exact-match property indexes.

Node and relationship references are plain integers handed out by two
monotone counters starting at 1; they are never reused, so the creation
order of nodes doubles as the tie-breaker for events that share a timestamp.
"""

from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

from ekg.errors import (
    DanglingEndpoint,
    EmptyLabels,
    TypeMismatch,
    UniquenessViolation,
    UnknownNode,
    UnknownRelationship,
)
from ekg.values import PropertyValue, compare, index_key, normalize, variant

NodeRef = int
RelRef = int
Direction = Literal["out", "in", "both"]
Predicate = Sequence[tuple[str, str, PropertyValue]]


@dataclass
class Node:
    ref: NodeRef
    labels: frozenset[str]
    properties: dict[str, PropertyValue] = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.properties.get(key, default)


@dataclass
class Relationship:
    ref: RelRef
    source: NodeRef
    target: NodeRef
    type: str
    properties: dict[str, PropertyValue] = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.properties.get(key, default)


@dataclass
class PropertyIndex:
    label: str
    key: str
    unique: bool
    entries: dict[tuple, set[NodeRef]] = field(default_factory=lambda: defaultdict(set))


class LabeledPropertyGraph:
    """Nodes and typed, directed relationships with key-value properties.

    By default the graph carries a unique index on ``Entity.uID``; pass
    ``schema_indexes=False`` for a bare store.
    """

    def __init__(self, *, schema_indexes: bool = True) -> None:
        self._nodes: dict[NodeRef, Node] = {}
        self._rels: dict[RelRef, Relationship] = {}
        self._next_node = 1
        self._next_rel = 1
        self._by_label: dict[str, dict[NodeRef, None]] = defaultdict(dict)
        self._by_type: dict[str, dict[RelRef, None]] = defaultdict(dict)
        self._out: dict[NodeRef, dict[str, list[RelRef]]] = {}
        self._in: dict[NodeRef, dict[str, list[RelRef]]] = {}
        self._indexes: dict[tuple[str, str], PropertyIndex] = {}
        # (label, key) -> how many nodes hold each value variant
        self._variants: dict[tuple[str, str], Counter] = defaultdict(Counter)
        self.meta: dict[str, Any] = {}
        if schema_indexes:
            self.ensure_index("Entity", "uID", unique=True)

    # -- reading ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._nodes)

    def has_node(self, ref: NodeRef) -> bool:
        return ref in self._nodes

    def node(self, ref: NodeRef) -> Node:
        try:
            return self._nodes[ref]
        except KeyError:
            raise UnknownNode(ref) from None

    def rel(self, ref: RelRef) -> Relationship:
        try:
            return self._rels[ref]
        except KeyError:
            raise UnknownRelationship(ref) from None

    def nodes(self, label: str | None = None) -> Iterator[Node]:
        """Nodes in creation order, optionally restricted to one label."""
        if label is None:
            yield from self._nodes.values()
        else:
            for ref in self._by_label.get(label, ()):
                yield self._nodes[ref]

    def relationships(self, rel_type: str | None = None) -> Iterator[Relationship]:
        if rel_type is None:
            yield from self._rels.values()
        else:
            for ref in self._by_type.get(rel_type, ()):
                yield self._rels[ref]

    def count_nodes(self, label: str | None = None) -> int:
        if label is None:
            return len(self._nodes)
        return len(self._by_label.get(label, ()))

    def count_relationships(self, rel_type: str | None = None) -> int:
        if rel_type is None:
            return len(self._rels)
        return len(self._by_type.get(rel_type, ()))

    def labels(self) -> list[str]:
        return sorted(label for label, refs in self._by_label.items() if refs)

    def rel_types(self) -> list[str]:
        return sorted(t for t, refs in self._by_type.items() if refs)

    @property
    def next_node_ref(self) -> NodeRef:
        return self._next_node

    @property
    def next_rel_ref(self) -> RelRef:
        return self._next_rel

    # -- writing ---------------------------------------------------------

    def add_node(self, labels: Iterable[str], properties: Mapping[str, Any] | None = None) -> NodeRef:
        labels = frozenset(labels)
        if not labels:
            raise EmptyLabels()
        props = {k: normalize(v) for k, v in (properties or {}).items()}
        for label in labels:
            for key, value in props.items():
                idx = self._indexes.get((label, key))
                if idx is not None and idx.unique and idx.entries.get(index_key(value)):
                    raise UniquenessViolation(label, key, [value])
        ref = self._next_node
        self._next_node += 1
        self._nodes[ref] = Node(ref, labels, props)
        self._out[ref] = {}
        self._in[ref] = {}
        for label in labels:
            self._by_label[label][ref] = None
            for key, value in props.items():
                self._track(label, key, ref, value)
        return ref

    def set_property(self, ref: NodeRef, key: str, value: Any) -> None:
        node = self.node(ref)
        value = normalize(value)
        for label in node.labels:
            idx = self._indexes.get((label, key))
            if idx is not None and idx.unique:
                holders = idx.entries.get(index_key(value), set()) - {ref}
                if holders:
                    raise UniquenessViolation(label, key, [value])
        if key in node.properties:
            self._untrack_all(node, key)
        node.properties[key] = value
        for label in node.labels:
            self._track(label, key, ref, value)

    def add_relationship(
        self,
        source: NodeRef,
        target: NodeRef,
        rel_type: str,
        properties: Mapping[str, Any] | None = None,
    ) -> RelRef:
        for end in (source, target):
            if end not in self._nodes:
                raise DanglingEndpoint(end)
        if not rel_type:
            raise ValueError("relationship type must be a non-empty string")
        ref = self._next_rel
        self._next_rel += 1
        props = {k: normalize(v) for k, v in (properties or {}).items()}
        self._rels[ref] = Relationship(ref, source, target, rel_type, props)
        self._by_type[rel_type][ref] = None
        self._out[source].setdefault(rel_type, []).append(ref)
        self._in[target].setdefault(rel_type, []).append(ref)
        return ref

    def set_rel_property(self, ref: RelRef, key: str, value: Any) -> None:
        self.rel(ref).properties[key] = normalize(value)

    def remove_relationship(self, ref: RelRef) -> None:
        rel = self.rel(ref)
        del self._rels[ref]
        del self._by_type[rel.type][ref]
        self._out[rel.source][rel.type].remove(ref)
        self._in[rel.target][rel.type].remove(ref)

    # -- indexes ---------------------------------------------------------

    def ensure_index(self, label: str, key: str, unique: bool = False) -> None:
        existing = self._indexes.get((label, key))
        if existing is not None and (existing.unique or not unique):
            return
        idx = PropertyIndex(label, key, unique)
        for ref in self._by_label.get(label, ()):
            value = self._nodes[ref].properties.get(key)
            if value is not None:
                idx.entries[index_key(value)].add(ref)
        if unique:
            dupes = [k[1] for k, refs in idx.entries.items() if len(refs) > 1]
            if dupes:
                raise UniquenessViolation(label, key, dupes)
        self._indexes[(label, key)] = idx

    def index_catalog(self) -> list[tuple[str, str, bool]]:
        return sorted((i.label, i.key, i.unique) for i in self._indexes.values())

    def has_index(self, label: str, key: str) -> bool:
        return (label, key) in self._indexes

    def _track(self, label: str, key: str, ref: NodeRef, value: PropertyValue) -> None:
        self._variants[(label, key)][variant(value)] += 1
        idx = self._indexes.get((label, key))
        if idx is not None:
            idx.entries[index_key(value)].add(ref)

    def _untrack_all(self, node: Node, key: str) -> None:
        old = node.properties[key]
        for label in node.labels:
            self._variants[(label, key)][variant(old)] -= 1
            idx = self._indexes.get((label, key))
            if idx is not None:
                idx.entries[index_key(old)].discard(node.ref)

    # -- lookup ----------------------------------------------------------

    def find_nodes(self, label: str, predicate: Predicate = ()) -> set[NodeRef]:
        """Nodes with ``label`` satisfying every ``(key, comparator, value)`` conjunct.

        Equality conjuncts on an indexed ``(label, key)`` are answered from
        the index; everything else scans. Both paths give the same set, and
        both raise :class:`TypeMismatch` when any node with the label holds a
        value of another variant under a predicate key.
        """
        predicate = [(k, op, normalize(v)) for k, op, v in predicate]
        for key, _, value in predicate:
            held = self._variants.get((label, key))
            if held:
                want = variant(value)
                for other, n in held.items():
                    if n > 0 and other != want:
                        sample = self._sample_value(label, key, other)
                        raise TypeMismatch(sample, value)
        candidates: Iterable[NodeRef] | None = None
        for key, op, value in predicate:
            idx = self._indexes.get((label, key))
            if op == "=" and idx is not None:
                candidates = idx.entries.get(index_key(value), set())
                break
        if candidates is None:
            candidates = self._by_label.get(label, {})
        out = set()
        for ref in candidates:
            props = self._nodes[ref].properties
            ok = True
            for key, op, value in predicate:
                have = props.get(key)
                if have is None or not compare(have, op, value):
                    ok = False
                    break
            if ok:
                out.add(ref)
        return out

    def find_one(self, label: str, key: str, value: PropertyValue) -> NodeRef | None:
        refs = self.find_nodes(label, [(key, "=", value)])
        return min(refs) if refs else None

    def _sample_value(self, label: str, key: str, var: str) -> PropertyValue:
        for ref in self._by_label.get(label, ()):
            value = self._nodes[ref].properties.get(key)
            if value is not None and variant(value) == var:
                return value
        raise AssertionError("variant census out of sync")

    # -- traversal -------------------------------------------------------

    def out_rels(self, ref: NodeRef, rel_type: str) -> list[RelRef]:
        """Outgoing relationship refs of one type, ascending. Hot path: no checks."""
        return self._out[ref].get(rel_type, [])

    def in_rels(self, ref: NodeRef, rel_type: str) -> list[RelRef]:
        return self._in[ref].get(rel_type, [])

    def neighbors(
        self, ref: NodeRef, direction: Direction = "out", rel_type: str | None = None
    ) -> list[tuple[RelRef, NodeRef]]:
        """Incident ``(relationship, other endpoint)`` pairs ordered by relationship ref.

        With ``direction="both"`` a self-loop is listed twice, once per end.
        """
        if ref not in self._nodes:
            raise UnknownNode(ref)
        if direction not in ("out", "in", "both"):
            raise ValueError(f"bad direction {direction!r}")
        streams = []
        if direction in ("out", "both"):
            streams.extend((r, "out") for r in self._select(self._out[ref], rel_type))
        if direction in ("in", "both"):
            streams.extend((r, "in") for r in self._select(self._in[ref], rel_type))
        streams.sort(key=lambda item: item[0])
        out = []
        for rref, side in streams:
            rel = self._rels[rref]
            out.append((rref, rel.target if side == "out" else rel.source))
        return out

    @staticmethod
    def _select(adj: dict[str, list[RelRef]], rel_type: str | None) -> Iterable[RelRef]:
        if rel_type is not None:
            return adj.get(rel_type, [])
        return heapq.merge(*adj.values())

    # -- census ----------------------------------------------------------

    def census(self) -> dict[str, Any]:
        return {
            "nodes": self.count_nodes(),
            "relationships": self.count_relationships(),
            "labels": {label: self.count_nodes(label) for label in self.labels()},
            "relTypes": {t: self.count_relationships(t) for t in self.rel_types()},
        }

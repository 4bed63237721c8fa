"""Check an event graph against the semantic constraints of its vocabulary.

Constraint families:

* V1 typing: at most one semantic node label per node, semantic relationship
  types only on relationships, mandatory properties and key uniqueness.
* V2 event/entity correlation (E_EN).
* V3 directly-follows (DF): same log, time order, a witnessing entity with no
  event in between, irreflexivity, acyclicity.
* V4 log membership (L_E).
* V5 event classes (E_C).
* V6 class-level directly-follows (DF_C).

V5 and V6 only apply once the graph holds Class nodes. The validator never
raises on malformed structure; everything it finds goes into the report.
"""

from __future__ import annotations

import json
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field

from ekg.store import LabeledPropertyGraph, NodeRef, RelRef
from ekg.values import Timestamp
from ekg.vocab import (
    ACTIVITY,
    CLASS,
    COUNT,
    DF,
    DF_C,
    E_C,
    E_EN,
    ENDPOINTS,
    ENTITY,
    ENTITY_TYPE,
    EVENT,
    ID,
    L_E,
    LOG,
    NODE_LABELS,
    REL_TYPES,
    TIMESTAMP,
    TYPE,
    UID,
)

FAMILIES = ("V1", "V2", "V3", "V4", "V5", "V6")


@dataclass(frozen=True, order=True)
class Ref:
    kind: str  # "n" node, "r" relationship
    id: int

    def __str__(self) -> str:
        return f"{self.kind}{self.id}"

    @classmethod
    def parse(cls, text: str) -> Ref:
        return cls(text[0], int(text[1:]))


def _n(*refs: NodeRef) -> tuple[Ref, ...]:
    return tuple(Ref("n", r) for r in refs)


def _r(*refs: RelRef) -> tuple[Ref, ...]:
    return tuple(Ref("r", r) for r in refs)


@dataclass(frozen=True)
class Violation:
    family: str
    constraint: int
    refs: tuple[Ref, ...]
    message: str

    def sort_key(self):
        return (self.family, tuple(sorted(self.refs)), self.constraint, self.message)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "constraint": self.constraint,
            "refs": [str(r) for r in self.refs],
            "message": self.message,
        }

    def to_line(self) -> str:
        refs = " ".join(str(r) for r in self.refs)
        return f"{self.family}.{self.constraint} [{refs}] {self.message}"


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)
    families: tuple[str, ...] = FAMILIES

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def of(self, family: str) -> list[Violation]:
        return [v for v in self.violations if v.family == family]

    def counts(self) -> dict[str, int]:
        out = {f: 0 for f in self.families}
        for v in self.violations:
            out[v.family] = out.get(v.family, 0) + 1
        return out

    def to_text(self) -> str:
        lines = [v.to_line() for v in self.violations]
        lines += ["warning " + w.to_line() for w in self.warnings]
        return "\n".join(lines) + ("\n" if lines else "")

    def to_json_lines(self) -> str:
        lines = [json.dumps(v.to_dict(), sort_keys=True) for v in self.violations]
        lines += [json.dumps({**w.to_dict(), "severity": "warning"}, sort_keys=True) for w in self.warnings]
        return "\n".join(lines) + ("\n" if lines else "")

    def to_json(self) -> str:
        return json.dumps(
            {
                "violations": [v.to_dict() for v in self.violations],
                "warnings": [w.to_dict() for w in self.warnings],
            },
            sort_keys=True,
            indent=2,
        )


class _Checker:
    def __init__(self, graph: LabeledPropertyGraph, cross_log_df: bool) -> None:
        self.g = graph
        self.cross_log_df = cross_log_df
        self.found: list[Violation] = []
        self.warned: list[Violation] = []

    def add(self, family: str, constraint: int, refs: tuple[Ref, ...], message: str) -> None:
        self.found.append(Violation(family, constraint, refs, message))

    def warn(self, family: str, constraint: int, refs: tuple[Ref, ...], message: str) -> None:
        self.warned.append(Violation(family, constraint, refs, message))

    def has(self, ref: NodeRef, label: str) -> bool:
        return self.g.has_node(ref) and label in self.g.node(ref).labels

    def endpoints(self, family: str, constraint: int, rel_type: str) -> list:
        """Report mistyped endpoints; return the well-typed relationships."""
        want_src, want_tgt = ENDPOINTS[rel_type]
        good = []
        for rel in self.g.relationships(rel_type):
            if self.has(rel.source, want_src) and self.has(rel.target, want_tgt):
                good.append(rel)
            else:
                self.add(
                    family,
                    constraint,
                    _r(rel.ref) + _n(rel.source, rel.target),
                    f"{rel_type} must connect {want_src} to {want_tgt}",
                )
        return good

    # -- V1 ------------------------------------------------------------------

    def v1(self) -> None:
        g = self.g
        for node in g.nodes():
            semantic = sorted(node.labels & NODE_LABELS)
            if len(semantic) > 1:
                self.add("V1", 1, _n(node.ref), f"node has several semantic labels {', '.join(semantic)}")
            wrong = sorted(node.labels & REL_TYPES)
            if wrong:
                self.add("V1", 2, _n(node.ref), f"relationship type used as node label: {', '.join(wrong)}")
        for rel in g.relationships():
            if rel.type in NODE_LABELS:
                self.add("V1", 3, _r(rel.ref), f"node label {rel.type} used as relationship type")

        required = {
            EVENT: ((ACTIVITY, str), (TIMESTAMP, Timestamp)),
            ENTITY: ((ENTITY_TYPE, str), (ID, str), (UID, str)),
            LOG: ((ID, str),),
            CLASS: ((TYPE, str), (ID, str)),
        }
        for label, fields in required.items():
            for node in g.nodes(label):
                for key, kind in fields:
                    value = node.get(key)
                    if not isinstance(value, kind) or value == "":
                        self.add("V1", 4, _n(node.ref), f"{label} lacks a valid {key}")

        keys = {
            ENTITY: lambda n: n.get(UID),
            LOG: lambda n: n.get(ID),
            CLASS: lambda n: (n.get(TYPE), n.get(ID)),
        }
        for label, key_of in keys.items():
            seen: dict = defaultdict(list)
            for node in g.nodes(label):
                seen[key_of(node)].append(node.ref)
            for key, refs in seen.items():
                if len(refs) > 1:
                    self.add("V1", 5, _n(*refs), f"{label} key {key!r} is not unique")
        for node in g.nodes(ENTITY):
            uid, etype = node.get(UID), node.get(ENTITY_TYPE)
            if isinstance(uid, str) and isinstance(etype, str) and not uid.startswith(etype):
                self.add("V1", 5, _n(node.ref), f"uID {uid!r} does not start with its EntityType {etype!r}")

    # -- V2 ------------------------------------------------------------------

    def v2(self) -> None:
        g = self.g
        rels = self.endpoints("V2", 1, E_EN)
        pairs: dict[tuple[NodeRef, NodeRef], list[RelRef]] = defaultdict(list)
        for rel in rels:
            pairs[(rel.source, rel.target)].append(rel.ref)
        for (event, entity), refs in pairs.items():
            if len(refs) > 1:
                self.add("V2", 2, _r(*refs) + _n(event, entity), "more than one E_EN between event and entity")
        correlated = {e for e, _ in pairs}
        used = {n for _, n in pairs}
        for node in g.nodes(EVENT):
            if node.ref not in correlated:
                self.add("V2", 3, _n(node.ref), "event is not correlated to any entity")
        for node in g.nodes(ENTITY):
            if node.ref not in used:
                self.add("V2", 4, _n(node.ref), "entity has no correlated event")

    # -- V3 ------------------------------------------------------------------

    def _logs(self, event: NodeRef) -> set[NodeRef]:
        return {self.g.rel(r).source for r in self.g.in_rels(event, L_E) if self.has(self.g.rel(r).source, LOG)}

    def _entities(self, event: NodeRef, entity_type: str) -> set[NodeRef]:
        out = set()
        for r in self.g.out_rels(event, E_EN):
            target = self.g.rel(r).target
            if self.has(target, ENTITY) and self.g.node(target).get(ENTITY_TYPE) == entity_type:
                out.add(target)
        return out

    def _key(self, event: NodeRef):
        ts = self.g.node(event).get(TIMESTAMP)
        return (ts.millis if isinstance(ts, Timestamp) else 0, event)

    def v3(self) -> None:
        g = self.g
        entity_types = {n.get(ENTITY_TYPE) for n in g.nodes(ENTITY)}
        # entity -> ordered correlated events, optionally split by log
        orders: dict[tuple[NodeRef, NodeRef | None], dict[NodeRef, int]] = {}

        def position(entity: NodeRef, log: NodeRef | None, event: NodeRef) -> int:
            cache_key = (entity, log)
            if cache_key not in orders:
                events = [
                    g.rel(r).source
                    for r in g.in_rels(entity, E_EN)
                    if self.has(g.rel(r).source, EVENT) and (log is None or log in self._logs(g.rel(r).source))
                ]
                ordered = sorted(set(events), key=self._key)
                orders[cache_key] = {e: i for i, e in enumerate(ordered)}
            return orders[cache_key].get(event, -2)

        for rel in self.endpoints("V3", 1, DF):
            refs = _r(rel.ref) + _n(rel.source, rel.target)
            etype = rel.get(ENTITY_TYPE)
            if not isinstance(etype, str) or etype not in entity_types:
                self.add("V3", 1, refs, f"DF EntityType {etype!r} names no existing entity type")
                continue
            shared_logs = self._logs(rel.source) & self._logs(rel.target)
            if not shared_logs:
                if self.cross_log_df:
                    self.warn("V3", 2, refs, "DF crosses log boundaries")
                else:
                    self.add("V3", 2, refs, "DF endpoints share no log")
            if rel.source == rel.target:
                self.add("V3", 5, refs, "DF is a self-loop")
                continue
            t1, t2 = g.node(rel.source).get(TIMESTAMP), g.node(rel.target).get(TIMESTAMP)
            if isinstance(t1, Timestamp) and isinstance(t2, Timestamp) and t1 > t2:
                self.add("V3", 3, refs, f"DF goes backwards in time ({t1} after {t2})")
            witnesses = self._entities(rel.source, etype) & self._entities(rel.target, etype)
            if not witnesses:
                self.add("V3", 4, refs, f"no {etype} entity is correlated to both events")
                continue
            scopes: Iterable[NodeRef | None] = [None]
            if shared_logs and not self.cross_log_df:
                scopes = sorted(shared_logs)
            ok = False
            for entity in witnesses:
                for log in scopes:
                    a, b = position(entity, log, rel.source), position(entity, log, rel.target)
                    if a >= 0 and b == a + 1:
                        ok = True
                        break
                # events in reverse order are the time-order check's business
                if not ok and any(
                    position(entity, log, rel.target) < position(entity, log, rel.source) for log in scopes
                ):
                    ok = True
                if ok:
                    break
            if not ok:
                self.add("V3", 4, refs, f"another event of the shared {etype} entity lies between the endpoints")

        for cycle in _df_cycles(g, include_self_loops=False):
            self.add("V3", 6, _r(*cycle), f"DF cycle of length {len(cycle)}")

    # -- V4 ------------------------------------------------------------------

    def v4(self) -> None:
        g = self.g
        rels = self.endpoints("V4", 1, L_E)
        per_event: dict[NodeRef, list[RelRef]] = defaultdict(list)
        per_log: dict[NodeRef, int] = defaultdict(int)
        for rel in rels:
            per_event[rel.target].append(rel.ref)
            per_log[rel.source] += 1
        for node in g.nodes(EVENT):
            refs = per_event.get(node.ref, [])
            if len(refs) != 1:
                self.add("V4", 2, _n(node.ref) + _r(*refs), f"event belongs to {len(refs)} logs, not exactly one")
        for node in g.nodes(LOG):
            if not per_log.get(node.ref):
                self.add("V4", 3, _n(node.ref), "log has no events")

    # -- V5 ------------------------------------------------------------------

    def v5(self) -> None:
        g = self.g
        rels = self.endpoints("V5", 1, E_C)
        classes: dict[NodeRef, list] = defaultdict(list)
        for rel in rels:
            classes[rel.source].append(rel)
        for node in g.nodes(EVENT):
            mine = classes.get(node.ref, [])
            if not mine:
                self.add("V5", 2, _n(node.ref), "event has no event class")
                continue
            by_type: dict = defaultdict(set)
            for rel in mine:
                by_type[g.node(rel.target).get(TYPE)].add(rel.target)
            for ctype, targets in by_type.items():
                if len(targets) > 1:
                    self.add("V5", 3, _n(node.ref, *sorted(targets)), f"event has several classes of type {ctype!r}")

    # -- V6 ------------------------------------------------------------------

    def v6(self) -> None:
        g = self.g
        for rel in self.endpoints("V6", 1, DF_C):
            refs = _r(rel.ref) + _n(rel.source, rel.target)
            c1, c2 = g.node(rel.source), g.node(rel.target)
            if c1.get(TYPE) != c2.get(TYPE):
                self.add("V6", 2, refs, f"DF_C joins classes of types {c1.get(TYPE)!r} and {c2.get(TYPE)!r}")
            count = rel.get(COUNT)
            etype = rel.get(ENTITY_TYPE)
            if not isinstance(count, int) or isinstance(count, bool) or count < 1 or not isinstance(etype, str):
                self.add("V6", 4, refs, "DF_C needs an EntityType and a positive count")
            if not self._dfc_witnessed(rel.source, rel.target, etype):
                self.add("V6", 3, refs, f"no {etype} DF edge between events of these classes")

    def _dfc_witnessed(self, c1: NodeRef, c2: NodeRef, entity_type) -> bool:
        g = self.g
        for r in g.in_rels(c1, E_C):
            e1 = g.rel(r).source
            for d in g.out_rels(e1, DF):
                df = g.rel(d)
                if df.get(ENTITY_TYPE) != entity_type:
                    continue
                if any(g.rel(x).target == c2 for x in g.out_rels(df.target, E_C)):
                    return True
        return False


def validate(
    graph: LabeledPropertyGraph,
    families: Iterable[str] = FAMILIES,
    *,
    cross_log_df: bool = False,
) -> ViolationReport:
    """Check ``graph`` against the requested constraint families.

    With ``cross_log_df=True`` DF edges between events of different logs are
    reported as warnings instead of violations.
    """
    wanted = tuple(f for f in FAMILIES if f in set(families))
    unknown = set(families) - set(FAMILIES)
    if unknown:
        raise ValueError(f"unknown constraint families: {', '.join(sorted(unknown))}")
    checker = _Checker(graph, cross_log_df)
    has_classes = graph.count_nodes(CLASS) > 0
    for family in wanted:
        if family in ("V5", "V6") and not has_classes:
            continue
        getattr(checker, family.lower())()
    return ViolationReport(
        sorted(checker.found, key=Violation.sort_key),
        sorted(checker.warned, key=Violation.sort_key),
        wanted,
    )


# -- cycles -------------------------------------------------------------------


def _df_adjacency(graph: LabeledPropertyGraph, include_self_loops: bool):
    adj: dict[NodeRef, list[tuple[RelRef, NodeRef]]] = defaultdict(list)
    for rel in graph.relationships(DF):
        if rel.source == rel.target and not include_self_loops:
            continue
        adj[rel.source].append((rel.ref, rel.target))
    return adj


def _sccs(adj) -> list[list[NodeRef]]:
    """Tarjan's algorithm, iterative."""
    index: dict[NodeRef, int] = {}
    low: dict[NodeRef, int] = {}
    on_stack: set[NodeRef] = set()
    stack: list[NodeRef] = []
    out: list[list[NodeRef]] = []
    counter = 0
    nodes = sorted(set(adj) | {t for edges in adj.values() for _, t in edges})
    for root in nodes:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            node, i = work.pop()
            if i == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            edges = adj.get(node, [])
            recurse = False
            while i < len(edges):
                _, nxt = edges[i]
                i += 1
                if nxt not in index:
                    work.append((node, i))
                    work.append((nxt, 0))
                    recurse = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if recurse:
                continue
            if low[node] == index[node]:
                comp = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    comp.append(top)
                    if top == node:
                        break
                out.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return out


def _cycle_in(adj, members: set[NodeRef]) -> list[RelRef]:
    start = min(members)
    # BFS back to start inside the component
    parent: dict[NodeRef, tuple[NodeRef, RelRef]] = {}
    frontier = [start]
    seen = {start}
    while frontier:
        nxt_frontier = []
        for node in frontier:
            for rel, tgt in adj.get(node, []):
                if tgt not in members:
                    continue
                if tgt == start:
                    path = [rel]
                    cur = node
                    while cur != start:
                        prev, prel = parent[cur]
                        path.append(prel)
                        cur = prev
                    return path[::-1]
                if tgt not in seen:
                    seen.add(tgt)
                    parent[tgt] = (node, rel)
                    nxt_frontier.append(tgt)
        frontier = nxt_frontier
    raise AssertionError("component without a cycle")


def _df_cycles(graph: LabeledPropertyGraph, include_self_loops: bool) -> list[list[RelRef]]:
    adj = _df_adjacency(graph, include_self_loops)
    cycles = []
    for comp in _sccs(adj):
        members = set(comp)
        if len(comp) == 1 and not any(t == comp[0] for _, t in adj.get(comp[0], [])):
            continue
        cycles.append(_cycle_in(adj, members))
    return cycles


def acyclicity_check(graph: LabeledPropertyGraph, *, include_self_loops: bool = True) -> list[RelRef] | None:
    """One cycle over the union of all DF edges (as relationship refs), or ``None``."""
    cycles = _df_cycles(graph, include_self_loops)
    return cycles[0] if cycles else None

"""Query primitives over a built event graph.

All functions are read-only. Event chains are followed along the DF edges
of one entity (matched by ``EntityUID``), so entities of the same type that
share events never leak into each other's results.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from typing import Any, Union

from ekg.config import parse_filter
from ekg.errors import BrokenChain, UnknownEntity, UnknownEntityType
from ekg.ingest import correlated_events, entities_of_type, event_log, find_entity, order_key, passes
from ekg.store import LabeledPropertyGraph, NodeRef, RelRef
from ekg.values import format_duration
from ekg.vocab import ACTIVITY, DF, E_EN, ENTITY_TYPE, ENTITY_UID, TIMESTAMP, UID

EventPredicate = Union[None, Callable[[Mapping[str, Any]], bool], Mapping[str, Any], Iterable]


@dataclass(frozen=True)
class EventPath:
    """Events joined by DF edges of one entity, in order."""

    events: tuple[NodeRef, ...]
    rels: tuple[RelRef, ...]
    entity_type: str
    entity_uid: str

    def __len__(self) -> int:
        return len(self.rels)

    @property
    def start(self) -> NodeRef:
        return self.events[0]

    @property
    def end(self) -> NodeRef:
        return self.events[-1]

    def activities(self, graph: LabeledPropertyGraph) -> list[str]:
        return [graph.node(e).get(ACTIVITY) for e in self.events]


@dataclass(frozen=True)
class DurationResult:
    start_event: NodeRef
    end_event: NodeRef
    elapsed: int  # milliseconds
    entity: NodeRef
    entity_uid: str

    @property
    def iso(self) -> str:
        return format_duration(self.elapsed)


def _entity(graph: LabeledPropertyGraph, uid: str) -> NodeRef:
    ref = find_entity(graph, uid)
    if ref is None:
        raise UnknownEntity(uid)
    return ref


def _entities(graph: LabeledPropertyGraph, entity_type: str) -> list[NodeRef]:
    refs = entities_of_type(graph, entity_type)
    if not refs:
        raise UnknownEntityType(entity_type)
    return sorted(refs, key=lambda r: graph.node(r).properties[UID])


def _activity(graph: LabeledPropertyGraph, event: NodeRef) -> Any:
    return graph.node(event).get(ACTIVITY)


def _as_predicate(predicate: EventPredicate) -> Callable[[Mapping[str, Any]], bool]:
    if predicate is None:
        return lambda props: True
    if callable(predicate):
        return predicate
    conjuncts = parse_filter(dict(predicate) if isinstance(predicate, Mapping) else list(predicate))
    return lambda props: passes(props, conjuncts)


def events_of_entity(graph: LabeledPropertyGraph, uid: str, predicate: EventPredicate = None) -> set[NodeRef]:
    """Events correlated to entity ``uid`` that satisfy ``predicate``.

    ``predicate`` is a callable on the event's properties, a mapping of
    equalities, or a list of ``(key, comparator, value)`` conjuncts.
    """
    keep = _as_predicate(predicate)
    entity = _entity(graph, uid)
    return {e for e in correlated_events(graph, entity) if keep(graph.node(e).properties)}


def _df_edges(graph: LabeledPropertyGraph, entity_type: str):
    for rel in graph.relationships(DF):
        if rel.get(ENTITY_TYPE) == entity_type:
            yield rel


def directly_follows_pairs(
    graph: LabeledPropertyGraph,
    entity_type: str,
    from_activity: str | None = None,
    to_activity: str | None = None,
) -> list[tuple[NodeRef, NodeRef]]:
    """Distinct ``(source, target)`` pairs of DF edges of the type, optionally filtered by activity."""
    _entities(graph, entity_type)
    pairs = set()
    for rel in _df_edges(graph, entity_type):
        if from_activity is not None and _activity(graph, rel.source) != from_activity:
            continue
        if to_activity is not None and _activity(graph, rel.target) != to_activity:
            continue
        pairs.add((rel.source, rel.target))
    return sorted(pairs)


def _entity_edges(graph: LabeledPropertyGraph, entity: NodeRef, entity_type: str, members: set[NodeRef]):
    uid = graph.node(entity).properties[UID]
    for event in members:
        for r in graph.out_rels(event, DF):
            rel = graph.rel(r)
            if rel.get(ENTITY_TYPE) != entity_type:
                continue
            owner = rel.get(ENTITY_UID)
            if owner == uid or (owner is None and rel.target in members):
                yield rel


def df_chains(
    graph: LabeledPropertyGraph, entity: NodeRef, entity_type: str
) -> list[tuple[list[NodeRef], list[RelRef]]]:
    """The entity's DF chains as ``(events, rels)``; one chain per log.

    Raises :class:`BrokenChain` when the entity's DF edges do not form
    simple paths covering its events.
    """
    uid = graph.node(entity).properties[UID]
    events = correlated_events(graph, entity)
    members = set(events)
    succ: dict[NodeRef, tuple[RelRef, NodeRef]] = {}
    has_pred: set[NodeRef] = set()
    for rel in _entity_edges(graph, entity, entity_type, members):
        if rel.target not in members:
            raise BrokenChain(uid, f"edge r{rel.ref} leaves the entity")
        if rel.source in succ:
            raise BrokenChain(uid, f"event n{rel.source} has two successors")
        if rel.target in has_pred:
            raise BrokenChain(uid, f"event n{rel.target} has two predecessors")
        succ[rel.source] = (rel.ref, rel.target)
        has_pred.add(rel.target)
    chains = []
    seen: set[NodeRef] = set()
    for start in (e for e in events if e not in has_pred):
        chain, rels, cur = [start], [], start
        seen.add(start)
        while cur in succ:
            r, cur = succ[cur]
            if cur in seen:
                raise BrokenChain(uid, f"cycle through n{cur}")
            seen.add(cur)
            chain.append(cur)
            rels.append(r)
        chains.append((chain, rels))
    if len(seen) != len(events):
        raise BrokenChain(uid, "cycle detached from any start event")
    logs = {event_log(graph, e) for e in events}
    if len(chains) > len(logs):
        raise BrokenChain(uid, f"{len(chains)} chains over {len(logs)} log(s); DF derived for {entity_type!r}?")
    return chains


def eventually_follows(
    graph: LabeledPropertyGraph, entity_type: str, from_activity: str, to_activity: str
) -> list[EventPath]:
    """Every DF path of one entity from a ``from_activity`` event to a later ``to_activity`` event."""
    out = []
    for entity in _entities(graph, entity_type):
        uid = graph.node(entity).properties[UID]
        for events, rels in df_chains(graph, entity, entity_type):
            acts = [_activity(graph, e) for e in events]
            for i, a in enumerate(acts):
                if a != from_activity:
                    continue
                for j in range(i + 1, len(events)):
                    if acts[j] == to_activity:
                        out.append(EventPath(tuple(events[i : j + 1]), tuple(rels[i:j]), entity_type, uid))
    return out


def variant_of(graph: LabeledPropertyGraph, uid: str, entity_type: str) -> list[str]:
    """Activities along the entity's DF chain (chains of several logs concatenated in time order)."""
    entity = _entity(graph, uid)
    if graph.node(entity).get(ENTITY_TYPE) != entity_type:
        raise UnknownEntity(uid)
    chains = df_chains(graph, entity, entity_type)
    chains.sort(key=lambda c: order_key(graph, c[0][0]))
    return [_activity(graph, e) for events, _ in chains for e in events]


def _elapsed(graph: LabeledPropertyGraph, start: NodeRef, end: NodeRef) -> int:
    return graph.node(end).properties[TIMESTAMP].millis - graph.node(start).properties[TIMESTAMP].millis


def duration_between(
    graph: LabeledPropertyGraph,
    entity_type: str,
    from_activity: str,
    to_activity: str,
    mode: str = "max",
) -> list[DurationResult]:
    """Elapsed time per entity from its earliest ``from_activity`` event to the next ``to_activity`` event.

    ``mode`` is ``max`` or ``min`` (at most one result; ties go to the
    smaller uID) or ``all`` (one result per qualifying entity, by uID).
    """
    if mode not in ("max", "min", "all"):
        raise ValueError(f"mode must be max, min or all, not {mode!r}")
    results = []
    for entity in _entities(graph, entity_type):
        uid = graph.node(entity).properties[UID]
        chains = df_chains(graph, entity, entity_type)
        starts = [
            (events, i)
            for events, _ in chains
            for i, e in enumerate(events)
            if _activity(graph, e) == from_activity
        ]
        if not starts:
            continue
        events, i = min(starts, key=lambda s: order_key(graph, s[0][s[1]]))
        end = next((e for e in events[i + 1 :] if _activity(graph, e) == to_activity), None)
        if end is not None:
            results.append(DurationResult(events[i], end, _elapsed(graph, events[i], end), entity, uid))
    if mode == "all" or not results:
        return results
    sign = 1 if mode == "max" else -1
    best = min(results, key=lambda r: (-sign * r.elapsed, r.entity_uid))
    return [best]


def _shared_parents(graph: LabeledPropertyGraph, e1: NodeRef, e2: NodeRef, parent_type: str) -> set[NodeRef]:
    def parents(event: NodeRef) -> set[NodeRef]:
        out = set()
        for r in graph.out_rels(event, E_EN):
            target = graph.rel(r).target
            if graph.node(target).get(ENTITY_TYPE) == parent_type:
                out.add(target)
        return out

    return parents(e1) & parents(e2)


def _pattern_witnesses(
    graph: LabeledPropertyGraph, child_type: str, from_activity: str, to_activity: str, parent_type: str
) -> dict[NodeRef, dict[str, set[NodeRef]]]:
    """parent -> child uID -> target events of the child's matching DF edges."""
    _entities(graph, child_type)
    _entities(graph, parent_type)
    found: dict[NodeRef, dict[str, set[NodeRef]]] = defaultdict(lambda: defaultdict(set))
    for rel in _df_edges(graph, child_type):
        if _activity(graph, rel.source) != from_activity or _activity(graph, rel.target) != to_activity:
            continue
        child = rel.get(ENTITY_UID) or f"r{rel.ref}"
        for parent in _shared_parents(graph, rel.source, rel.target, parent_type):
            found[parent][child].add(rel.target)
    return found


def entities_with_df_pattern(
    graph: LabeledPropertyGraph,
    child_type: str,
    from_activity: str,
    to_activity: str,
    parent_type: str,
    min_count: int,
) -> set[str]:
    """uIDs of parents with at least ``min_count`` distinct children showing the DF step.

    A child counts for a parent when both events of its
    ``from_activity -> to_activity`` DF edge are correlated to the parent.
    """
    found = _pattern_witnesses(graph, child_type, from_activity, to_activity, parent_type)
    return {graph.node(p).properties[UID] for p, children in found.items() if len(children) >= min_count}


def paths_in_parent(
    graph: LabeledPropertyGraph, parent_uid: str, from_activity: str, targets: Iterable[NodeRef]
) -> list[EventPath]:
    """One path per reachable target, from the parent's earliest ``from_activity`` event along its DF chain."""
    targets = sorted(set(targets))
    if not targets:
        return []
    parent = _entity(graph, parent_uid)
    entity_type = graph.node(parent).properties[ENTITY_TYPE]
    chains = df_chains(graph, parent, entity_type)
    starts = [(events, rels, i) for events, rels in chains for i, e in enumerate(events) if _activity(graph, e) == from_activity]
    if not starts:
        return []
    events, rels, i = min(starts, key=lambda s: order_key(graph, s[0][s[2]]))
    position = {e: j for j, e in enumerate(events)}
    out = []
    for target in targets:
        j = position.get(target)
        if j is not None and j > i:
            out.append(EventPath(tuple(events[i : j + 1]), tuple(rels[i:j]), entity_type, parent_uid))
    return out


def parent_paths_for_pattern(
    graph: LabeledPropertyGraph,
    child_type: str,
    from_activity: str,
    to_activity: str,
    parent_type: str,
    min_count: int,
    parent_from_activity: str,
) -> dict[str, list[EventPath]]:
    """Compose the two steps above: for every qualifying parent, the paths from its
    ``parent_from_activity`` event to each ``to_activity`` event of a qualifying child.
    """
    found = _pattern_witnesses(graph, child_type, from_activity, to_activity, parent_type)
    out = {}
    for parent, children in found.items():
        if len(children) < min_count:
            continue
        uid = graph.node(parent).properties[UID]
        targets = set().union(*children.values())
        out[uid] = paths_in_parent(graph, uid, parent_from_activity, targets)
    return dict(sorted(out.items()))


# -- rendering --------------------------------------------------------------

PATH_COLUMNS = ("entityType", "entity", "events", "activities", "length")
DURATION_COLUMNS = ("entity", "startEvent", "endEvent", "elapsed")


def path_rows(graph: LabeledPropertyGraph, paths: Iterable[EventPath]) -> list[tuple]:
    return [
        (
            p.entity_type,
            p.entity_uid,
            " ".join(f"n{e}" for e in p.events),
            " > ".join(str(a) for a in p.activities(graph)),
            len(p),
        )
        for p in paths
    ]


def duration_rows(results: Iterable[DurationResult]) -> list[tuple]:
    return [(r.entity_uid, f"n{r.start_event}", f"n{r.end_event}", r.iso) for r in results]

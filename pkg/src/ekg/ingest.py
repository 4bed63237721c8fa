"""Turn an event table into an event graph.

Steps, in order: :func:`load_event_table`, :func:`import_events`,
:func:`create_logs`, then :func:`derive_entities` / :func:`correlate_events`
per entity rule, :func:`derive_df` per entity type, and optionally
:func:`reify_relation` + :func:`correlate_composite` to give interactions
between two entity types their own directly-follows chains. Every derive and
correlate step merges: rerunning it creates nothing new.
"""

from __future__ import annotations

import csv
import logging
import re
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from datetime import datetime
from os import PathLike
from pathlib import Path
from typing import Any

from ekg.config import ISO8601, EntityRule, Filter, ImportConfig, ReificationRule
from ekg.errors import (
    ConfigError,
    MalformedCsv,
    MissingColumn,
    NonEmptyGraph,
    UniquenessViolation,
    UnknownColumn,
    UnknownEntityType,
    UnparseableTimestamp,
)
from ekg.store import LabeledPropertyGraph, NodeRef
from ekg.values import PropertyValue, Timestamp, compare
from ekg.vocab import (
    ACTIVITY,
    DF,
    E_EN,
    ENTITY,
    ENTITY_TYPE,
    ENTITY_UID,
    EVENT,
    ID,
    L_E,
    LOG,
    LOG_ID,
    TIMESTAMP,
    UID,
)

log = logging.getLogger(__name__)

ACTIVITY_COLUMN = "Activity"
TIMESTAMP_COLUMN = "Timestamp"


@dataclass
class EventRecord:
    index: int  # 1-based data row number
    values: dict[str, PropertyValue] = field(default_factory=dict)

    @property
    def activity(self) -> str:
        return self.values[ACTIVITY]

    @property
    def timestamp(self) -> Timestamp:
        return self.values[TIMESTAMP]


@dataclass
class EventTable:
    header: list[str]
    rows: list[EventRecord]

    def __len__(self) -> int:
        return len(self.rows)


# -- timestamps ---------------------------------------------------------------

_JAVA_TOKENS = [
    ("yyyy", "%Y"),
    ("yy", "%y"),
    ("MM", "%m"),
    ("dd", "%d"),
    ("HH", "%H"),
    ("mm", "%M"),
    ("ss", "%S"),
    ("SSS", "%f"),
]
_JAVA_RE = re.compile("|".join(tok for tok, _ in _JAVA_TOKENS))


def _strptime_format(fmt: str) -> str:
    if "%" in fmt:
        return fmt
    lookup = dict(_JAVA_TOKENS)
    return _JAVA_RE.sub(lambda m: lookup[m.group(0)], fmt)


def timestamp_parser(fmt: str = ISO8601) -> Callable[[str], Timestamp]:
    """Parser for one timestamp format.

    ``fmt`` is ``"ISO8601"``, a Java-style pattern such as ``"dd.MM.yy HH:mm"``
    or a ``strptime`` format. Values without an offset are read as UTC.
    """
    if fmt.upper() in (ISO8601, "ISO-8601", "ISO"):

        def parse(text: str) -> Timestamp:
            text = text.strip()
            if text.endswith(("Z", "z")):
                text = text[:-1] + "+00:00"
            return Timestamp.from_datetime(datetime.fromisoformat(text))

        return parse

    pattern = _strptime_format(fmt)

    def parse(text: str) -> Timestamp:
        return Timestamp.from_datetime(datetime.strptime(text.strip(), pattern))

    return parse


def _cell_converter(kind: str, parse_ts: Callable[[str], Timestamp]) -> Callable[[str], PropertyValue]:
    if kind == "int":
        return int
    if kind == "float":
        return float
    if kind == "bool":

        def to_bool(text: str) -> bool:
            low = text.strip().lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {text!r}")

        return to_bool
    if kind == "timestamp":
        return parse_ts
    return str


# -- loading ------------------------------------------------------------------


def load_event_table(path: str | PathLike, config: ImportConfig | None = None) -> EventTable:
    """Read an RFC-4180 CSV file with a header row into an :class:`EventTable`."""
    config = config or ImportConfig()
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return read_event_table(fh, config)


def read_event_table(lines, config: ImportConfig | None = None) -> EventTable:
    config = config or ImportConfig()
    reader = csv.reader(lines, strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumn(ACTIVITY_COLUMN) from None
    except csv.Error as exc:
        raise MalformedCsv(0, str(exc)) from None
    header = [h.strip() for h in header]
    for required in (ACTIVITY_COLUMN, TIMESTAMP_COLUMN):
        if required not in header:
            raise MissingColumn(required)
    if len(set(header)) != len(header):
        raise MalformedCsv(0, "duplicate column names in header")

    parse_ts = timestamp_parser(config.timestamp_format)
    converters = {
        col: _cell_converter(config.column_type_hints.get(col, "text"), parse_ts) for col in header
    }
    rows: list[EventRecord] = []
    index = 0
    while True:
        try:
            cells = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            raise MalformedCsv(index + 1, str(exc)) from None
        if not cells or cells == [""] and len(header) > 1:
            continue
        index += 1
        if len(cells) != len(header):
            raise MalformedCsv(index, f"expected {len(header)} cells, found {len(cells)}")
        record = EventRecord(index)
        for col, cell in zip(header, cells):
            if cell == "":
                continue
            if col == TIMESTAMP_COLUMN:
                try:
                    record.values[TIMESTAMP] = parse_ts(cell)
                except ValueError:
                    raise UnparseableTimestamp(index, cell, config.timestamp_format) from None
                continue
            try:
                record.values[col] = converters[col](cell)
            except ValueError as exc:
                raise MalformedCsv(index, f"column {col!r}: {exc}") from None
        if TIMESTAMP not in record.values:
            raise UnparseableTimestamp(index, "", config.timestamp_format)
        if not isinstance(record.values.get(ACTIVITY), str):
            raise MalformedCsv(index, "empty Activity")
        rows.append(record)
    return EventTable(header, rows)


# -- graph construction ---------------------------------------------------------


def import_events(graph: LabeledPropertyGraph, table: EventTable) -> int:
    """One Event node per row, in row order, one property per non-empty cell."""
    if graph.count_nodes(EVENT):
        raise NonEmptyGraph()
    graph.meta["columns"] = list(table.header)
    for record in table.rows:
        graph.add_node({EVENT}, record.values)
    log.info("imported %d events", len(table.rows))
    return len(table.rows)


def create_logs(graph: LabeledPropertyGraph, default_log_id: str = "log") -> int:
    """Create one Log node per distinct ``LogID`` and link every event to its log.

    Events without a ``LogID`` go to the log named ``default_log_id``.
    Returns the number of Log nodes created.
    """
    graph.ensure_index(LOG, ID, unique=True)
    created = 0
    for event in list(graph.nodes(EVENT)):
        if graph.in_rels(event.ref, L_E):
            continue
        log_id = event.get(LOG_ID)
        log_id = default_log_id if log_id is None else str(log_id)
        log_ref = graph.find_one(LOG, ID, log_id)
        if log_ref is None:
            log_ref = graph.add_node({LOG}, {ID: log_id})
            created += 1
        graph.add_relationship(log_ref, event.ref, L_E)
    return created


def known_columns(graph: LabeledPropertyGraph) -> set[str]:
    columns = set(graph.meta.get("columns", ()))
    # header names map onto property keys, except Timestamp
    if TIMESTAMP_COLUMN in columns:
        columns.add(TIMESTAMP)
    return columns


def _check_columns(graph: LabeledPropertyGraph, *columns: str) -> None:
    known = known_columns(graph)
    for column in columns:
        if column not in known:
            raise UnknownColumn(column)


def passes(props: Mapping[str, Any], conjuncts: Filter) -> bool:
    """Filter semantics: an absent property never matches."""
    for key, op, value in conjuncts:
        have = props.get(key)
        if have is None or not compare(have, op, value):
            return False
    return True


def _entity_id(value: PropertyValue) -> str:
    return value if isinstance(value, str) else str(value)


def entities_of_type(graph: LabeledPropertyGraph, entity_type: str) -> list[NodeRef]:
    return sorted(graph.find_nodes(ENTITY, [(ENTITY_TYPE, "=", entity_type)]))


def find_entity(graph: LabeledPropertyGraph, uid: str) -> NodeRef | None:
    return graph.find_one(ENTITY, UID, uid)


def _matching_events(graph: LabeledPropertyGraph, rule: EntityRule):
    _check_columns(graph, rule.id_column, *(k for k, _, _ in rule.filter))
    for event in graph.nodes(EVENT):
        value = event.get(rule.id_column)
        if value is None or not passes(event.properties, rule.filter):
            continue
        yield event, _entity_id(value)


def derive_entities(graph: LabeledPropertyGraph, rule: EntityRule) -> int:
    """Create one Entity per distinct identifier among the events passing the rule's filter."""
    graph.ensure_index(ENTITY, UID, unique=True)
    graph.ensure_index(ENTITY, ENTITY_TYPE)
    created = 0
    for _, ident in list(_matching_events(graph, rule)):
        uid = rule.entity_type + ident
        existing = find_entity(graph, uid)
        if existing is not None:
            node = graph.node(existing)
            if node.get(ENTITY_TYPE) != rule.entity_type or node.get(ID) != ident:
                raise UniquenessViolation(ENTITY, UID, [uid])
            continue
        graph.add_node({ENTITY}, {ID: ident, UID: uid, ENTITY_TYPE: rule.entity_type})
        created += 1
    return created


def _has_rel(graph: LabeledPropertyGraph, source: NodeRef, target: NodeRef, rel_type: str) -> bool:
    return any(graph.rel(r).target == target for r in graph.out_rels(source, rel_type))


def correlate_events(graph: LabeledPropertyGraph, rule: EntityRule) -> int:
    """Add an E_EN edge from every matching event to the entity its identifier names."""
    created = 0
    for event, ident in list(_matching_events(graph, rule)):
        entity = find_entity(graph, rule.entity_type + ident)
        if entity is None:
            continue
        node = graph.node(entity)
        if node.get(ENTITY_TYPE) != rule.entity_type or node.get(ID) != ident:
            continue
        if not _has_rel(graph, event.ref, entity, E_EN):
            graph.add_relationship(event.ref, entity, E_EN)
            created += 1
    return created


def event_log(graph: LabeledPropertyGraph, event: NodeRef) -> NodeRef | None:
    sources = graph.in_rels(event, L_E)
    return graph.rel(sources[0]).source if sources else None


def order_key(graph: LabeledPropertyGraph, event: NodeRef) -> tuple[int, int]:
    """The global total order on events: timestamp, then creation order."""
    return (graph.node(event).properties[TIMESTAMP].millis, event)


def correlated_events(graph: LabeledPropertyGraph, entity: NodeRef) -> list[NodeRef]:
    """Events correlated to ``entity``, in the global event order."""
    events = {graph.rel(r).source for r in graph.in_rels(entity, E_EN)}
    return sorted(events, key=lambda e: order_key(graph, e))


def entity_chains(
    graph: LabeledPropertyGraph, entity: NodeRef, per_log: bool = True
) -> list[list[NodeRef]]:
    """The entity's events split into the ordered sequences DF edges follow (one per log)."""
    events = correlated_events(graph, entity)
    if not per_log:
        return [events] if events else []
    groups: dict[NodeRef | None, list[NodeRef]] = {}
    for event in events:
        groups.setdefault(event_log(graph, event), []).append(event)
    return [groups[k] for k in sorted(groups, key=lambda k: (k is None, k or 0))]


def derive_df(graph: LabeledPropertyGraph, entity_type: str, *, per_log: bool = True) -> int:
    """Chain each entity's events by (timestamp, creation order) with DF edges.

    Each edge carries ``EntityType`` and ``EntityUID``, so entities of the same
    type that share a pair of consecutive events get parallel edges.
    With ``per_log=False`` chains may cross log boundaries.
    """
    entities = entities_of_type(graph, entity_type)
    if not entities:
        raise UnknownEntityType(entity_type)
    created = 0
    for entity in entities:
        uid = graph.node(entity).properties[UID]
        for chain in entity_chains(graph, entity, per_log):
            for first, second in zip(chain, chain[1:]):
                exists = any(
                    (rel := graph.rel(r)).target == second
                    and rel.get(ENTITY_TYPE) == entity_type
                    and rel.get(ENTITY_UID) == uid
                    for r in graph.out_rels(first, DF)
                )
                if not exists:
                    graph.add_relationship(first, second, DF, {ENTITY_TYPE: entity_type, ENTITY_UID: uid})
                    created += 1
    return created


def reify_relation(graph: LabeledPropertyGraph, rule: ReificationRule) -> int:
    """Create a composite entity for every related pair of type1/type2 entities.

    A type2 entity ``n2`` is related to a type1 entity ``n1`` when some event
    correlated to ``n2`` carries ``n1``'s ID in ``rule.ref_to_column``.
    """
    first = entities_of_type(graph, rule.type1)
    second = entities_of_type(graph, rule.type2)
    if not first:
        raise UnknownEntityType(rule.type1)
    if not second:
        raise UnknownEntityType(rule.type2)
    _check_columns(graph, rule.ref_to_column)
    by_id = {graph.node(n).properties[ID]: n for n in first if graph.in_rels(n, E_EN)}
    pairs: dict[tuple[str, str], None] = {}
    for n2 in second:
        n2_id = graph.node(n2).properties[ID]
        for event in correlated_events(graph, n2):
            value = graph.node(event).get(rule.ref_to_column)
            if value is None:
                continue
            n1 = by_id.get(_entity_id(value))
            if n1 is None or n1 == n2:
                continue
            pairs[(graph.node(n1).properties[ID], n2_id)] = None

    key1, key2 = rule.type1 + ID, rule.type2 + ID
    created = 0
    for n1_id, n2_id in pairs:
        if n1_id in rule.null_sentinels or n2_id in rule.null_sentinels:
            continue
        ident = f"{n1_id}_{n2_id}"
        uid = f"{rule.composite_type}_{ident}"
        existing = find_entity(graph, uid)
        if existing is not None:
            props = graph.node(existing).properties
            if (props.get(key1), props.get(key2), props.get(ENTITY_TYPE)) != (
                n1_id,
                n2_id,
                rule.composite_type,
            ):
                raise UniquenessViolation(ENTITY, UID, [uid])
            continue
        graph.add_node(
            {ENTITY},
            {ID: ident, ENTITY_TYPE: rule.composite_type, key1: n1_id, key2: n2_id, UID: uid},
        )
        created += 1
    return created


def correlate_composite(graph: LabeledPropertyGraph, composite_type: str, member_type: str) -> int:
    """Correlate every event of a member entity to the composites that refer to that member."""
    composites = entities_of_type(graph, composite_type)
    if not composites:
        raise UnknownEntityType(composite_type)
    key = member_type + ID
    created = 0
    for composite in composites:
        member_id = graph.node(composite).get(key)
        if member_id is None:
            raise ConfigError(f"{composite_type} entities do not refer to {member_type} (no {key!r})")
        member = find_entity(graph, member_type + member_id)
        if member is None:
            continue
        for event in correlated_events(graph, member):
            if not _has_rel(graph, event, composite, E_EN):
                graph.add_relationship(event, composite, E_EN)
                created += 1
    return created


def load_table_text(text: str, config: ImportConfig | None = None) -> EventTable:
    """Convenience for tests and small inline tables."""
    return read_event_table(text.splitlines(keepends=True), config)


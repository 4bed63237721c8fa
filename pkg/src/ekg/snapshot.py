"""Whole-graph snapshot files.

Layout: the 8-byte magic ``EKGSNAP\\0``, a big-endian uint16 format version,
then a zlib-compressed canonical JSON document. Identical graphs produce
identical bytes.
"""

from __future__ import annotations

import json
import struct
import zlib
from os import PathLike
from pathlib import Path
from typing import Any

from ekg.errors import SnapshotError
from ekg.store import LabeledPropertyGraph
from ekg.values import Timestamp, variant

MAGIC = b"EKGSNAP\x00"
VERSION = 1


def _encode_value(value: Any) -> list:
    kind = variant(value)
    if kind == "timestamp":
        return ["timestamp", value.millis]
    if kind == "list":
        return ["list", list(value)]
    if kind == "float":
        # repr round-trips exactly; json would reject nan/inf
        return ["float", repr(value)]
    return [kind, value]


def _decode_value(pair: list) -> Any:
    kind, raw = pair
    if kind == "timestamp":
        return Timestamp(raw)
    if kind == "list":
        return tuple(raw)
    if kind == "float":
        return float(raw)
    return raw


def _props(props: dict) -> list:
    return [[k, _encode_value(v)] for k, v in sorted(props.items())]


def dumps(graph: LabeledPropertyGraph) -> bytes:
    doc = {
        "nextNode": graph.next_node_ref,
        "nextRel": graph.next_rel_ref,
        "indexes": [list(entry) for entry in graph.index_catalog()],
        "meta": graph.meta,
        "nodes": [[n.ref, sorted(n.labels), _props(n.properties)] for n in graph.nodes()],
        "rels": [
            [r.ref, r.source, r.target, r.type, _props(r.properties)] for r in graph.relationships()
        ],
    }
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return MAGIC + struct.pack(">H", VERSION) + zlib.compress(text.encode("utf-8"), 6)


def loads(data: bytes) -> LabeledPropertyGraph:
    if not data.startswith(MAGIC):
        raise SnapshotError("not a graph snapshot (bad magic)")
    (version,) = struct.unpack(">H", data[len(MAGIC) : len(MAGIC) + 2])
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    try:
        doc = json.loads(zlib.decompress(data[len(MAGIC) + 2 :]).decode("utf-8"))
    except (zlib.error, ValueError) as exc:
        raise SnapshotError(f"corrupt snapshot: {exc}") from exc

    graph = LabeledPropertyGraph(schema_indexes=False)
    # refs are restored verbatim, so write through the private tables
    for ref, labels, props in doc["nodes"]:
        graph._next_node = ref
        graph.add_node(labels, {k: _decode_value(v) for k, v in props})
    graph._next_node = doc["nextNode"]
    for ref, source, target, rel_type, props in sorted(doc["rels"], key=lambda r: r[0]):
        graph._next_rel = ref
        graph.add_relationship(source, target, rel_type, {k: _decode_value(v) for k, v in props})
    graph._next_rel = doc["nextRel"]
    for label, key, unique in doc["indexes"]:
        graph.ensure_index(label, key, unique)
    graph.meta = doc["meta"]
    return graph


def save(graph: LabeledPropertyGraph, path: str | PathLike) -> None:
    Path(path).write_bytes(dumps(graph))


def load(path: str | PathLike) -> LabeledPropertyGraph:
    return loads(Path(path).read_bytes())

import pytest

from ekg import snapshot
from ekg.errors import SnapshotError
from ekg.store import LabeledPropertyGraph
from ekg.values import Timestamp
from support import build_sample


def _shape(g: LabeledPropertyGraph):
    nodes = [(n.ref, n.labels, n.properties) for n in g.nodes()]
    rels = [(r.ref, r.source, r.target, r.type, r.properties) for r in g.relationships()]
    return nodes, rels, g.index_catalog(), g.next_node_ref, g.next_rel_ref


def test_round_trip_is_exact(tmp_path):
    g = build_sample()
    path = tmp_path / "g.snap"
    snapshot.save(g, path)
    back = snapshot.load(path)
    assert _shape(back) == _shape(g)
    assert back.meta == g.meta
    assert snapshot.dumps(back) == snapshot.dumps(g)


def test_value_variants_survive():
    g = LabeledPropertyGraph()
    props = {"s": "x", "i": 3, "f": 0.1, "b": True, "t": Timestamp(12), "l": ("a", "b"), "inf": float("inf")}
    g.add_node({"N"}, props)
    assert snapshot.loads(snapshot.dumps(g)).node(1).properties == props


def test_gaps_in_refs_are_kept():
    g = LabeledPropertyGraph()
    a, b = g.add_node({"N"}), g.add_node({"N"})
    r = g.add_relationship(a, b, "T")
    g.remove_relationship(r)
    back = snapshot.loads(snapshot.dumps(g))
    assert back.add_relationship(a, b, "T") == r + 1


def test_bad_input_is_reported():
    with pytest.raises(SnapshotError):
        snapshot.loads(b"not a snapshot")
    with pytest.raises(SnapshotError):
        snapshot.loads(snapshot.MAGIC + b"\x00\x01garbage")
    with pytest.raises(SnapshotError):
        snapshot.loads(snapshot.MAGIC + b"\x00\x09")

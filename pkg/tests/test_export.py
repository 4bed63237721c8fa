import io
from collections import Counter

import networkx as nx
import pytest

from ekg import aggregate
from ekg.config import ClassifierRule
from ekg.errors import UnknownSelection
from ekg.export import ExportSelection, dot_text, export_dot, export_graphml, graphml_bytes, select
from ekg.store import LabeledPropertyGraph
from ekg.values import Timestamp
from support import build_sample

ACTIVITY = ClassifierRule("Activity", ("Activity",))


@pytest.fixture(scope="module")
def g():
    graph = build_sample()
    aggregate.derive_classes(graph, ACTIVITY)
    aggregate.link_event_classes(graph, ACTIVITY)
    aggregate.aggregate_df(graph, "Activity", "Offer")
    return graph


def lines_like(text, fragment):
    return [line for line in text.splitlines() if fragment in line]


def test_offer2_chain(g):
    sel = ExportSelection.parse("entity=Offer2", include_rel_types=frozenset({"DF"}))
    text = dot_text(g, sel)
    assert len(lines_like(text, "shape=box")) == 3
    edges = lines_like(text, "->")
    assert [e.split("[")[0].strip() for e in edges] == ["n5 -> n6", "n6 -> n9"]
    assert all('label="Offer"' in e for e in edges)
    assert 'label="Create Offer\\n2019-08-29T13:49:00Z"' in text


def test_entity_scope_includes_the_entity(g):
    sub = select(g, ExportSelection.parse("entity=Offer2"))
    offer2 = next(n.ref for n in g.nodes("Entity") if n.get("uID") == "Offer2")
    assert sub.nodes == [5, 6, 9, offer2]
    assert len(sub.rels) == 5  # three E_EN and two DF


def test_empty_selection_is_valid_dot(g):
    sel = ExportSelection.parse("entity=Offer2", include_node_kinds=frozenset({"Log"}))
    assert dot_text(g, sel) == "digraph ekg {\n}\n"


def test_aggregated_scope(g):
    text = dot_text(g, ExportSelection.parse("aggregated=Activity:Offer:1"))
    assert len(lines_like(text, "shape=hexagon")) == 3
    assert sorted(line.split("label=")[1] for line in lines_like(text, "->")) == ['"Offer (1)"];', '"Offer (2)"];']
    only = dot_text(g, ExportSelection.parse("aggregated=Activity:Offer:2"))
    assert len(lines_like(only, "shape=hexagon")) == 2


def test_shapes(g):
    text = dot_text(g)
    counts = Counter(line.split("shape=")[1].split(",")[0] for line in lines_like(text, "shape="))
    assert counts == {"box": 10, "ellipse": 14, "hexagon": 8, "note": 1}


def test_unknown_selection(g):
    for scope in ("entity=Nobody", "entityType=Nope", "aggregated=Nope", "sideways", "aggregated=Activity:Offer:x"):
        with pytest.raises(UnknownSelection):
            select(g, ExportSelection.parse(scope))
    with pytest.raises(UnknownSelection):
        ExportSelection("sideways")


def test_entity_type_scope(g):
    sub = select(g, ExportSelection.parse("entityType=Offer", include_rel_types=frozenset({"DF"})))
    assert sub.nodes == [4, 5, 6, 7, 9]
    assert [(g.rel(r).source, g.rel(r).target) for r in sub.rels] == [(4, 7), (5, 6), (6, 9)]


def read_back(data: bytes):
    return nx.read_graphml(io.BytesIO(data), force_multigraph=True)


def test_graphml_full_graph(g):
    back = read_back(graphml_bytes(g))
    assert back.number_of_nodes() == g.count_nodes() == 33
    assert back.number_of_edges() == g.count_relationships()
    assert back.nodes["n1"]["timestamp"] == "2019-08-29T10:30:00Z"
    assert back.nodes["n1"]["labels"] == "Event"


def test_graphml_is_isomorphic_to_selection(g):
    for scope in ("full", "entity=Case1", "entityType=Offer,Application", "aggregated=Activity"):
        sel = ExportSelection.parse(scope)
        sub = select(g, sel)
        expected = nx.MultiDiGraph()
        for n in sub.nodes:
            expected.add_node(f"n{n}", labels=":".join(sorted(g.node(n).labels)))
        for r in sub.rels:
            rel = g.rel(r)
            expected.add_edge(f"n{rel.source}", f"n{rel.target}", type=rel.type)
        back = read_back(graphml_bytes(g, sel))
        same = nx.is_isomorphic(
            back,
            expected,
            node_match=lambda a, b: a["labels"] == b["labels"],
            edge_match=lambda a, b: Counter(d["type"] for d in a.values()) == Counter(d["type"] for d in b.values()),
        )
        assert same, scope
        assert set(back.nodes) == set(expected.nodes)


def test_graphml_types_and_escaping():
    graph = LabeledPropertyGraph()
    a = graph.add_node({"Event"}, {"Activity": "<a & b>", "timestamp": Timestamp(0), "n": 3, "x": 1.5, "ok": True})
    b = graph.add_node({"Event"}, {"Activity": "c", "timestamp": Timestamp(1), "n": "three", "tags": ("p", "q")})
    graph.add_relationship(a, b, "DF", {"EntityType": "T"})
    data = graphml_bytes(graph)
    assert b'attr.name="n" attr.type="string"' in data
    assert b'attr.name="x" attr.type="double"' in data
    assert b'attr.name="ok" attr.type="boolean"' in data
    back = read_back(data)
    assert back.nodes["n1"]["Activity"] == "<a & b>"
    assert back.nodes["n1"]["x"] == 1.5 and back.nodes["n1"]["ok"] is True
    assert back.nodes["n2"]["tags"] == '["p", "q"]'


def test_files_are_deterministic(g, tmp_path):
    sel = ExportSelection.parse("entityType=Case_AO")
    export_dot(g, sel, tmp_path / "a.dot")
    export_dot(build_sample(), sel, tmp_path / "b.dot")
    assert (tmp_path / "a.dot").read_bytes() == (tmp_path / "b.dot").read_bytes()
    export_graphml(g, None, tmp_path / "a.graphml")
    export_graphml(g, None, tmp_path / "b.graphml")
    assert (tmp_path / "a.graphml").read_bytes() == (tmp_path / "b.graphml").read_bytes()


def test_rel_types_imply_node_kinds():
    sel = ExportSelection(include_rel_types=frozenset({"DF_C"}))
    assert sel.node_kinds() == frozenset({"Class"})
    assert ExportSelection().node_kinds() is None

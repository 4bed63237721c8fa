from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekg.errors import DanglingEndpoint, EmptyLabels, TypeMismatch, UniquenessViolation, UnknownNode
from ekg.store import LabeledPropertyGraph
from ekg.values import Timestamp
from support import build_sample


@pytest.fixture(scope="module")
def fixture_graph():
    return build_sample()


def test_first_node_gets_ref_one():
    g = LabeledPropertyGraph()
    ref = g.add_node({"Event"}, {"Activity": "Create Appl.", "timestamp": Timestamp(0)})
    assert ref == 1
    assert g.node(1).properties["Activity"] == "Create Appl."


def test_refs_increase_and_are_not_reused():
    g = LabeledPropertyGraph()
    a = g.add_node({"X"})
    b = g.add_node({"X"})
    r = g.add_relationship(a, b, "T")
    g.remove_relationship(r)
    assert g.add_relationship(a, b, "T") == r + 1
    assert g.add_node({"X"}) == b + 1


def test_duplicate_uid_rejected():
    g = LabeledPropertyGraph()
    g.add_node({"Entity"}, {"uID": "Offer1"})
    with pytest.raises(UniquenessViolation) as info:
        g.add_node({"Entity"}, {"uID": "Offer1"})
    assert info.value.values == ["Offer1"]


def test_bare_store_has_no_uid_index():
    g = LabeledPropertyGraph(schema_indexes=False)
    g.add_node({"Entity"}, {"uID": "Offer1"})
    g.add_node({"Entity"}, {"uID": "Offer1"})
    with pytest.raises(UniquenessViolation):
        g.ensure_index("Entity", "uID", unique=True)


def test_empty_labels_rejected():
    with pytest.raises(EmptyLabels):
        LabeledPropertyGraph().add_node(set(), {})


def test_relationships_and_self_loops():
    g = LabeledPropertyGraph()
    n1, n2 = g.add_node({"Event"}), g.add_node({"Entity"})
    r = g.add_relationship(n1, n2, "E_EN")
    assert r in g.out_rels(n1, "E_EN")
    loop = g.add_relationship(n1, n1, "DF")
    assert g.neighbors(n1, "out", "DF") == [(loop, n1)]
    assert g.neighbors(n1, "both", "DF") == [(loop, n1), (loop, n1)]
    with pytest.raises(DanglingEndpoint):
        g.add_relationship(n1, 99, "DF")


def test_neighbors_of_isolated_and_missing_nodes():
    g = LabeledPropertyGraph()
    n = g.add_node({"X"})
    assert g.neighbors(n, "both") == []
    with pytest.raises(UnknownNode):
        g.neighbors(42)


def test_find_nodes_on_fixture(fixture_graph):
    assert fixture_graph.find_nodes("Event", [("Activity", "=", "Send Offer")]) == {6, 7}
    assert len(fixture_graph.find_nodes("Entity", [("EntityType", "=", "Offer")])) == 2
    assert LabeledPropertyGraph().find_nodes("Event", []) == set()


def test_incoming_df_of_row_7(fixture_graph):
    # fully derived graph: Offer and Case_AO(1,1) from row 4, Resource and Case from row 6
    pairs = fixture_graph.neighbors(7, "in", "DF")
    by_type = sorted((fixture_graph.rel(r).get("EntityType"), src) for r, src in pairs)
    assert by_type == [("Case", 6), ("Case_AO", 4), ("Offer", 4), ("Resource", 6)]


def test_index_is_transparent(fixture_graph):
    scan = fixture_graph.find_nodes("Event", [("Activity", "=", "Create Offer")])
    fixture_graph.ensure_index("Event", "Activity")
    assert fixture_graph.find_nodes("Event", [("Activity", "=", "Create Offer")]) == scan == {4, 5}


def test_cross_variant_comparison_raises():
    g = LabeledPropertyGraph()
    g.add_node({"Event"}, {"Amount": 10})
    with pytest.raises(TypeMismatch):
        g.find_nodes("Event", [("Amount", "=", 10.0)])
    g.ensure_index("Event", "Amount")
    with pytest.raises(TypeMismatch):
        g.find_nodes("Event", [("Amount", "=", "10")])


def test_range_predicates_scan():
    g = LabeledPropertyGraph()
    refs = [g.add_node({"Event"}, {"timestamp": Timestamp(ms)}) for ms in (5, 1, 9)]
    assert g.find_nodes("Event", [("timestamp", ">", Timestamp(4))]) == {refs[0], refs[2]}


def test_set_property_keeps_index_in_sync():
    g = LabeledPropertyGraph()
    g.ensure_index("Event", "Activity")
    n = g.add_node({"Event"}, {"Activity": "A"})
    g.set_property(n, "Activity", "B")
    assert g.find_nodes("Event", [("Activity", "=", "A")]) == set()
    assert g.find_nodes("Event", [("Activity", "=", "B")]) == {n}


def test_census_counts(fixture_graph):
    census = fixture_graph.census()
    assert census["nodes"] == 25
    assert census["labels"] == {"Entity": 14, "Event": 10, "Log": 1}
    assert census["relTypes"]["DF"] == 27


values = st.one_of(st.sampled_from(["a", "b", "c"]), st.integers(0, 3))
records = st.lists(st.fixed_dictionaries({}, optional={"k": values, "m": values}), max_size=25)


@settings(max_examples=200, deadline=None)
@given(records, values)
def test_index_and_scan_agree(rows, probe):
    plain, indexed = LabeledPropertyGraph(), LabeledPropertyGraph()
    indexed.ensure_index("N", "k")
    for props in rows:
        plain.add_node({"N"}, props)
        indexed.add_node({"N"}, props)

    def run(g):
        try:
            return g.find_nodes("N", [("k", "=", probe)])
        except TypeMismatch:
            return "mismatch"

    assert run(plain) == run(indexed)


edges = st.lists(st.tuples(st.integers(1, 6), st.integers(1, 6), st.sampled_from(["A", "B"])), max_size=30)


@settings(max_examples=200, deadline=None)
@given(edges)
def test_neighbors_in_and_out_make_both(edge_list):
    g = LabeledPropertyGraph()
    for _ in range(6):
        g.add_node({"N"})
    for s, t, kind in edge_list:
        g.add_relationship(s, t, kind)
    for n in range(1, 7):
        for kind in (None, "A"):
            both = g.neighbors(n, "both", kind)
            assert Counter(both) == Counter(g.neighbors(n, "out", kind)) + Counter(g.neighbors(n, "in", kind))
            assert [r for r, _ in both] == sorted(r for r, _ in both)
    for rel in g.relationships():
        assert g.has_node(rel.source) and g.has_node(rel.target)

import pytest

from ekg import query
from ekg.errors import BrokenChain, UnknownEntity, UnknownEntityType
from support import build_sample

CASE1 = [
    "Create Appl.",
    "Appl. Ready",
    "Handle Leads",
    "Create Offer",
    "Create Offer",
    "Send Offer",
    "Send Offer",
    "Call Offers",
    "Offer Returned",
    "Appl. Complete",
]


@pytest.fixture(scope="module")
def g():
    return build_sample()


def test_events_of_entity(g):
    assert query.events_of_entity(g, "Case1", {"Activity": "Create Appl."}) == {1}
    assert query.events_of_entity(g, "Offer1") == {4, 7}
    assert query.events_of_entity(g, "Offer1", lambda p: True) == {4, 7}
    assert query.events_of_entity(g, "Case1", [("Activity", "=", "Send Offer")]) == {6, 7}
    with pytest.raises(UnknownEntity):
        query.events_of_entity(g, "Offer99")


@pytest.mark.parametrize(
    "entity_type, src, dst, expected",
    [
        ("Offer", "Create Offer", None, [(4, 7), (5, 6)]),
        ("Offer", "Send Offer", "Offer Returned", [(6, 9)]),
        ("Application", "Appl. Complete", None, []),
    ],
)
def test_directly_follows_pairs(g, entity_type, src, dst, expected):
    assert query.directly_follows_pairs(g, entity_type, src, dst) == expected


def test_unknown_entity_type(g):
    for call in (
        lambda: query.directly_follows_pairs(g, "Nope"),
        lambda: query.eventually_follows(g, "Nope", "a", "b"),
        lambda: query.duration_between(g, "Nope", "a", "b"),
        lambda: query.entities_with_df_pattern(g, "Nope", "a", "b", "Case", 1),
    ):
        with pytest.raises(UnknownEntityType):
            call()


def test_eventually_follows(g):
    (path,) = query.eventually_follows(g, "Offer", "Create Offer", "Offer Returned")
    assert path.events == (5, 6, 9) and path.entity_uid == "Offer2"
    assert len(path) == 2 and path.start == 5 and path.end == 9
    assert query.eventually_follows(g, "Offer", "Create Offer", "Create Offer") == []
    paths = query.eventually_follows(g, "Case_AO", "Create Appl.", "Appl. Complete")
    assert sorted((p.entity_uid, len(p)) for p in paths) == [("Case_AO_1_1", 4), ("Case_AO_1_2", 5)]


def test_path_edges_are_df_of_the_type(g):
    for path in query.eventually_follows(g, "Case_AO", "Create Appl.", "Appl. Complete"):
        for (a, b), r in zip(zip(path.events, path.events[1:]), path.rels):
            rel = g.rel(r)
            assert (rel.source, rel.target, rel.type, rel.get("EntityType")) == (a, b, "DF", "Case_AO")


def test_variant_of(g):
    assert query.variant_of(g, "Offer2", "Offer") == ["Create Offer", "Send Offer", "Offer Returned"]
    assert query.variant_of(g, "Case1", "Case") == CASE1
    assert query.variant_of(g, "Resource9", "Resource") == ["Create Appl."]
    with pytest.raises(UnknownEntity):
        query.variant_of(g, "Case7", "Case")


def test_duration_between(g):
    (best,) = query.duration_between(g, "Offer", "Create Offer", "Offer Returned", "max")
    assert (best.entity_uid, best.elapsed, best.iso) == ("Offer2", 86_400_000, "P1D")
    everything = query.duration_between(g, "Offer", "Create Offer", "Send Offer", "all")
    assert [(r.entity_uid, r.iso) for r in everything] == [("Offer1", "PT4H46M"), ("Offer2", "PT4H11M")]
    (low,) = query.duration_between(g, "Offer", "Create Offer", "Send Offer", "min")
    assert low.entity_uid == "Offer2"
    assert query.duration_between(g, "Offer", "Offer Returned", "Create Offer", "all") == []
    with pytest.raises(ValueError):
        query.duration_between(g, "Offer", "a", "b", "median")


def test_entities_with_df_pattern(g):
    assert query.entities_with_df_pattern(g, "Offer", "Create Offer", "Send Offer", "Case", 2) == {"Case1"}
    assert query.entities_with_df_pattern(g, "Offer", "Create Offer", "Send Offer", "Case", 3) == set()
    assert query.entities_with_df_pattern(g, "Offer", "Send Offer", "Offer Returned", "Case", 2) == set()


def test_paths_in_parent(g):
    (path,) = query.paths_in_parent(g, "Case1", "Create Appl.", {9})
    assert path.events == tuple(range(1, 10)) and len(path) == 8
    assert query.paths_in_parent(g, "Case1", "Create Appl.", set()) == []
    assert query.paths_in_parent(g, "Case1", "Offer Returned", {2}) == []
    with pytest.raises(UnknownEntity):
        query.paths_in_parent(g, "Nobody", "Create Appl.", {9})


def test_parent_paths_for_pattern(g):
    found = query.parent_paths_for_pattern(g, "Offer", "Create Offer", "Send Offer", "Case", 2, "Create Appl.")
    assert list(found) == ["Case1"]
    assert sorted(p.end for p in found["Case1"]) == [6, 7]


def test_rendering(g):
    (path,) = query.eventually_follows(g, "Offer", "Create Offer", "Offer Returned")
    assert query.path_rows(g, [path]) == [
        ("Offer", "Offer2", "n5 n6 n9", "Create Offer > Send Offer > Offer Returned", 2)
    ]
    results = query.duration_between(g, "Offer", "Create Offer", "Send Offer", "all")
    assert query.duration_rows(results)[0] == ("Offer1", "n4", "n7", "PT4H46M")


def test_broken_chain_is_reported():
    g = build_sample()
    g.add_relationship(4, 9, "DF", {"EntityType": "Offer", "EntityUID": "Offer1"})
    with pytest.raises(BrokenChain):
        query.variant_of(g, "Offer1", "Offer")
    g = build_sample()
    g.add_relationship(7, 4, "DF", {"EntityType": "Offer", "EntityUID": "Offer1"})
    with pytest.raises(BrokenChain):
        query.variant_of(g, "Offer1", "Offer")

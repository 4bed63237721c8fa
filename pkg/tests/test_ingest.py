import json

import pytest

from ekg import ingest
from ekg.config import DerivationConfig, EntityRule, ImportConfig, ReificationRule, parse_filter
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
from ekg.store import LabeledPropertyGraph
from ekg.values import Timestamp
from support import SAMPLE_CONFIG, SAMPLE_CSV, build_sample, df_oracle, entity_members, raw_rows, sample_config, sample_text

FMT = "dd.MM.yy HH:mm"
APPLICATION = EntityRule("Application", "Appl", parse_filter({"Origin": "A"}))
WORKFLOW = EntityRule("Workflow", "Appl", parse_filter({"Origin": "W"}))
OFFER = EntityRule("Offer", "oID", parse_filter({"Origin": "O"}))
RESOURCE = EntityRule("Resource", "Resource")
CASE_AO = ReificationRule("Application", "Offer", "Appl", "Case_AO")


def imported(text: str | None = None) -> LabeledPropertyGraph:
    g = LabeledPropertyGraph()
    ingest.import_events(g, ingest.load_table_text(text or sample_text(), ImportConfig(FMT)))
    ingest.create_logs(g, "BPIC17-sample")
    return g


def with_entities(*rules: EntityRule) -> LabeledPropertyGraph:
    g = imported()
    for rule in rules:
        ingest.derive_entities(g, rule)
        ingest.correlate_events(g, rule)
    return g


def df_pairs(g, entity_type):
    return sorted((r.source, r.target) for r in g.relationships("DF") if r.get("EntityType") == entity_type)


# -- loading -------------------------------------------------------------


def test_load_sample():
    table = ingest.load_event_table(SAMPLE_CSV, ImportConfig(FMT))
    assert len(table) == 10
    assert table.rows[0].activity == "Create Appl."
    assert table.rows[0].timestamp.isoformat() == "2019-08-29T10:30:00Z"
    assert table.rows[3].values["oID"] == "1"


def test_header_only_file():
    assert len(ingest.load_table_text("Activity,Timestamp\n")) == 0


def test_bad_timestamp_names_the_row():
    with pytest.raises(UnparseableTimestamp) as info:
        ingest.load_table_text("Activity,Timestamp\nA,2020-01-01T00:00:00\nB,not-a-date\n")
    assert info.value.row_index == 2


def test_missing_columns_and_malformed_rows():
    with pytest.raises(MissingColumn):
        ingest.load_table_text("Activity,When\nA,x\n")
    with pytest.raises(MalformedCsv) as info:
        ingest.load_table_text("Activity,Timestamp\nA,2020-01-01T00:00:00,extra\n")
    assert info.value.row_index == 1
    with pytest.raises(MalformedCsv):
        ingest.load_table_text('Activity,Timestamp\n"A,2020-01-01T00:00:00\n')


def test_type_hints_and_iso_default():
    table = ingest.load_table_text(
        "Activity,Timestamp,Amount,Ok\nA,2020-01-01T10:00:00.250Z,5,yes\n",
        ImportConfig(column_type_hints={"Amount": "int", "Ok": "bool"}),
    )
    row = table.rows[0].values
    assert row["Amount"] == 5 and row["Ok"] is True
    assert row["timestamp"] == Timestamp(1577872800250)


def test_java_patterns():
    parse = ingest.timestamp_parser("yyyy-MM-dd HH:mm:ss.SSS")
    assert parse("2020-01-01 00:00:01.500") == Timestamp(1577836801500)


# -- events and logs ---------------------------------------------------------


def test_import_events_row_order_and_guard():
    g = LabeledPropertyGraph()
    table = ingest.load_table_text(sample_text(), ImportConfig(FMT))
    assert ingest.import_events(g, table) == 10
    assert g.node(4).properties["oID"] == "1" and g.node(4).properties["Origin"] == "O"
    assert "oID" not in g.node(1).properties
    with pytest.raises(NonEmptyGraph):
        ingest.import_events(g, table)


def test_empty_table_leaves_graph_unchanged():
    g = LabeledPropertyGraph()
    assert ingest.import_events(g, ingest.load_table_text("Activity,Timestamp\n")) == 0
    assert g.count_nodes() == 0


def test_logs_single_and_rerun():
    g = imported()
    assert g.count_nodes("Log") == 1 and g.count_relationships("L_E") == 10
    assert ingest.create_logs(g, "BPIC17-sample") == 0
    assert g.count_relationships("L_E") == 10


def test_two_logs():
    g = LabeledPropertyGraph()
    text = "Activity,Timestamp,LogID\nA,2020-01-01T00:00:00,A\nB,2020-01-01T00:00:01,B\nC,2020-01-01T00:00:02,A\n"
    ingest.import_events(g, ingest.load_table_text(text))
    assert ingest.create_logs(g) == 2
    assert all(len(g.in_rels(e.ref, "L_E")) == 1 for e in g.nodes("Event"))


# -- entities and correlation ------------------------------------------------


@pytest.mark.parametrize(
    "rule, ids",
    [(APPLICATION, ["1"]), (OFFER, ["1", "2"]), (RESOURCE, ["10", "11", "12", "16", "42", "44", "9"])],
)
def test_derive_entities(rule, ids):
    g = imported()
    assert ingest.derive_entities(g, rule) == len(ids)
    found = sorted(g.node(r).properties["ID"] for r in ingest.entities_of_type(g, rule.entity_type))
    assert found == sorted(ids)
    assert ingest.derive_entities(g, rule) == 0


def test_uid_is_type_plus_id():
    g = imported()
    ingest.derive_entities(g, APPLICATION)
    assert ingest.find_entity(g, "Application1") is not None


@pytest.mark.parametrize("rule, rows", [(APPLICATION, [1, 2, 10]), (WORKFLOW, [3, 8])])
def test_correlate_events(rule, rows):
    g = imported()
    ingest.derive_entities(g, rule)
    assert ingest.correlate_events(g, rule) == len(rows)
    assert sorted(r.source for r in g.relationships("E_EN")) == rows
    assert ingest.correlate_events(g, rule) == 0


def test_unknown_column():
    with pytest.raises(UnknownColumn):
        ingest.derive_entities(imported(), EntityRule("X", "NoSuchColumn"))
    with pytest.raises(UnknownColumn):
        ingest.derive_entities(imported(), EntityRule("X", "Appl", parse_filter({"Nope": "1"})))


# -- directly-follows ----------------------------------------------------------


def test_df_per_type():
    g = with_entities(APPLICATION, OFFER, RESOURCE)
    assert ingest.derive_df(g, "Application") == 2
    assert df_pairs(g, "Application") == [(1, 2), (2, 10)]
    assert ingest.derive_df(g, "Offer") == 3
    assert df_pairs(g, "Offer") == [(4, 7), (5, 6), (6, 9)]
    ingest.derive_df(g, "Resource")
    # rows 6 and 7 share 18:00; row order breaks the tie
    assert df_pairs(g, "Resource") == [(4, 5), (6, 7), (8, 10)]
    assert ingest.derive_df(g, "Offer") == 0
    with pytest.raises(UnknownEntityType):
        ingest.derive_df(g, "Nope")


def test_df_edges_name_their_entity():
    g = with_entities(OFFER)
    ingest.derive_df(g, "Offer")
    uids = {(r.source, r.target): r.get("EntityUID") for r in g.relationships("DF")}
    assert uids == {(4, 7): "Offer1", (5, 6): "Offer2", (6, 9): "Offer2"}


def test_df_stays_within_a_log():
    text = "Activity,Timestamp,LogID,c\nA,2020-01-01T00:00:00,L1,x\nB,2020-01-01T00:00:01,L2,x\nC,2020-01-01T00:00:02,L1,x\n"
    rule = EntityRule("T", "c")
    for per_log, expected in [(True, [(1, 3)]), (False, [(1, 2), (2, 3)])]:
        g = LabeledPropertyGraph()
        ingest.import_events(g, ingest.load_table_text(text))
        ingest.create_logs(g)
        ingest.derive_entities(g, rule)
        ingest.correlate_events(g, rule)
        ingest.derive_df(g, "T", per_log=per_log)
        assert df_pairs(g, "T") == expected


# -- reification ---------------------------------------------------------------


def test_reification_on_the_sample():
    g = with_entities(APPLICATION, OFFER)
    assert ingest.reify_relation(g, CASE_AO) == 2
    assert ingest.reify_relation(g, CASE_AO) == 0
    c11 = ingest.find_entity(g, "Case_AO_1_1")
    props = g.node(c11).properties
    assert props["ApplicationID"] == "1" and props["OfferID"] == "1" and props["ID"] == "1_1"
    ingest.correlate_composite(g, "Case_AO", "Application")
    ingest.correlate_composite(g, "Case_AO", "Offer")
    assert sorted(ingest.correlated_events(g, c11)) == [1, 2, 4, 7, 10]
    assert sorted(ingest.correlated_events(g, ingest.find_entity(g, "Case_AO_1_2"))) == [1, 2, 5, 6, 9, 10]
    assert ingest.derive_df(g, "Case_AO") == 9
    per_entity = {}
    for r in g.relationships("DF"):
        if r.get("EntityType") == "Case_AO":
            per_entity.setdefault(r.get("EntityUID"), []).append((r.source, r.target))
    assert sorted(per_entity["Case_AO_1_1"]) == [(1, 2), (2, 4), (4, 7), (7, 10)]
    assert len(per_entity["Case_AO_1_2"]) == 5


def test_sentinels_suppress_composites():
    text = (
        "Activity,Timestamp,Appl,oID,Origin\n"
        "A,2020-01-01T00:00:00,Unknown,,A\n"
        "B,2020-01-01T00:00:01,Unknown,1,O\n"
    )
    g = LabeledPropertyGraph()
    ingest.import_events(g, ingest.load_table_text(text))
    ingest.create_logs(g)
    for rule in (APPLICATION, OFFER):
        ingest.derive_entities(g, rule)
        ingest.correlate_events(g, rule)
    assert ingest.reify_relation(g, CASE_AO) == 0


def test_composite_id_collision_fails_loudly():
    # "1_2" + "3" and "1" + "2_3" both give the ID 1_2_3
    text = (
        "Activity,Timestamp,A,B,K\n"
        "a,2020-01-01T00:00:00,1_2,,a\n"
        "b,2020-01-01T00:00:01,1,,a\n"
        "c,2020-01-01T00:00:02,1_2,3,b\n"
        "d,2020-01-01T00:00:03,1,2_3,b\n"
    )
    g = LabeledPropertyGraph()
    ingest.import_events(g, ingest.load_table_text(text))
    ingest.create_logs(g)
    rules = (EntityRule("P", "A", parse_filter({"K": "a"})), EntityRule("Q", "B", parse_filter({"K": "b"})))
    for rule in rules:
        ingest.derive_entities(g, rule)
        ingest.correlate_events(g, rule)
    with pytest.raises(UniquenessViolation):
        ingest.reify_relation(g, ReificationRule("P", "Q", "A", "PQ"))


def test_reification_needs_distinct_types():
    with pytest.raises(ConfigError):
        ReificationRule("Offer", "Offer", "Appl", "X")


# -- whole fixture -------------------------------------------------------------


def test_sample_counts_match_the_enumeration_oracle():
    g = build_sample()
    rows = raw_rows(sample_text())
    members = entity_members(rows, json.loads(SAMPLE_CONFIG.read_text()))
    assert g.count_nodes("Event") == 10 and g.count_nodes("Log") == 1 and g.count_nodes("Entity") == 14
    assert g.count_nodes() == 25
    for entity_type, groups in members.items():
        e_en = sum(1 for r in g.relationships("E_EN") if g.node(r.target).get("EntityType") == entity_type)
        assert e_en == sum(len(m) for m in groups.values()), entity_type
        edges = sum(len(m) - 1 for m in groups.values())
        assert sum(1 for r in g.relationships("DF") if r.get("EntityType") == entity_type) == edges
        assert set(df_pairs(g, entity_type)) == df_oracle(rows, groups, "%d.%m.%y %H:%M")
    assert g.count_relationships("E_EN") == 41


def test_config_round_trip():
    config = sample_config()
    assert DerivationConfig.from_dict(config.to_dict()) == config
    with pytest.raises(ConfigError):
        DerivationConfig.from_dict({"entities": [{"entityType": "X"}]})

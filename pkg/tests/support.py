"""Shared fixtures and independent oracles for the test suite.

The oracles work from raw CSV rows with the csv module and datetime only, so
they share no code with the package under test. Event refs equal 1-based row
numbers because events are imported before anything else.
"""

from __future__ import annotations

import csv
import io
import random
from datetime import datetime, timedelta
from importlib.resources import files

from ekg.config import DerivationConfig, load_config
from ekg.ingest import load_table_text
from ekg.pipeline import build_graph
from ekg.store import LabeledPropertyGraph

DATA = files("ekg.data")
SAMPLE_CSV = DATA / "sample.csv"
SAMPLE_CONFIG = DATA / "sample.json"


def sample_config() -> DerivationConfig:
    return load_config(SAMPLE_CONFIG)


def sample_text() -> str:
    return SAMPLE_CSV.read_text(encoding="utf-8")


def build_sample(config: DerivationConfig | None = None) -> LabeledPropertyGraph:
    config = config or sample_config()
    table = load_table_text(sample_text(), config.import_config)
    return build_graph(table, config)


# -- raw-row oracles ---------------------------------------------------------


def raw_rows(text: str) -> list[dict[str, str]]:
    """Data rows as dicts with a 1-based ``_row`` key; empty cells dropped."""
    out = []
    for i, row in enumerate(csv.DictReader(io.StringIO(text)), 1):
        clean = {k: v for k, v in row.items() if v != ""}
        clean["_row"] = i
        out.append(clean)
    return out


def row_order(fmt: str):
    return lambda r: (datetime.strptime(r["Timestamp"], fmt), r["_row"])


def _passes(row: dict, flt) -> bool:
    if isinstance(flt, dict):
        return all(row.get(k) == v for k, v in flt.items())
    return True


def entity_members(rows: list[dict], config_dict: dict) -> dict[str, dict[str, list[dict]]]:
    """entity type -> entity ID -> member rows, including reified composites."""
    out: dict[str, dict[str, list[dict]]] = {}
    for rule in config_dict.get("entities", []):
        per = out.setdefault(rule["entityType"], {})
        for row in rows:
            ident = row.get(rule["idColumn"])
            if ident is None or not _passes(row, rule.get("filter")):
                continue
            per.setdefault(ident, []).append(row)
    for rule in config_dict.get("reifications", []):
        first, second = out[rule["type1"]], out[rule["type2"]]
        sentinels = set(rule.get("nullSentinels", ["Unknown", ""]))
        comp = out.setdefault(rule["compositeType"], {})
        for n2, members2 in second.items():
            for row in members2:
                n1 = row.get(rule["refToColumn"])
                if n1 is None or n1 not in first or n1 in sentinels or n2 in sentinels:
                    continue
                key = f"{n1}_{n2}"
                if key not in comp:
                    merged = {r["_row"]: r for r in first[n1] + members2}
                    comp[key] = list(merged.values())
    return out


def df_edges_oracle(rows: list[dict], members: dict[str, list[dict]], fmt: str, per_log: bool = True) -> list:
    """One ``(row_a, row_b)`` per entity and adjacent pair of its rows sorted by (time, row), split by LogID."""
    edges = []
    for group in members.values():
        by_log: dict = {}
        for row in group:
            by_log.setdefault(row.get("LogID") if per_log else None, []).append(row)
        for chain in by_log.values():
            chain = sorted(chain, key=row_order(fmt))
            edges.extend((a["_row"], b["_row"]) for a, b in zip(chain, chain[1:]))
    return edges


def df_oracle(rows: list[dict], members: dict[str, list[dict]], fmt: str, per_log: bool = True) -> set:
    return set(df_edges_oracle(rows, members, fmt, per_log))


# -- random event tables -------------------------------------------------------

RANDOM_FORMAT = "yyyy-MM-dd HH:mm:ss"
RANDOM_STRPTIME = "%Y-%m-%d %H:%M:%S"
_BASE = datetime(2021, 3, 1, 8, 0, 0)


def tie_rate(stamps: list[str]) -> float:
    counts: dict[str, int] = {}
    for s in stamps:
        counts[s] = counts.get(s, 0) + 1
    return sum(1 for s in stamps if counts[s] > 1) / len(stamps)


def random_table(seed: int) -> tuple[str, dict]:
    """A seeded table: 5..50 events, 1..3 entity types, >= 20% tied timestamps,
    sometimes two logs; every row names at least one entity.
    """
    rng = random.Random(seed)
    n = rng.randint(5, 50)
    k = rng.randint(1, 3)
    two_logs = rng.random() < 0.5
    columns = [f"c{i}" for i in range(k)]
    slots = max(2, n // 2)
    stamps = [(_BASE + timedelta(minutes=rng.randrange(slots))).strftime(RANDOM_STRPTIME) for _ in range(n)]
    while tie_rate(stamps) < 0.2:
        untied = [i for i, s in enumerate(stamps) if stamps.count(s) == 1]
        i = rng.choice(untied)
        j = rng.choice([x for x in range(n) if x != i])
        stamps[i] = stamps[j]
    header = ["Activity", "Timestamp", *columns] + (["LogID"] if two_logs else [])
    lines = [header]
    for i in range(n):
        ids = [str(rng.randint(1, max(1, n // 4))) if rng.random() < 0.7 else "" for _ in columns]
        if not any(ids):
            ids[rng.randrange(k)] = str(rng.randint(1, max(1, n // 4)))
        row = [rng.choice("ABCDE"), stamps[i], *ids]
        if two_logs:
            row.append(rng.choice(["L1", "L2"]))
        lines.append(row)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(lines)
    config = {
        "timestampFormat": RANDOM_FORMAT,
        "entities": [{"entityType": f"T{i}", "idColumn": c} for i, c in enumerate(columns)],
        "classifiers": [{"classType": "Activity", "keyColumns": ["Activity"]}],
    }
    return buf.getvalue(), config


def build_from(text: str, config_dict: dict) -> LabeledPropertyGraph:
    config = DerivationConfig.from_dict(config_dict)
    return build_graph(load_table_text(text, config.import_config), config)

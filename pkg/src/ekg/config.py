"""Declarative derivation rules and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import Any

from ekg.errors import ConfigError
from ekg.values import COMPARATORS, PropertyValue, normalize

Filter = tuple[tuple[str, str, PropertyValue], ...]

ISO8601 = "ISO8601"


def parse_filter(raw: Any) -> Filter:
    """Accept ``{"Origin": "A"}`` (equalities) or ``[["Amount", ">", 10], ...]``."""
    if raw is None:
        return ()
    if isinstance(raw, dict):
        return tuple((str(k), "=", normalize(v)) for k, v in raw.items())
    if isinstance(raw, (list, tuple)):
        out = []
        for item in raw:
            if not isinstance(item, (list, tuple)) or len(item) != 3:
                raise ConfigError(f"filter conjunct must be [key, comparator, value], got {item!r}")
            key, op, value = item
            if op not in COMPARATORS:
                raise ConfigError(f"unknown comparator {op!r} in filter")
            out.append((str(key), op, normalize(value)))
        return tuple(out)
    raise ConfigError(f"unsupported filter {raw!r}")


@dataclass(frozen=True)
class ImportConfig:
    timestamp_format: str = ISO8601
    default_log_id: str = "log"
    column_type_hints: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class EntityRule:
    entity_type: str
    id_column: str
    filter: Filter = ()

    @classmethod
    def from_dict(cls, raw: dict) -> EntityRule:
        try:
            return cls(raw["entityType"], raw["idColumn"], parse_filter(raw.get("filter")))
        except KeyError as exc:
            raise ConfigError(f"entity rule lacks {exc.args[0]!r}: {raw!r}") from None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"entityType": self.entity_type, "idColumn": self.id_column}
        if self.filter:
            out["filter"] = [list(c) for c in self.filter]
        return out


@dataclass(frozen=True)
class ReificationRule:
    type1: str
    type2: str
    ref_to_column: str
    composite_type: str
    null_sentinels: tuple[str, ...] = ("Unknown", "")

    def __post_init__(self) -> None:
        if self.type1 == self.type2:
            raise ConfigError(f"reification needs two distinct entity types, got {self.type1!r} twice")

    @classmethod
    def from_dict(cls, raw: dict) -> ReificationRule:
        try:
            sentinels = tuple(raw.get("nullSentinels", ("Unknown", "")))
            return cls(raw["type1"], raw["type2"], raw["refToColumn"], raw["compositeType"], sentinels)
        except KeyError as exc:
            raise ConfigError(f"reification rule lacks {exc.args[0]!r}: {raw!r}") from None

    def to_dict(self) -> dict:
        return {
            "type1": self.type1,
            "type2": self.type2,
            "refToColumn": self.ref_to_column,
            "compositeType": self.composite_type,
            "nullSentinels": list(self.null_sentinels),
        }


@dataclass(frozen=True)
class ClassifierRule:
    class_type: str
    key_columns: tuple[str, ...]
    separator: str = "+"

    def __post_init__(self) -> None:
        if not self.key_columns:
            raise ConfigError(f"classifier {self.class_type!r} needs at least one key column")

    @classmethod
    def from_dict(cls, raw: dict) -> ClassifierRule:
        try:
            return cls(raw["classType"], tuple(raw["keyColumns"]), raw.get("idJoin", "+"))
        except KeyError as exc:
            raise ConfigError(f"classifier rule lacks {exc.args[0]!r}: {raw!r}") from None

    def to_dict(self) -> dict:
        return {"classType": self.class_type, "keyColumns": list(self.key_columns), "idJoin": self.separator}


@dataclass(frozen=True)
class DerivationConfig:
    import_config: ImportConfig = field(default_factory=ImportConfig)
    entities: tuple[EntityRule, ...] = ()
    reifications: tuple[ReificationRule, ...] = ()
    classifiers: tuple[ClassifierRule, ...] = ()

    @classmethod
    def from_dict(cls, raw: dict) -> DerivationConfig:
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        hints = raw.get("columnTypeHints", {})
        for column, kind in hints.items():
            if kind not in ("text", "int", "float", "bool", "timestamp"):
                raise ConfigError(f"unknown type hint {kind!r} for column {column!r}")
        imp = ImportConfig(
            timestamp_format=raw.get("timestampFormat", ISO8601),
            default_log_id=raw.get("defaultLogId", "log"),
            column_type_hints=dict(hints),
        )
        return cls(
            imp,
            tuple(EntityRule.from_dict(r) for r in raw.get("entities", [])),
            tuple(ReificationRule.from_dict(r) for r in raw.get("reifications", [])),
            tuple(ClassifierRule.from_dict(r) for r in raw.get("classifiers", [])),
        )

    def to_dict(self) -> dict:
        return {
            "timestampFormat": self.import_config.timestamp_format,
            "defaultLogId": self.import_config.default_log_id,
            "columnTypeHints": dict(self.import_config.column_type_hints),
            "entities": [r.to_dict() for r in self.entities],
            "reifications": [r.to_dict() for r in self.reifications],
            "classifiers": [r.to_dict() for r in self.classifiers],
        }


def load_config(path: str | PathLike) -> DerivationConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return DerivationConfig.from_dict(raw)

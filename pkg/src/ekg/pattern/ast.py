"""Syntax tree of pattern queries.

Source positions (``pos``, 1-based ``(line, column)``) are kept for error
messages but ignored by equality, so a query and its reprinted form compare
equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ekg.values import PropertyValue

Position = tuple[int, int]
PropMap = tuple[tuple[str, PropertyValue], ...]


@dataclass(frozen=True)
class NodePattern:
    var: str | None = None
    label: str | None = None
    props: PropMap = ()
    pos: Position | None = field(default=None, compare=False)


@dataclass(frozen=True)
class RelPattern:
    rel_type: str
    var: str | None = None
    direction: str = "out"  # "out" for -[]->, "in" for <-[]-
    var_length: tuple[int, int | None] | None = None  # (min, max); max None means unbounded
    props: PropMap = ()
    pos: Position | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PathPattern:
    nodes: tuple[NodePattern, ...]
    rels: tuple[RelPattern, ...] = ()
    pos: Position | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.nodes or len(self.rels) != len(self.nodes) - 1:
            raise ValueError("a path pattern alternates node and relationship patterns, starting with a node")


@dataclass(frozen=True)
class Variable:
    name: str
    pos: Position | None = field(default=None, compare=False)


@dataclass(frozen=True)
class PropertyRef:
    var: str
    key: str
    pos: Position | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Literal:
    value: PropertyValue


Operand = Union[Variable, PropertyRef, Literal]


@dataclass(frozen=True)
class Comparison:
    left: Operand
    op: str
    right: Operand


@dataclass(frozen=True)
class ReturnItem:
    var: str
    key: str | None = None
    pos: Position | None = field(default=None, compare=False)

    @property
    def name(self) -> str:
        return self.var if self.key is None else f"{self.var}.{self.key}"


@dataclass(frozen=True)
class Query:
    matches: tuple[PathPattern, ...]
    where: tuple[Comparison, ...] = ()
    returns: tuple[ReturnItem, ...] = ()
    limit: int | None = None


def operand_vars(operand: Operand) -> list[tuple[str, Position | None]]:
    if isinstance(operand, Variable):
        return [(operand.name, operand.pos)]
    if isinstance(operand, PropertyRef):
        return [(operand.var, operand.pos)]
    return []

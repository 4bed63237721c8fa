"""Canonical text form of a parsed query; ``parse(to_text(q)) == q``."""

from __future__ import annotations

import math

from ekg.pattern.ast import Comparison, Literal, NodePattern, Operand, PathPattern, PropertyRef, Query, RelPattern
from ekg.values import PropertyValue

_ESCAPE = str.maketrans({"\\": "\\\\", "'": "\\'", "\n": "\\n", "\t": "\\t", "\r": "\\r"})


def literal_text(value: PropertyValue) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"{value!r} has no literal form")
        return repr(value)
    if isinstance(value, str):
        return "'" + value.translate(_ESCAPE) + "'"
    raise ValueError(f"{value!r} has no literal form")


def _props(props) -> str:
    if not props:
        return ""
    return " {" + ", ".join(f"{k}: {literal_text(v)}" for k, v in props) + "}"


def node_text(node: NodePattern) -> str:
    inner = (node.var or "") + (f":{node.label}" if node.label else "")
    return "(" + (inner + _props(node.props)).lstrip() + ")"


def rel_text(rel: RelPattern) -> str:
    inner = (rel.var or "") + f":{rel.rel_type}"
    if rel.var_length is not None:
        lo, hi = rel.var_length
        inner += "*" if (lo, hi) == (1, None) else f"*{lo}..{hi}"
        if hi is None and lo != 1:
            raise ValueError("open-ended variable length needs a minimum of 1")
    inner += _props(rel.props)
    return f"-[{inner}]->" if rel.direction == "out" else f"<-[{inner}]-"


def path_text(path: PathPattern) -> str:
    parts = [node_text(path.nodes[0])]
    for rel, node in zip(path.rels, path.nodes[1:]):
        parts += [rel_text(rel), node_text(node)]
    return "".join(parts)


def operand_text(operand: Operand) -> str:
    if isinstance(operand, Literal):
        return literal_text(operand.value)
    if isinstance(operand, PropertyRef):
        return f"{operand.var}.{operand.key}"
    return operand.name


def comparison_text(c: Comparison) -> str:
    return f"{operand_text(c.left)} {c.op} {operand_text(c.right)}"


def to_text(query: Query) -> str:
    parts = [f"MATCH {path_text(p)}" for p in query.matches]
    if query.where:
        parts.append("WHERE " + " AND ".join(comparison_text(c) for c in query.where))
    parts.append("RETURN " + ", ".join(item.name for item in query.returns))
    if query.limit is not None:
        parts.append(f"LIMIT {query.limit}")
    return " ".join(parts)

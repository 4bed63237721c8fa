"""A small declarative graph-pattern language: parse, print, explain, evaluate."""

from ekg.pattern.ast import Query
from ekg.pattern.evaluate import DEFAULT_MAX_HOPS, NodeValue, PathValue, RelValue, ResultTable, evaluate
from ekg.pattern.parser import parse
from ekg.pattern.plan import explain
from ekg.pattern.printer import to_text

__all__ = [
    "DEFAULT_MAX_HOPS",
    "NodeValue",
    "PathValue",
    "Query",
    "RelValue",
    "ResultTable",
    "evaluate",
    "explain",
    "parse",
    "to_text",
]

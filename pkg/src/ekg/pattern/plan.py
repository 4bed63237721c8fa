"""Anchor selection shared by the evaluator and :func:`explain`."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from ekg.pattern.ast import NodePattern, PathPattern, Query
from ekg.pattern.printer import comparison_text, literal_text, node_text, rel_text

Catalog = Iterable[tuple[str, str, bool]]

ARGUMENT, UNIQUE_SEEK, INDEX_SEEK, LABEL_SCAN, ALL_NODES = range(5)
_ACCESS_NAMES = {
    ARGUMENT: "Argument",
    UNIQUE_SEEK: "IndexSeek",
    INDEX_SEEK: "IndexSeek",
    LABEL_SCAN: "LabelScan",
    ALL_NODES: "AllNodesScan",
}


@dataclass(frozen=True)
class Access:
    rank: int
    index_key: str | None = None

    @property
    def name(self) -> str:
        return _ACCESS_NAMES[self.rank]


def index_map(catalog) -> dict[tuple[str, str], bool]:
    if hasattr(catalog, "index_catalog"):
        catalog = catalog.index_catalog()
    return {(label, key): unique for label, key, unique in (catalog or ())}


def node_access(node: NodePattern, bound: set[str], indexes: dict[tuple[str, str], bool]) -> Access:
    if node.var is not None and node.var in bound:
        return Access(ARGUMENT)
    if node.label is None:
        return Access(ALL_NODES)
    best = None
    for key, _ in node.props:
        unique = indexes.get((node.label, key))
        if unique is None:
            continue
        rank = UNIQUE_SEEK if unique else INDEX_SEEK
        if best is None or rank < best.rank:
            best = Access(rank, key)
    return best or Access(LABEL_SCAN)


def choose_anchor(path: PathPattern, bound: set[str], indexes: dict[tuple[str, str], bool]) -> int:
    """Index of the most selective node pattern; the leftmost wins ties."""
    ranks = [node_access(n, bound, indexes).rank for n in path.nodes]
    return ranks.index(min(ranks))


def expansion_order(path: PathPattern, anchor: int) -> list[tuple[int, bool]]:
    """``(rel index, left-to-right?)`` steps: rightwards from the anchor, then leftwards."""
    k = len(path.rels)
    return [(i, True) for i in range(anchor, k)] + [(i, False) for i in range(anchor - 1, -1, -1)]


def _node_label(node: NodePattern) -> str:
    return node.var or node_text(node)


def explain(query: Query, catalog=None) -> str:
    """Human-readable plan; depends only on the query and the index catalog."""
    indexes = index_map(catalog)
    lines = []
    bound: set[str] = set()
    for n, path in enumerate(query.matches, 1):
        lines.append(f"MATCH {n}")
        shared = sorted({node.var for node in path.nodes if node.var in bound})
        for var in shared:
            lines.append(f"  Join on {var} (bound by an earlier MATCH)")
        anchor = choose_anchor(path, bound, indexes)
        node = path.nodes[anchor]
        access = node_access(node, bound, indexes)
        who = _node_label(node)
        if access.rank == ARGUMENT:
            lines.append(f"  Anchor {who}: Argument (already bound)")
        elif access.index_key is not None:
            value = dict(node.props)[access.index_key]
            kind = "unique " if access.rank == UNIQUE_SEEK else ""
            lines.append(
                f"  Anchor {who}: IndexSeek {kind}{node.label}({access.index_key} = {literal_text(value)})"
            )
        elif access.rank == LABEL_SCAN:
            lines.append(f"  Anchor {who}: LabelScan {node.label}")
        else:
            lines.append(f"  Anchor {who}: AllNodesScan")
            lines.append("  WARNING: node pattern without a label scans every node")
        rest = [k for k, _ in node.props if k != access.index_key]
        if rest and access.rank != ARGUMENT:
            lines.append(f"    Filter {who}: {', '.join(rest)}")
        for i, forward in expansion_order(path, anchor):
            rel = path.rels[i]
            src, dst = (path.nodes[i], path.nodes[i + 1]) if forward else (path.nodes[i + 1], path.nodes[i])
            step = rel_text(rel)
            if not forward:
                step = f"reverse {step}"
            extra = ""
            if rel.var_length is not None:
                extra = " (variable length)"
            lines.append(f"  Expand {_node_label(src)} {step} {_node_label(dst)}{extra}")
            if dst.label or dst.props:
                lines.append(f"    Filter {_node_label(dst)}: {node_text(dst)}")
        bound |= {node.var for node in path.nodes if node.var}
    if query.where:
        lines.append("Filter " + " AND ".join(comparison_text(c) for c in query.where))
    lines.append("Sort by bindings")
    lines.append("Project " + ", ".join(item.name for item in query.returns))
    if query.limit is not None:
        lines.append(f"Limit {query.limit}")
    return "\n".join(lines) + "\n"

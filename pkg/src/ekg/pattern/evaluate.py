"""Evaluate a parsed query against a graph.

Matching is node-homomorphic (two variables may bind the same node) and
relationship-unique: one solution never uses a relationship twice, across
all of its MATCH clauses. Rows are ordered by their bindings and only then
cut by LIMIT, so the result is deterministic.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field, replace

from ekg import tabular
from ekg.errors import QuerySyntaxError, TypeMismatch, UnboundVariable, VarLengthOverflow
from ekg.pattern.ast import Literal, NodePattern, PathPattern, PropertyRef, Query, RelPattern, Variable, operand_vars
from ekg.pattern.parser import parse
from ekg.pattern.plan import index_map, choose_anchor, expansion_order
from ekg.store import LabeledPropertyGraph, NodeRef, RelRef
from ekg.values import compare, index_key

DEFAULT_MAX_HOPS = 1000


@dataclass(frozen=True, order=True)
class NodeValue:
    ref: NodeRef

    def __str__(self) -> str:
        return f"n{self.ref}"


@dataclass(frozen=True, order=True)
class RelValue:
    ref: RelRef

    def __str__(self) -> str:
        return f"r{self.ref}"


@dataclass(frozen=True, order=True)
class PathValue:
    """The relationships matched by a variable-length pattern, in path order."""

    rels: tuple[RelRef, ...]

    def __str__(self) -> str:
        return "[" + ", ".join(f"r{r}" for r in self.rels) + "]"


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_text(self) -> str:
        return tabular.to_text(self.columns, self.rows)

    def to_csv(self) -> str:
        return tabular.to_csv(self.columns, self.rows)


def _name_anonymous(query: Query) -> tuple[list[PathPattern], list[str]]:
    """Give every pattern element a variable; names with ``#`` cannot clash with identifiers."""
    paths, order = [], []
    counter = 0

    def seen(name: str) -> None:
        if name not in order:
            order.append(name)

    for path in query.matches:
        nodes, rels = [], []
        for i, node in enumerate(path.nodes):
            if node.var is None:
                node = replace(node, var=f"#n{counter}")
                counter += 1
            seen(node.var)
            nodes.append(node)
            if i < len(path.rels):
                rel = path.rels[i]
                if rel.var is None:
                    rel = replace(rel, var=f"#r{counter}")
                    counter += 1
                seen(rel.var)
                rels.append(rel)
        paths.append(PathPattern(tuple(nodes), tuple(rels), path.pos))
    return paths, order


def check(query: Query) -> None:
    """Reject queries that reference unbound variables or reuse a relationship variable."""
    node_vars, rel_vars = set(), set()
    for path in query.matches:
        for node in path.nodes:
            if node.var is not None:
                node_vars.add(node.var)
        for rel in path.rels:
            if rel.var is None:
                continue
            line, col = rel.pos or (0, 0)
            if rel.var in rel_vars:
                raise QuerySyntaxError(f"relationship variable {rel.var!r} is bound twice", line, col)
            rel_vars.add(rel.var)
    clash = node_vars & rel_vars
    if clash:
        raise QuerySyntaxError(f"variable {sorted(clash)[0]!r} names both a node and a relationship", 1, 1)
    bound = node_vars | rel_vars
    for c in query.where:
        for name, _ in operand_vars(c.left) + operand_vars(c.right):
            if name not in bound:
                raise UnboundVariable(name)
    for item in query.returns:
        if item.var not in bound:
            raise UnboundVariable(item.var)


def _same(a, b) -> bool:
    # pattern maps never raise on variant mismatch; they just do not match
    return a is not None and index_key(a) == index_key(b)


@dataclass(frozen=True)
class _State:
    nodes: dict
    rels: dict
    used: frozenset


class _Matcher:
    def __init__(self, graph: LabeledPropertyGraph, max_hops: int) -> None:
        self.graph = graph
        self.max_hops = max_hops
        self.indexes = index_map(graph)

    # -- nodes -----------------------------------------------------------

    def _node_ok(self, pattern: NodePattern, ref: NodeRef) -> bool:
        node = self.graph.node(ref)
        if pattern.label is not None and pattern.label not in node.labels:
            return False
        return all(_same(node.properties.get(k), v) for k, v in pattern.props)

    def _bind_node(self, pattern: NodePattern, ref: NodeRef, state: _State) -> _State | None:
        have = state.nodes.get(pattern.var)
        if have is not None:
            return state if have == ref else None
        if not self._node_ok(pattern, ref):
            return None
        return _State({**state.nodes, pattern.var: ref}, state.rels, state.used)

    def _candidates(self, pattern: NodePattern, state: _State) -> list[NodeRef]:
        if pattern.var in state.nodes:
            return [state.nodes[pattern.var]]
        if pattern.label is None:
            return sorted(n.ref for n in self.graph.nodes())
        try:
            refs = self.graph.find_nodes(pattern.label, [(k, "=", v) for k, v in pattern.props])
        except TypeMismatch:
            refs = [n.ref for n in self.graph.nodes(pattern.label)]
        return sorted(refs)

    # -- relationships ---------------------------------------------------

    def _rel_ok(self, pattern: RelPattern, ref: RelRef) -> bool:
        rel = self.graph.rel(ref)
        return all(_same(rel.properties.get(k), v) for k, v in pattern.props)

    def _hops(self, pattern: RelPattern, node: NodeRef, outgoing: bool, used) -> Iterator[tuple[RelRef, NodeRef]]:
        refs = self.graph.out_rels(node, pattern.rel_type) if outgoing else self.graph.in_rels(node, pattern.rel_type)
        for r in refs:
            if r in used or not self._rel_ok(pattern, r):
                continue
            rel = self.graph.rel(r)
            yield r, (rel.target if outgoing else rel.source)

    def _walks(self, pattern: RelPattern, start: NodeRef, outgoing: bool, used) -> Iterator[tuple[tuple, NodeRef]]:
        lo, hi = pattern.var_length
        limit = self.max_hops if hi is None else min(hi, self.max_hops)
        may_overflow = hi is None or hi > self.max_hops
        stack = [(start, ())]
        while stack:
            node, rels = stack.pop()
            if len(rels) >= lo:
                yield rels, node
            steps = [(r, nxt) for r, nxt in self._hops(pattern, node, outgoing, used) if r not in rels]
            if len(rels) == limit:
                if steps and may_overflow:
                    raise VarLengthOverflow(self.max_hops)
                continue
            for r, nxt in reversed(steps):
                stack.append((nxt, rels + (r,)))

    def _expand(self, path: PathPattern, steps, k: int, state: _State) -> Iterator[_State]:
        if k == len(steps):
            yield state
            return
        i, forward = steps[k]
        pattern = path.rels[i]
        here, there = (path.nodes[i], path.nodes[i + 1]) if forward else (path.nodes[i + 1], path.nodes[i])
        outgoing = forward == (pattern.direction == "out")
        start = state.nodes[here.var]
        if pattern.var_length is None:
            for r, other in self._hops(pattern, start, outgoing, state.used):
                nxt = self._bind_node(there, other, state)
                if nxt is None:
                    continue
                nxt = _State(nxt.nodes, {**nxt.rels, pattern.var: r}, nxt.used | {r})
                yield from self._expand(path, steps, k + 1, nxt)
        else:
            for rels, other in self._walks(pattern, start, outgoing, state.used):
                nxt = self._bind_node(there, other, state)
                if nxt is None:
                    continue
                ordered = rels if forward else tuple(reversed(rels))
                nxt = _State(nxt.nodes, {**nxt.rels, pattern.var: ordered}, nxt.used | set(rels))
                yield from self._expand(path, steps, k + 1, nxt)

    def match_path(self, path: PathPattern, state: _State) -> Iterator[_State]:
        anchor = choose_anchor(path, set(state.nodes), self.indexes)
        pattern = path.nodes[anchor]
        steps = expansion_order(path, anchor)
        for ref in self._candidates(pattern, state):
            nxt = self._bind_node(pattern, ref, state)
            if nxt is not None:
                yield from self._expand(path, steps, 0, nxt)

    def solutions(self, paths: list[PathPattern]) -> Iterator[_State]:
        def go(k: int, state: _State) -> Iterator[_State]:
            if k == len(paths):
                yield state
                return
            for nxt in self.match_path(paths[k], state):
                yield from go(k + 1, nxt)

        yield from go(0, _State({}, {}, frozenset()))


def _value(graph: LabeledPropertyGraph, state: _State, var: str):
    if var in state.nodes:
        return NodeValue(state.nodes[var])
    bound = state.rels[var]
    return PathValue(bound) if isinstance(bound, tuple) else RelValue(bound)


def _property(graph: LabeledPropertyGraph, state: _State, var: str, key: str):
    if var in state.nodes:
        return graph.node(state.nodes[var]).properties.get(key)
    bound = state.rels[var]
    if isinstance(bound, tuple):
        return None
    return graph.rel(bound).properties.get(key)


def _operand(graph, state, operand):
    if isinstance(operand, Literal):
        return operand.value
    if isinstance(operand, PropertyRef):
        return _property(graph, state, operand.var, operand.key)
    assert isinstance(operand, Variable)
    return _value(graph, state, operand.name)


_REFS = (NodeValue, RelValue, PathValue)


def _holds(left, op: str, right) -> bool:
    if left is None or right is None:
        return False
    if isinstance(left, _REFS) or isinstance(right, _REFS):
        if type(left) is not type(right):
            raise TypeMismatch(left, right)
        return {
            "=": left == right,
            "<>": left != right,
            "<": left < right,
            "<=": left <= right,
            ">": left > right,
            ">=": left >= right,
        }[op]
    return compare(left, op, right)


def _sort_key(state: _State, order: list[str]) -> tuple:
    key = []
    for var in order:
        if var in state.nodes:
            key.append((state.nodes[var],))
        else:
            bound = state.rels[var]
            key.append(bound if isinstance(bound, tuple) else (bound,))
    return tuple(key)


def evaluate(graph: LabeledPropertyGraph, query: Query | str, *, max_hops: int = DEFAULT_MAX_HOPS) -> ResultTable:
    """All rows matching ``query``; variable-length patterns stop at ``max_hops`` hops.

    Raises :class:`UnboundVariable` for unknown variables and
    :class:`VarLengthOverflow` when an open-ended pattern could go past the cap.
    """
    if isinstance(query, str):
        query = parse(query)
    check(query)
    paths, order = _name_anonymous(query)
    matcher = _Matcher(graph, max_hops)
    found = []
    for state in matcher.solutions(paths):
        if all(_holds(_operand(graph, state, c.left), c.op, _operand(graph, state, c.right)) for c in query.where):
            found.append(state)
    found.sort(key=lambda s: _sort_key(s, order))
    if query.limit is not None:
        found = found[: query.limit]
    table = ResultTable(tuple(item.name for item in query.returns))
    for state in found:
        table.rows.append(
            tuple(
                _value(graph, state, item.var) if item.key is None else _property(graph, state, item.var, item.key)
                for item in query.returns
            )
        )
    return table

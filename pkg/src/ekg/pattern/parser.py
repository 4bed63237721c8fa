"""Tokenizer and recursive-descent parser for pattern queries.

Grammar::

    query       := matchClause+ whereClause? returnClause limitClause?
    matchClause := MATCH pathPattern
    pathPattern := nodePat (relPat nodePat)*
    nodePat     := "(" ident? (":" ident)? propMap? ")"
    relPat      := "-[" ident? ":" ident varLen? propMap? "]->"
                 | "<-[" ident? ":" ident varLen? propMap? "]-"
    varLen      := "*" (int ".." int)?
    propMap     := "{" ident ":" literal ("," ident ":" literal)* "}"
    whereClause := WHERE comparison (AND comparison)*
    comparison  := operand op operand
    operand     := ident "." ident | ident | literal
    returnClause:= RETURN retItem ("," retItem)*
    limitClause := LIMIT int

Keywords are case-insensitive and reserved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

from ekg.errors import QuerySyntaxError
from ekg.pattern.ast import (
    Comparison,
    Literal,
    NodePattern,
    Operand,
    PathPattern,
    PropertyRef,
    Query,
    RelPattern,
    ReturnItem,
    Variable,
)

KEYWORDS = frozenset({"MATCH", "WHERE", "AND", "RETURN", "LIMIT", "TRUE", "FALSE"})
COMPARISON_OPS = ("<>", "<=", ">=", "=", "<", ">")

# longest alternatives first
_PUNCT = ("<-[", "]->", "-[", "]-", "..", "<>", "<=", ">=", "(", ")", "{", "}", ",", ":", ".", "*", "=", "<", ">")
_NUMBER = re.compile(r"-?\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"'}


@dataclass(frozen=True)
class Token:
    kind: str  # keyword name, IDENT, STRING, INT, FLOAT, EOF, or the punctuation itself
    text: str
    value: Any
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    i, line, line_start = 0, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        col = i - line_start + 1
        if ch == "\n":
            i += 1
            line, line_start = line + 1, i
            continue
        if ch.isspace():
            i += 1
            continue
        if ch in "'\"":
            j, out = i + 1, []
            while True:
                if j >= n or text[j] == "\n":
                    raise QuerySyntaxError("unterminated string literal", line, col)
                c = text[j]
                if c == ch:
                    break
                if c == "\\":
                    if j + 1 >= n:
                        raise QuerySyntaxError("unterminated string literal", line, col)
                    esc = text[j + 1]
                    if esc not in _ESCAPES:
                        raise QuerySyntaxError(f"unknown escape \\{esc}", line, j - line_start + 1)
                    out.append(_ESCAPES[esc])
                    j += 2
                    continue
                out.append(c)
                j += 1
            tokens.append(Token("STRING", text[i : j + 1], "".join(out), line, col))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER.match(text, i)
            raw = m.group(0)
            if m.group(1) or m.group(2):
                tokens.append(Token("FLOAT", raw, float(raw), line, col))
            else:
                tokens.append(Token("INT", raw, int(raw), line, col))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group(0)
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(Token(upper, word, upper == "TRUE" if upper in ("TRUE", "FALSE") else None, line, col))
            else:
                tokens.append(Token("IDENT", word, word, line, col))
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token(p, p, None, line, col))
                i += len(p)
                break
        else:
            raise QuerySyntaxError(f"unexpected character {ch!r}", line, col)
    col = i - line_start + 1
    tokens.append(Token("EOF", "", None, line, col))
    return tokens


_LITERAL_KINDS = frozenset({"STRING", "INT", "FLOAT", "TRUE", "FALSE"})


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def at(self, *kinds: str) -> bool:
        return self.tok.kind in kinds

    def fail(self, expected) -> QuerySyntaxError:
        t = self.tok
        got = "end of input" if t.kind == "EOF" else repr(t.text)
        return QuerySyntaxError(f"unexpected {got}", t.line, t.column, frozenset(expected))

    def take(self, *kinds: str) -> Token:
        if not self.at(*kinds):
            raise self.fail(kinds)
        t = self.tok
        self.i += 1
        return t

    def maybe(self, kind: str) -> Token | None:
        return self.take(kind) if self.at(kind) else None

    # -- grammar ---------------------------------------------------------

    def query(self) -> Query:
        matches = [self.match_clause()]
        while self.at("MATCH"):
            matches.append(self.match_clause())
        where = ()
        if self.at("WHERE"):
            where = self.where_clause()
        elif not self.at("RETURN"):
            raise self.fail({"MATCH", "WHERE", "RETURN", "-[", "<-["})
        returns = self.return_clause()
        limit = None
        if self.maybe("LIMIT"):
            t = self.tok
            limit = self.take("INT").value
            if limit < 1:
                raise QuerySyntaxError("LIMIT must be a positive integer", t.line, t.column, frozenset({"INT"}))
        if not self.at("EOF"):
            raise self.fail({"EOF"} if limit is not None else {"LIMIT", ",", "EOF"})
        return Query(tuple(matches), tuple(where), tuple(returns), limit)

    def match_clause(self) -> PathPattern:
        t = self.take("MATCH")
        nodes, rels = [self.node_pattern()], []
        while self.at("-[", "<-["):
            rels.append(self.rel_pattern())
            nodes.append(self.node_pattern())
        return PathPattern(tuple(nodes), tuple(rels), (t.line, t.column))

    def node_pattern(self) -> NodePattern:
        t = self.take("(")
        var = label = None
        if self.at("IDENT"):
            var = self.take("IDENT").value
        if self.maybe(":"):
            label = self.take("IDENT").value
        props = ()
        if self.at("{"):
            props = self.prop_map()
        if not self.at(")"):
            expected = {")", "{"}
            if label is None:
                expected.add(":")
                if var is None:
                    expected.add("IDENT")
            raise self.fail(expected)
        self.take(")")
        return NodePattern(var, label, props, (t.line, t.column))

    def rel_pattern(self) -> RelPattern:
        t = self.take("-[", "<-[")
        direction = "out" if t.kind == "-[" else "in"
        var = None
        if self.at("IDENT"):
            var = self.take("IDENT").value
        if not self.at(":"):
            raise self.fail({":"} if var is not None else {":", "IDENT"})
        self.take(":")
        rel_type = self.take("IDENT").value
        var_length = None
        if self.at("*"):
            var_length = self.var_length()
        props = ()
        if self.at("{"):
            props = self.prop_map()
        close = "]->" if direction == "out" else "]-"
        if not self.at(close):
            expected = {close, "{"}
            if var_length is None:
                expected.add("*")
            raise self.fail(expected)
        self.take(close)
        return RelPattern(rel_type, var, direction, var_length, props, (t.line, t.column))

    def var_length(self) -> tuple[int, int | None]:
        self.take("*")
        if not self.at("INT"):
            return (1, None)
        lo_tok = self.take("INT")
        self.take("..")
        hi_tok = self.take("INT")
        lo, hi = lo_tok.value, hi_tok.value
        if lo < 1:
            raise QuerySyntaxError("variable-length minimum must be at least 1", lo_tok.line, lo_tok.column)
        if hi < lo:
            raise QuerySyntaxError("variable-length maximum is below the minimum", hi_tok.line, hi_tok.column)
        return (lo, hi)

    def prop_map(self):
        self.take("{")
        items = [self.prop_item()]
        seen = {items[0][0]}
        while self.maybe(","):
            t = self.tok
            key, value = self.prop_item()
            if key in seen:
                raise QuerySyntaxError(f"duplicate property {key!r} in map", t.line, t.column)
            seen.add(key)
            items.append((key, value))
        if not self.at("}"):
            raise self.fail({",", "}"})
        self.take("}")
        return tuple(items)

    def prop_item(self):
        key = self.take("IDENT").value
        self.take(":")
        return key, self.literal()

    def literal(self):
        return self.take(*_LITERAL_KINDS).value

    def where_clause(self) -> list[Comparison]:
        self.take("WHERE")
        out = [self.comparison()]
        while self.maybe("AND"):
            out.append(self.comparison())
        if not self.at("RETURN"):
            raise self.fail({"AND", "RETURN"})
        return out

    def comparison(self) -> Comparison:
        left = self.operand()
        op = self.take(*COMPARISON_OPS).kind
        right = self.operand()
        return Comparison(left, op, right)

    def operand(self) -> Operand:
        if self.at("IDENT"):
            t = self.take("IDENT")
            if self.maybe("."):
                return PropertyRef(t.value, self.take("IDENT").value, (t.line, t.column))
            return Variable(t.value, (t.line, t.column))
        if self.at(*_LITERAL_KINDS):
            return Literal(self.literal())
        raise self.fail({"IDENT"} | _LITERAL_KINDS)

    def return_clause(self) -> list[ReturnItem]:
        self.take("RETURN")
        items = [self.return_item()]
        while self.maybe(","):
            items.append(self.return_item())
        return items

    def return_item(self) -> ReturnItem:
        t = self.take("IDENT")
        key = self.take("IDENT").value if self.maybe(".") else None
        return ReturnItem(t.value, key, (t.line, t.column))


def parse(text: str) -> Query:
    """Parse query text; raises :class:`QuerySyntaxError` with position and expected tokens."""
    return _Parser(text).query()

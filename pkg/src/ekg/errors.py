"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class EKGError(Exception):
    """Base class for every error raised by this package."""


class GraphError(EKGError):
    pass


class EmptyLabels(GraphError):
    def __init__(self) -> None:
        super().__init__("a node needs at least one label")


class UniquenessViolation(GraphError):
    def __init__(self, label: str, key: str, values: list) -> None:
        self.label = label
        self.key = key
        self.values = list(values)
        shown = ", ".join(repr(v) for v in self.values)
        super().__init__(f"uniqueness of {label}.{key} violated by {shown}")


class DanglingEndpoint(GraphError):
    def __init__(self, ref: int) -> None:
        self.ref = ref
        super().__init__(f"relationship endpoint {ref} does not exist")


class UnknownNode(GraphError):
    def __init__(self, ref: int) -> None:
        self.ref = ref
        super().__init__(f"unknown node {ref}")


class UnknownRelationship(GraphError):
    def __init__(self, ref: int) -> None:
        self.ref = ref
        super().__init__(f"unknown relationship {ref}")


class TypeMismatch(EKGError, TypeError):
    def __init__(self, left: object, right: object) -> None:
        self.left = left
        self.right = right
        super().__init__(
            f"cannot compare {type(left).__name__} value {left!r} "
            f"with {type(right).__name__} value {right!r}"
        )


class SnapshotError(EKGError):
    pass


# ingest


class IngestError(EKGError):
    pass


class MissingColumn(IngestError):
    def __init__(self, column: str) -> None:
        self.column = column
        super().__init__(f"mandatory column {column!r} missing from header")


class UnparseableTimestamp(IngestError):
    def __init__(self, row_index: int, value: str, fmt: str) -> None:
        self.row_index = row_index
        self.value = value
        super().__init__(f"row {row_index}: cannot parse timestamp {value!r} with format {fmt!r}")


class MalformedCsv(IngestError):
    def __init__(self, row_index: int, detail: str) -> None:
        self.row_index = row_index
        super().__init__(f"row {row_index}: {detail}")


class NonEmptyGraph(IngestError):
    def __init__(self) -> None:
        super().__init__("graph already contains Event nodes")


class UnknownColumn(IngestError):
    def __init__(self, column: str) -> None:
        self.column = column
        super().__init__(f"unknown column {column!r}")


class UnknownEntityType(EKGError):
    def __init__(self, entity_type: str) -> None:
        self.entity_type = entity_type
        super().__init__(f"no entities of type {entity_type!r}")


class UnknownEntity(EKGError):
    def __init__(self, uid: str) -> None:
        self.uid = uid
        super().__init__(f"no entity with uID {uid!r}")


class UnknownClassType(EKGError):
    def __init__(self, class_type: str) -> None:
        self.class_type = class_type
        super().__init__(f"no event classes of type {class_type!r}")


class ConfigError(EKGError):
    pass


# query


class BrokenChain(EKGError):
    def __init__(self, uid: str, detail: str) -> None:
        self.uid = uid
        super().__init__(f"directly-follows chain of {uid!r} is not a simple path: {detail}")


# pattern language


class QuerySyntaxError(EKGError):
    """Malformed pattern-query text.

    ``line`` and ``column`` are 1-based; ``expected`` is the set of tokens
    that would have been accepted at that position.
    """

    def __init__(self, message: str, line: int, column: int, expected: frozenset[str] = frozenset()):
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        self.detail = message
        where = f"line {line}, column {column}"
        if self.expected:
            message = f"{message}; expected one of: {', '.join(sorted(self.expected))}"
        super().__init__(f"{where}: {message}")


class UnboundVariable(EKGError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"variable {name!r} is not bound by any MATCH clause")


class VarLengthOverflow(EKGError):
    def __init__(self, cap: int) -> None:
        self.cap = cap
        super().__init__(f"variable-length pattern exceeds the hop cap of {cap}")


# export / pipeline


class UnknownSelection(EKGError):
    pass


class StageError(EKGError):
    def __init__(self, stage: str, cause: BaseException) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {cause}")

"""Property values and the comparison rules between them.

A property value is one of: ``str``, ``int``, ``float``, ``bool``,
:class:`Timestamp` or a tuple of ``str`` (list of text). Values of different
variants never compare; :func:`compare` raises :class:`TypeMismatch` instead
of coercing.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Any, Callable, Union

from ekg.errors import TypeMismatch

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True, order=True)
class Timestamp:
    """A point in time as epoch milliseconds UTC."""

    millis: int

    @classmethod
    def from_datetime(cls, dt: datetime) -> Timestamp:
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        delta = dt - _EPOCH
        return cls((delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000)

    def to_datetime(self) -> datetime:
        return _EPOCH + timedelta(milliseconds=self.millis)

    def isoformat(self) -> str:
        dt = self.to_datetime()
        if self.millis % 1000:
            text = dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{self.millis % 1000:03d}"
        else:
            text = dt.strftime("%Y-%m-%dT%H:%M:%S")
        return text + "Z"

    def __str__(self) -> str:
        return self.isoformat()


PropertyValue = Union[str, int, float, bool, Timestamp, tuple]


def variant(value: Any) -> str:
    """Name of the variant of ``value``; raises ``TypeError`` for unsupported values."""
    # bool before int: bool is an int subclass
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "text"
    if isinstance(value, Timestamp):
        return "timestamp"
    if isinstance(value, (tuple, list)) and all(isinstance(v, str) for v in value):
        return "list"
    raise TypeError(f"unsupported property value {value!r} ({type(value).__name__})")


def normalize(value: Any) -> PropertyValue:
    """Coerce list-of-text to a tuple and validate the variant."""
    if isinstance(value, list):
        value = tuple(value)
    variant(value)
    return value


def index_key(value: PropertyValue) -> tuple[str, PropertyValue]:
    """Hashable key that keeps variants apart (``1``, ``1.0`` and ``True`` differ)."""
    return (variant(value), value)


_OPS: dict[str, Callable[[Any, Any], bool]] = {
    "=": operator.eq,
    "<>": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

COMPARATORS = frozenset(_OPS)


def compare(left: PropertyValue, op: str, right: PropertyValue) -> bool:
    if op not in _OPS:
        raise ValueError(f"unknown comparator {op!r}")
    if variant(left) != variant(right):
        raise TypeMismatch(left, right)
    return _OPS[op](left, right)


def format_duration(millis: int) -> str:
    """ISO-8601 duration, e.g. ``P1D`` or ``PT4H46M``."""
    if millis < 0:
        return "-" + format_duration(-millis)
    days, rest = divmod(millis, 86_400_000)
    hours, rest = divmod(rest, 3_600_000)
    minutes, rest = divmod(rest, 60_000)
    seconds, ms = divmod(rest, 1000)
    out = "P"
    if days:
        out += f"{days}D"
    time = ""
    if hours:
        time += f"{hours}H"
    if minutes:
        time += f"{minutes}M"
    if seconds or ms:
        time += f"{seconds}.{ms:03d}S" if ms else f"{seconds}S"
    if time:
        out += "T" + time
    if out == "P":
        out = "PT0S"
    return out


def render(value: Any) -> str:
    """Plain-text rendering used by the text/CSV writers."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Timestamp):
        return value.isoformat()
    if isinstance(value, tuple):
        return "[" + ", ".join(render(v) for v in value) + "]"
    return str(value)

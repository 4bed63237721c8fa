"""Aligned-text and CSV writers shared by query results and the CLI."""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence

from ekg.values import render

FORMATS = ("text", "csv")


def to_csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([render(v) for v in row])
    return buf.getvalue()


def to_text(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(columns)] + [[render(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"


def write(columns: Sequence[str], rows: Sequence[Sequence], fmt: str = "text") -> str:
    if fmt == "csv":
        return to_csv(columns, rows)
    if fmt == "text":
        return to_text(columns, rows)
    raise ValueError(f"unknown format {fmt!r}; use one of {', '.join(FORMATS)}")

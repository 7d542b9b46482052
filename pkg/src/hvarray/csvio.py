"""Deterministic CSV emit/parse for experiment traces.

The characterisation scripts diff runs byte-for-byte, so formatting is
pinned: floats as %.9e, ints bare, empty cell for missing.  parse() is
the exact inverse on anything emit() produced.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from .errors import ConfigurationError

Cell = float | int | str | None


@dataclass(frozen=True)
class CsvTrace:
    header: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self):
        width = len(self.header)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ConfigurationError(
                    f"row {i} has {len(row)} cells, header has {width}"
                )

    def column(self, name: str) -> tuple[Cell, ...]:
        try:
            k = self.header.index(name)
        except ValueError:
            raise ConfigurationError(f"no column named {name!r}") from None
        return tuple(row[k] for row in self.rows)


def _format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        # bools are ints in Python; pin the spelling
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9e}"
    return str(value)


def emit(trace: CsvTrace) -> str:
    out = io.StringIO()
    out.write(",".join(trace.header) + "\n")
    for row in trace.rows:
        out.write(",".join(_format_cell(c) for c in row) + "\n")
    return out.getvalue()


def _parse_cell(text: str) -> Cell:
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse(text: str) -> CsvTrace:
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise ConfigurationError("empty CSV")
    header = tuple(lines[0].split(","))
    rows = tuple(tuple(_parse_cell(c) for c in ln.split(",")) for ln in lines[1:])
    return CsvTrace(header, rows)


def write_file(path: str, trace: CsvTrace) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(emit(trace))


def read_file(path: str) -> CsvTrace:
    with open(path, "r", newline="") as fh:
        return parse(fh.read())

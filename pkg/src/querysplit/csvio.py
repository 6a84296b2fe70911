"""CSV fragment descriptions and typed cell handling.

All dataset and fragment files share one convention: ';'-delimited by
default, mandatory header row, empty fields meaning NULL.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import HeaderMismatch, IoFailure, RowArityMismatch


@dataclass(frozen=True)
class CsvSpec:
    path: str
    table: str
    columns: tuple[str, ...]
    delimiter: str = ";"
    has_header: bool = True
    column_types: tuple[str, ...] = field(default=())  # parallel to columns when known

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "table": self.table,
            "columns": list(self.columns),
            "delimiter": self.delimiter,
            "has_header": self.has_header,
            "column_types": list(self.column_types),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CsvSpec":
        return cls(
            path=data["path"],
            table=data["table"],
            columns=tuple(data["columns"]),
            delimiter=data.get("delimiter", ";"),
            has_header=data.get("has_header", True),
            column_types=tuple(data.get("column_types", ())),
        )


def parse_cell(text: str, type_tag: str):
    """Convert a raw cell to a typed value; empty means NULL (None)."""
    if text == "":
        return None
    if type_tag == "int":
        return int(text)
    if type_tag == "float":
        return float(text)
    return text


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_header(spec: CsvSpec) -> list[str]:
    try:
        with open(spec.path, newline="", encoding="utf-8") as fh:
            row = next(csv.reader(fh, delimiter=spec.delimiter), None)
    except OSError as exc:
        raise IoFailure(f"cannot read {spec.path}: {exc}") from exc
    if row is None:
        raise HeaderMismatch(f"{spec.path}: file is empty, expected a header row")
    return row


def check_header(spec: CsvSpec) -> None:
    """Header must match spec.columns exactly (case-insensitive, same order)."""
    header = read_header(spec)
    if [h.lower() for h in header] != [c.lower() for c in spec.columns]:
        raise HeaderMismatch(
            f"{spec.path}: header {header!r} does not match expected columns {list(spec.columns)!r}"
        )


def iter_raw_rows(spec: CsvSpec) -> Iterator[tuple[int, list[str]]]:
    """Yield (1-based data row number, raw cells), enforcing row arity."""
    arity = len(spec.columns)
    try:
        with open(spec.path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=spec.delimiter)
            if spec.has_header:
                next(reader, None)
            for rowno, row in enumerate(reader, start=1):
                if len(row) != arity:
                    raise RowArityMismatch(
                        f"{spec.path}: row {rowno} has {len(row)} fields, expected {arity}", row=rowno
                    )
                yield rowno, row
    except OSError as exc:
        raise IoFailure(f"cannot read {spec.path}: {exc}") from exc


def write_csv(spec: CsvSpec, rows: Iterable[Iterable]) -> None:
    try:
        os.makedirs(os.path.dirname(os.path.abspath(spec.path)), exist_ok=True)
        with open(spec.path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, delimiter=spec.delimiter)
            if spec.has_header:
                writer.writerow(spec.columns)
            for row in rows:
                writer.writerow([format_cell(v) for v in row])
    except OSError as exc:
        raise IoFailure(f"cannot write {spec.path}: {exc}") from exc


def file_size(spec: CsvSpec) -> int:
    try:
        return os.path.getsize(spec.path)
    except OSError as exc:
        raise IoFailure(f"cannot stat {spec.path}: {exc}") from exc

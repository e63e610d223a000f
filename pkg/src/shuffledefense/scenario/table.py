"""Result tables and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

from shuffledefense.analytics import Infeasible


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name: str) -> list[Any]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def format_value(value: Any) -> str:
    """Locale-independent text with 12 significant digits for reals."""
    if value is None:
        return ""
    if isinstance(value, Infeasible):
        return "infeasible"
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x.is_integer() and abs(x) < 1e12:
            return str(int(x))
        return f"{x:.12g}"
    return str(value)


def _lines(table: ResultTable) -> Iterable[list[str]]:
    yield list(table.columns)
    for row in table.rows:
        yield [format_value(v) for v in row]


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(_lines(table))
    return buf.getvalue()


def emit_csv(table: ResultTable, destination) -> None:
    """Write ``table`` to a path or to an open text stream."""
    text = to_csv(table)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {destination}: {exc.strerror}") from exc


def read_csv(text: str) -> ResultTable:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return ResultTable([])
    return ResultTable(rows[0], rows[1:])

"""Result tables persisted as CSV or JSON.

Floats are written with ``repr`` (shortest round-trip form), so a table
rebuilt from the same numbers is byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

FORMATS = ("csv", "json")


@dataclass
class Table:
    """Named rows with a fixed column order."""

    name: str
    columns: tuple[str, ...]
    rows: list[dict[str, Any]] = field(default_factory=list)

    def add(self, **row: Any) -> None:
        missing = set(self.columns) - set(row)
        extra = set(row) - set(self.columns)
        if missing or extra:
            raise KeyError(f"table {self.name}: missing {sorted(missing)}, unexpected {sorted(extra)}")
        self.rows.append(row)

    def extend(self, other: "Table") -> None:
        if other.columns != self.columns:
            raise KeyError(f"cannot merge {other.name} into {self.name}: columns differ")
        self.rows.extend(other.rows)

    def column(self, name: str) -> list[Any]:
        return [r[name] for r in self.rows]


def _plain(v: Any) -> Any:
    """numpy scalars to Python scalars, so ``repr`` gives bare numbers."""
    if isinstance(v, np.generic):
        return v.item()
    return v


def _cell(v: Any) -> str:
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _json_value(v: Any) -> Any:
    v = _plain(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_table(table: Table, directory: "str | Path", fmt: str = "csv") -> Path:
    """Write ``table`` to ``directory/<name>.<fmt>`` and return the path."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{table.name}.{fmt}"
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(table.columns)
            for row in table.rows:
                w.writerow([_cell(row[c]) for c in table.columns])
    else:
        payload = {"columns": list(table.columns),
                   "rows": [{c: _json_value(row[c]) for c in table.columns} for row in table.rows]}
        path.write_text(json.dumps(payload, indent=1) + "\n")
    return path


def _parse(v: str) -> Any:
    if v == "":
        return None
    if v in ("true", "false"):
        return v == "true"
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def read_table(path: "str | Path") -> Table:
    """Read a table written by :func:`write_table`; numbers come back as int or float."""
    p = Path(path)
    if p.suffix == ".json":
        payload = json.loads(p.read_text())
        t = Table(p.stem, tuple(payload["columns"]))
        for row in payload["rows"]:
            t.rows.append({c: (float("nan") if row[c] is None else row[c]) for c in t.columns})
        return t
    with p.open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        t = Table(p.stem, header)
        for rec in reader:
            t.rows.append({c: _parse(v) for c, v in zip(header, rec)})
    return t


def find_tables(directory: "str | Path", names: Sequence[str] | None = None) -> dict[str, Path]:
    """Map table name to file for every ``*.csv``/``*.json`` table in ``directory``."""
    d = Path(directory)
    out: dict[str, Path] = {}
    for p in sorted(d.glob("*.csv")) + sorted(d.glob("*.json")):
        if p.name == "manifest.json":
            continue
        if names is None or p.stem in names:
            out.setdefault(p.stem, p)
    return out

"""CSV/JSON input and output for series, reports and tables."""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Literal

import numpy as np

from .ar import TimeSeries

SCHEMA_VERSION = 1

InputKind = Literal["price", "level", "return"]


class InputError(ValueError):
    """Malformed or invalid input (CLI exit code 2)."""


def _is_number(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def read_series_csv(path: str | Path, column: str | int | None = None) -> TimeSeries:
    """Read one numeric column from a CSV file.

    Accepts an optional header row and an optional leading date/label column.
    Without ``column`` the last column is used.  Blank lines are skipped.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [(i, row) for i, row in enumerate(csv.reader(fh), start=1) if row and any(c.strip() for c in row)]
    if not rows:
        raise InputError(f"{path}: no data rows")
    header = None
    if not _is_number(rows[0][1][-1].strip()):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if isinstance(column, str):
        if header is None or column not in header:
            raise InputError(f"{path}: column {column!r} not found")
        idx = header.index(column)
    elif isinstance(column, int):
        idx = column
    else:
        idx = -1
    values = []
    for lineno, row in rows:
        try:
            cell = row[idx].strip()
        except IndexError:
            raise InputError(f"{path}:{lineno}: missing column") from None
        if not _is_number(cell):
            raise InputError(f"{path}:{lineno}: not a finite number: {cell!r}")
        values.append(float(cell))
    if not values:
        raise InputError(f"{path}: no data rows")
    return TimeSeries(np.array(values), label=path.stem)


def write_series_csv(path: str | Path, columns: dict[str, Iterable[float]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.asarray(list(v) if not isinstance(v, np.ndarray) else v, dtype=float) for v in columns.values()]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj: dict, path: str | Path | None = None) -> str:
    """Serialize with ``schema_version``; non-finite floats become ``null``."""
    payload = {"schema_version": SCHEMA_VERSION, **_jsonable(obj)}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return text


def to_log_returns(prices: TimeSeries) -> TimeSeries:
    v = prices.values
    if np.any(v <= 0):
        raise InputError("log-returns need strictly positive prices")
    return TimeSeries(np.diff(np.log(v)), prices.label)


def load_nasdaq() -> tuple[list[str], TimeSeries]:
    """Bundled NASDAQ Composite daily adjusted closes from 2010-03-04 on.

    The snapshot stops at 2018-12-31 (2223 trading days).
    """
    ref = resources.files("arnig") / "data" / "nasdaq_composite.csv"
    with ref.open("r", newline="") as fh:
        rows = list(csv.DictReader(fh))
    dates = [r["date"] for r in rows]
    return dates, TimeSeries(np.array([float(r["adj_close"]) for r in rows]), "nasdaq_composite")

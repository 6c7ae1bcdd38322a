"""CSV readers with schema validation.

The input contracts are the convergence and paths artifacts written by
the aitsahalia CLI.  Required columns must all be present (extra
columns are ignored with a warning, for forward compatibility); a file
with a valid header but no data rows raises EmptyInput.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CONVERGENCE_COLUMNS",
    "PATHS_COLUMNS",
    "SchemaMismatch",
    "EmptyInput",
    "ConvergenceTable",
    "PathsTable",
    "read_convergence",
    "read_paths",
]

CONVERGENCE_COLUMNS = ("scheme", "h", "e_h", "seconds", "violations")
PATHS_COLUMNS = ("path", "t", "y", "scheme", "status")


class SchemaMismatch(ValueError):
    """Input CSV header does not carry the required columns."""


class EmptyInput(ValueError):
    """Input CSV has a header but no data rows."""


@dataclass(frozen=True)
class ConvergenceTable:
    """Per-scheme step sizes and strong errors, in file order."""

    source: str
    schemes: tuple[str, ...]
    h: dict[str, np.ndarray]
    e_h: dict[str, np.ndarray]


@dataclass(frozen=True)
class PathsTable:
    """Per-path time grids and states; status is the path's final-row status."""

    source: str
    path_ids: tuple[int, ...]
    times: dict[int, np.ndarray]
    states: dict[int, np.ndarray]
    statuses: dict[int, str]


def _read_rows(path: str, required: tuple[str, ...]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or ()
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaMismatch(f"{path}: missing column {missing[0]!r} (header {list(header)})")
        extras = [c for c in header if c not in required]
        if extras:
            warnings.warn(f"{path}: ignoring extra columns {extras}", stacklevel=3)
        rows = list(reader)
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    return rows


def read_convergence(path: str) -> ConvergenceTable:
    """Parse a convergence CSV; rows with e_h <= 0 are dropped with a warning
    (they carry no information on log axes)."""
    rows = _read_rows(path, CONVERGENCE_COLUMNS)
    h: dict[str, list[float]] = {}
    e: dict[str, list[float]] = {}
    dropped = 0
    for row in rows:
        scheme = row["scheme"]
        h_val, e_val = float(row["h"]), float(row["e_h"])
        if not e_val > 0.0:
            dropped += 1
            continue
        h.setdefault(scheme, []).append(h_val)
        e.setdefault(scheme, []).append(e_val)
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} rows with e_h <= 0", stacklevel=2)
    if not h:
        raise EmptyInput(f"{path}: no rows with positive e_h")
    return ConvergenceTable(
        source=path,
        schemes=tuple(h),
        h={s: np.asarray(v) for s, v in h.items()},
        e_h={s: np.asarray(v) for s, v in e.items()},
    )


def read_paths(path: str) -> PathsTable:
    rows = _read_rows(path, PATHS_COLUMNS)
    times: dict[int, list[float]] = {}
    states: dict[int, list[float]] = {}
    statuses: dict[int, str] = {}
    for row in rows:
        pid = int(row["path"])
        times.setdefault(pid, []).append(float(row["t"]))
        states.setdefault(pid, []).append(float(row["y"]))
        statuses[pid] = row["status"]
    return PathsTable(
        source=path,
        path_ids=tuple(times),
        times={p: np.asarray(v) for p, v in times.items()},
        states={p: np.asarray(v) for p, v in states.items()},
        statuses=statuses,
    )

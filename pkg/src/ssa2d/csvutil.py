"""Tiny CSV helpers shared by the exporters; full round-trip float formatting."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def full(x: float) -> str:
    """Shortest decimal string that round-trips the float exactly."""
    return repr(float(x))


def write_grid_csv(path, grid: np.ndarray) -> None:
    """One CSV row per grid row, full precision, no header."""
    arr = np.asarray(grid, dtype=float)
    lines = [",".join(full(x) for x in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n")


def write_rows_csv(path, header: str, rows, trailer: str | None = None) -> None:
    """Header line, one comma-joined line per row, optional trailer line."""
    lines = [header]
    for row in rows:
        lines.append(",".join(str(item) for item in row))
    if trailer is not None:
        lines.append(trailer)
    Path(path).write_text("\n".join(lines) + "\n")

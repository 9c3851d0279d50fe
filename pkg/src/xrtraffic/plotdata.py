"""Self-describing comma-separated data files for plotting.

::

    # command: xrtraffic stats trace.csv -o out --windows 1,6
    # version: 0.1.0
    # param windows: 1,6
    # generated: 2026-10-16T12:00:00+00:00
    window,index,rate_bps
    1,0,30000000

The ``generated`` line is optional so reruns can be byte-identical.
"""
from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import ParseError
from .ingest import format_number


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, float, np.integer, np.floating)):
        v = float(value)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format_number(v)
    if value is None:
        return ""
    text = str(value)
    if "," in text or "\n" in text:
        raise ValueError(f"cell text may not contain ',' or newlines: {text!r}")
    return text


def write_plot_data(path, columns: Sequence[str], rows: Iterable[Sequence], command: str,
                    params: Mapping[str, object] | None = None, timestamp: bool = True) -> Path:
    lines = [f"# command: {command}", f"# version: {__version__}"]
    for key, value in (params or {}).items():
        lines.append(f"# param {key}: {value}")
    if timestamp:
        lines.append(f"# generated: {datetime.now(timezone.utc).isoformat(timespec='seconds')}")
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        lines.append(",".join(_cell(v) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def read_plot_data(path):
    """Returns ``(header, columns, rows)``; numeric cells become floats, others stay text."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition(":")
        header[key.strip()] = value.strip()
        i += 1
    if i >= len(lines):
        raise ParseError(path, i + 1, "missing column header row")
    columns = lines[i].split(",")
    rows = []
    for lineno in range(i + 2, len(lines) + 1):
        cells = lines[lineno - 1].split(",")
        if len(cells) != len(columns):
            raise ParseError(path, lineno, f"expected {len(columns)} cells, got {len(cells)}")
        row = []
        for c in cells:
            try:
                row.append(float(c))
            except ValueError:
                row.append(c)
        rows.append(row)
    return header, columns, rows

"""CSV and JSON output.

Every CSV starts with one comment line carrying the tool version and the
config hash, e.g. ``# sideband_thermo 0.1.0 config_hash=0123abcd...``,
followed by a plain header row. Floats are written with ``repr`` so reruns
are byte-identical and values round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError
from .experiment import SpectrumTrace

TOOL_NAME = "sideband_thermo"
TRACE_COLUMNS = ["w_rad_s", "psd"]
_HEADER_RE = re.compile(r"#\s*(\S+)\s+(\S+)\s+config_hash=(\S+)")


@dataclass(frozen=True)
class CsvHeader:
    tool: str
    version: str
    config_hash: str


def header_line(config_hash: str) -> str:
    return f"# {TOOL_NAME} {__version__} config_hash={config_hash}"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], config_hash: str,
              append: bool = False) -> int:
    """Write (or append) rows; returns the number of data rows written."""
    path = Path(path)
    mode = "a" if append else "w"
    count = 0
    with open(path, mode, newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not append:
            fh.write(header_line(config_hash) + "\n")
            writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
            count += 1
    return count


def read_header(path) -> Optional[CsvHeader]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    m = _HEADER_RE.match(first)
    if not m:
        return None
    return CsvHeader(tool=m.group(1), version=m.group(2), config_hash=m.group(3))


def read_csv(path):
    """Return ``(header, columns, rows)`` with rows as lists of strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    header = None
    if lines and lines[0].startswith("#"):
        m = _HEADER_RE.match(lines[0])
        header = CsvHeader(*m.groups()) if m else None
        lines = lines[1:]
    reader = csv.reader(lines)
    try:
        columns = next(reader)
    except StopIteration:
        raise ConfigError(f"{path}: no header row") from None
    return header, columns, [row for row in reader if row]


def write_trace(path, trace: SpectrumTrace, config_hash: str = "none") -> int:
    return write_csv(path, TRACE_COLUMNS, zip(trace.w_grid, trace.psd), config_hash)


def read_trace(path) -> SpectrumTrace:
    """Load a ``(w_rad_s, psd)`` CSV; w must be strictly increasing and exclude 0."""
    _, columns, rows = read_csv(path)
    if columns[:2] != TRACE_COLUMNS:
        raise ConfigError(f"{path}: expected columns {TRACE_COLUMNS}, got {columns[:2]}")
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed trace row ({exc})") from exc
    if data.size == 0:
        raise ConfigError(f"{path}: trace has no rows")
    w, psd = data[:, 0], data[:, 1]
    order = np.argsort(w, kind="stable")
    w, psd = w[order], psd[order]
    if np.any(np.diff(w) <= 0) or np.any(w == 0.0):
        raise ConfigError(f"{path}: frequency column must be distinct and exclude 0")
    return SpectrumTrace(w_grid=w, psd=psd, n_avg=None, seed=None)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and not isinstance(obj, (int, str)):
        return obj.value
    return obj


def write_json(path, report: dict, config_hash: str) -> None:
    payload = {"tool": TOOL_NAME, "version": __version__, "config_hash": config_hash}
    payload.update(_jsonable(report))
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def format_table(columns: List[str], rows: List[Sequence], floatfmt="{:.6g}") -> str:
    """Small fixed-width text table for terminal summaries."""
    cells = [[floatfmt.format(v) if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) if cells else len(c)
              for i, c in enumerate(columns)]
    out = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    out += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(out)

"""Writers for the machine-readable (CSV/JSON) and aligned-text report files."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Sequence


def _clean(obj: Any) -> Any:
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalar
        return _clean(obj.item())
    return obj


def write_json(path: str | Path, data: Any) -> None:
    text = json.dumps(_clean(data), indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("" if math.isnan(v) else str(v))
    return str(v)


def format_number(v: Any, digits: int = 4) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return f"{v:,}"
    if isinstance(v, float):
        if math.isnan(v):
            return "-"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v != 0 and (abs(v) < 10 ** -(digits - 1) or abs(v) >= 1e12):
            return f"{v:.{digits}g}"
        return f"{v:,.{digits}f}"
    return str(v)


def format_table(header: Sequence[str], rows: Sequence[Sequence[Any]], digits: int = 4, title: str | None = None) -> str:
    """Right-aligned plain-text table; the first column is left-aligned."""
    cells = [[format_number(v, digits) for v in row] for row in rows]
    widths = [max(len(str(h)), *(len(r[i]) for r in cells)) if cells else len(str(h)) for i, h in enumerate(header)]
    def line(vals):
        parts = [str(vals[0]).ljust(widths[0])] + [str(v).rjust(w) for v, w in zip(vals[1:], widths[1:])]
        return "  ".join(parts).rstrip()
    out = []
    if title:
        out.append(title)
    out.append(line(header))
    out.append("  ".join("-" * w for w in widths))
    out.extend(line(r) for r in cells)
    return "\n".join(out) + "\n"


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")

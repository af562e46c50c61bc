"""Deterministic text serialization helpers.

All CSV output uses '\n' line endings, '.' decimal separator and 17
significant digits so that identical runs produce byte-identical files
regardless of platform or worker count. JSON output is canonical:
sorted keys, two-space indent, trailing newline.
"""

from __future__ import annotations

import json
import math
from typing import Any, Iterable, Sequence

import numpy as np


def fmt_float(x: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render rows to CSV text. Floats get fmt_float, everything else str()."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(fmt_float(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float):
        # strict JSON has no Infinity/NaN; overflowed bounds serialize as null
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def json_text(obj: Any) -> str:
    """Canonical JSON: sorted keys, indent 2, '\n'-terminated, strict floats."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"

"""Deterministic JSON/CSV emission with 17-significant-digit floats.

``json.dumps`` writes floats with ``repr``; the schema here asks for a fixed
``%.17g`` rendering so that files are byte-stable across platforms and every
binary64 value round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = f"{x:.17g}"
    if x == 0.0:
        return "-0.0" if math.copysign(1.0, x) < 0 else "0.0"
    return text


def _encode(obj: Any, indent: int | None, level: int) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
            for k, v in obj.items()
        ]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[" + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int | None = 1) -> str:
    """Serialize ``obj`` to JSON text with ``%.17g`` floats."""
    return _encode(obj, indent, 0) + "\n"


def loads(text: str) -> Any:
    return json.loads(text)


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path) -> Any:
    return loads(Path(path).read_text(encoding="utf-8"))


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row]
        )
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    Path(path).write_text(csv_text(header, rows), encoding="utf-8")

"""File output helpers: atomic writes, JSON with numpy values, small CSV writer."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n"


def atomic_write_text(target: str | Path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename over ``target``."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def write_json(target: str | Path, payload: dict) -> Path:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    return atomic_write_text(target, to_json(payload))


def write_csv(
    target: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[float]],
    comment: str | None = None,
) -> Path:
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(",".join(header))
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    return atomic_write_text(target, "\n".join(lines) + "\n")

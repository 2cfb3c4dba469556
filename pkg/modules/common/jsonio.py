"""Stable JSON artifacts (orjson).

Floats pass through float32 and are printed at 7 significant digits so the same
run produces byte-identical files on every platform.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable, List

import numpy as np
import orjson

_OPTS = orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE


def f32(value: float) -> float:
    return float(f"{np.float32(value):.7g}")


def f32_list(values: Iterable[float]) -> List[float]:
    return [f32(v) for v in values]


def dumps(obj: Any) -> bytes:
    return orjson.dumps(obj, option=_OPTS)


def write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(obj))


def read_json(path: Path) -> Any:
    return orjson.loads(path.read_bytes())

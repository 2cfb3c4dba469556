"""M3.2 - Sliding-window planning.

Windows and strides are given in pixels and snapped down to whole patches.
The last window on each axis is shifted back so it ends on the padded edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from modules.common.errors import InvalidArgumentError
from modules.m1 import PatchGrid, PixelRect


@dataclass(frozen=True)
class WindowPlan:
    windows: Tuple[PixelRect, ...]
    window_px: Tuple[int, int]
    stride_px: Tuple[int, int]

    def __post_init__(self) -> None:
        if not self.windows:
            raise InvalidArgumentError("window plan must contain at least one window")

    def __len__(self) -> int:
        return len(self.windows)

    def to_dict(self) -> dict:
        return {
            "window_px": list(self.window_px),
            "stride_px": list(self.stride_px),
            "windows": [
                {"x0": w.x0, "y0": w.y0, "x1": w.x1, "y1": w.y1} for w in self.windows
            ],
        }


def _snap(value: int, crop_px: int) -> int:
    return max(crop_px, (int(value) // crop_px) * crop_px)


def _origins(extent: int, size: int, stride: int) -> List[int]:
    out: List[int] = []
    x = 0
    while True:
        if x + size >= extent:
            out.append(extent - size)
            return out
        out.append(x)
        x += stride


def plan_windows(
    grid: PatchGrid, window_px: Tuple[int, int], stride_px: Tuple[int, int]
) -> WindowPlan:
    """Row-major windows covering the padded image."""
    ww, wh = (int(v) for v in window_px)
    sx, sy = (int(v) for v in stride_px)
    if ww < 1 or wh < 1:
        raise InvalidArgumentError(f"window must be positive, got {window_px}")
    if sx < 1 or sy < 1:
        raise InvalidArgumentError(f"stride must be positive, got {stride_px}")
    crop = grid.crop_px
    pw, ph = grid.padded_dims.width_px, grid.padded_dims.height_px

    ww, wh = min(_snap(ww, crop), pw), min(_snap(wh, crop), ph)
    # a stride wider than the window would leave uncovered columns
    sx, sy = min(_snap(sx, crop), ww), min(_snap(sy, crop), wh)

    xs = _origins(pw, ww, sx)
    ys = _origins(ph, wh, sy)
    windows = tuple(PixelRect(x, y, x + ww, y + wh) for y in ys for x in xs)
    return WindowPlan(windows=windows, window_px=(ww, wh), stride_px=(sx, sy))


def window_patch_dims(window: PixelRect, grid: PatchGrid) -> Tuple[int, int]:
    """(rows, cols) of low patches inside a lattice-aligned window."""
    crop = grid.crop_px
    if any(v % crop for v in window.as_tuple()):
        raise InvalidArgumentError(f"window {window.as_tuple()} not aligned to {crop}px lattice")
    return (window.height // crop, window.width // crop)


def coverage_counts(plan: WindowPlan, grid: PatchGrid) -> np.ndarray:
    """|T_ij|: how many windows contain each low patch."""
    counts = np.zeros((grid.grid_h, grid.grid_w), dtype=np.int64)
    crop = grid.crop_px
    for win in plan.windows:
        h, w = window_patch_dims(win, grid)
        r0, c0 = win.y0 // crop, win.x0 // crop
        counts[r0 : r0 + h, c0 : c0 + w] += 1
    return counts

"""M1.1 - Patch lattice geometry.

An image is tiled twice: a low-resolution lattice of ``crop_px`` patches and a
coarse lattice of ``ratio_k * crop_px`` patches. The image is padded up to a
multiple of the coarse side so every coarse cell owns exactly k*k low cells.

All indices are zero-based and row-major. Rectangles are half-open pixel
ranges in padded-image coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np

from modules.common.errors import InvalidArgumentError


@dataclass(frozen=True)
class ImageDims:
    width_px: int
    height_px: int

    def __post_init__(self) -> None:
        if int(self.width_px) < 1 or int(self.height_px) < 1:
            raise InvalidArgumentError(
                f"image dims must be positive, got {self.width_px}x{self.height_px}"
            )


@dataclass(frozen=True, order=True)
class PatchIndex:
    row: int
    col: int

    def as_tuple(self) -> Tuple[int, int]:
        return (self.row, self.col)


@dataclass(frozen=True)
class PixelRect:
    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise InvalidArgumentError(f"empty rect {self.as_tuple()}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)

    def contains_point(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def contains(self, other: "PixelRect") -> bool:
        return (
            self.x0 <= other.x0
            and self.y0 <= other.y0
            and other.x1 <= self.x1
            and other.y1 <= self.y1
        )

    def intersects(self, other: "PixelRect") -> bool:
        return intersection_area(self, other) > 0

    def translate(self, dx: int, dy: int) -> "PixelRect":
        return PixelRect(self.x0 + dx, self.y0 + dy, self.x1 + dx, self.y1 + dy)


def intersection_area(a: PixelRect, b: PixelRect) -> int:
    w = min(a.x1, b.x1) - max(a.x0, b.x0)
    h = min(a.y1, b.y1) - max(a.y0, b.y0)
    if w <= 0 or h <= 0:
        return 0
    return w * h


def clip_rect(rect: PixelRect, bounds: PixelRect) -> PixelRect | None:
    """Intersection of two rects, or None when they do not overlap."""
    x0, y0 = max(rect.x0, bounds.x0), max(rect.y0, bounds.y0)
    x1, y1 = min(rect.x1, bounds.x1), min(rect.y1, bounds.y1)
    if x0 >= x1 or y0 >= y1:
        return None
    return PixelRect(x0, y0, x1, y1)


@dataclass(frozen=True)
class PatchGrid:
    dims: ImageDims
    crop_px: int
    ratio_k: int
    grid_w: int
    grid_h: int
    coarse_w: int
    coarse_h: int
    padded_dims: ImageDims

    @property
    def coarse_px(self) -> int:
        return self.crop_px * self.ratio_k

    @property
    def bounds(self) -> PixelRect:
        return PixelRect(0, 0, self.padded_dims.width_px, self.padded_dims.height_px)

    def to_dict(self) -> dict:
        return {
            "width_px": self.dims.width_px,
            "height_px": self.dims.height_px,
            "crop_px": self.crop_px,
            "ratio_k": self.ratio_k,
            "grid_h": self.grid_h,
            "grid_w": self.grid_w,
            "coarse_h": self.coarse_h,
            "coarse_w": self.coarse_w,
            "padded_width_px": self.padded_dims.width_px,
            "padded_height_px": self.padded_dims.height_px,
        }


def build_grid(dims: ImageDims, crop_px: int, ratio_k: int) -> PatchGrid:
    """Bind image dims to a low lattice of ``crop_px`` and a coarse lattice of k*crop_px."""
    if isinstance(crop_px, bool) or not isinstance(crop_px, (int, np.integer)) or crop_px < 1:
        raise InvalidArgumentError(f"crop_px must be a positive integer, got {crop_px!r}")
    if isinstance(ratio_k, bool) or not isinstance(ratio_k, (int, np.integer)) or ratio_k < 2:
        raise InvalidArgumentError(f"ratio_k must be an integer >= 2, got {ratio_k!r}")
    crop_px, ratio_k = int(crop_px), int(ratio_k)
    side = crop_px * ratio_k
    coarse_w = math.ceil(dims.width_px / side)
    coarse_h = math.ceil(dims.height_px / side)
    return PatchGrid(
        dims=dims,
        crop_px=crop_px,
        ratio_k=ratio_k,
        grid_w=coarse_w * ratio_k,
        grid_h=coarse_h * ratio_k,
        coarse_w=coarse_w,
        coarse_h=coarse_h,
        padded_dims=ImageDims(coarse_w * side, coarse_h * side),
    )


def lattice_shape(grid: PatchGrid, coarse: bool) -> Tuple[int, int]:
    if coarse:
        return (grid.coarse_h, grid.coarse_w)
    return (grid.grid_h, grid.grid_w)


def _check_index(grid: PatchGrid, idx: PatchIndex, coarse: bool) -> None:
    rows, cols = lattice_shape(grid, coarse)
    if not (0 <= idx.row < rows and 0 <= idx.col < cols):
        lattice = "coarse" if coarse else "low"
        raise InvalidArgumentError(f"{lattice} index {idx.as_tuple()} outside {rows}x{cols}")


def patch_rect(grid: PatchGrid, idx: PatchIndex, coarse: bool = False) -> PixelRect:
    _check_index(grid, idx, coarse)
    side = grid.coarse_px if coarse else grid.crop_px
    x0, y0 = idx.col * side, idx.row * side
    return PixelRect(x0, y0, x0 + side, y0 + side)


def coarse_children(grid: PatchGrid, coarse_idx: PatchIndex) -> List[PatchIndex]:
    """The k*k low cells under one coarse cell, row-major."""
    _check_index(grid, coarse_idx, coarse=True)
    k = grid.ratio_k
    r0, c0 = coarse_idx.row * k, coarse_idx.col * k
    return [PatchIndex(r0 + dr, c0 + dc) for dr in range(k) for dc in range(k)]


def coarse_parent(grid: PatchGrid, idx: PatchIndex) -> PatchIndex:
    _check_index(grid, idx, coarse=False)
    return PatchIndex(idx.row // grid.ratio_k, idx.col // grid.ratio_k)


def pixel_to_patch(grid: PatchGrid, x: int, y: int) -> PatchIndex:
    if not grid.bounds.contains_point(x, y):
        raise InvalidArgumentError(
            f"pixel ({x},{y}) outside padded image "
            f"{grid.padded_dims.width_px}x{grid.padded_dims.height_px}"
        )
    return PatchIndex(int(y) // grid.crop_px, int(x) // grid.crop_px)


def iter_patches(grid: PatchGrid, coarse: bool = False) -> Iterator[PatchIndex]:
    rows, cols = lattice_shape(grid, coarse)
    for r in range(rows):
        for c in range(cols):
            yield PatchIndex(r, c)


def pad_image(pixels: np.ndarray, grid: PatchGrid) -> np.ndarray:
    """Extend an HxW[xC] image by edge replication to the padded dims."""
    h, w = pixels.shape[:2]
    if (w, h) != (grid.dims.width_px, grid.dims.height_px):
        raise InvalidArgumentError(
            f"image is {w}x{h}, grid expects {grid.dims.width_px}x{grid.dims.height_px}"
        )
    pad_y = grid.padded_dims.height_px - h
    pad_x = grid.padded_dims.width_px - w
    if pad_x == 0 and pad_y == 0:
        return pixels
    widths = [(0, pad_y), (0, pad_x)] + [(0, 0)] * (pixels.ndim - 2)
    return np.pad(pixels, widths, mode="edge")

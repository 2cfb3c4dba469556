from __future__ import annotations

from .m1_1_grid import (
    ImageDims,
    PatchGrid,
    PatchIndex,
    PixelRect,
    build_grid,
    clip_rect,
    coarse_children,
    coarse_parent,
    intersection_area,
    iter_patches,
    lattice_shape,
    pad_image,
    patch_rect,
    pixel_to_patch,
)

__all__ = [
    "ImageDims",
    "PatchGrid",
    "PatchIndex",
    "PixelRect",
    "build_grid",
    "clip_rect",
    "coarse_children",
    "coarse_parent",
    "intersection_area",
    "iter_patches",
    "lattice_shape",
    "pad_image",
    "patch_rect",
    "pixel_to_patch",
]

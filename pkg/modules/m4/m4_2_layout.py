"""M4.2 - Spatial-awareness layout of retrieved patches.

Distinct source rows (and columns) are ranked and compacted, so retrieved
crops keep their relative arrangement without the empty space between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage as ndi

from modules.common.errors import InvalidArgumentError
from modules.m1 import PatchGrid, PatchIndex, PixelRect


@dataclass(frozen=True)
class LayoutGrid:
    rows: int
    cols: int
    cells: Dict[Tuple[int, int], PatchIndex]

    def get(self, lr: int, lc: int) -> Optional[PatchIndex]:
        return self.cells.get((lr, lc))

    def holes(self) -> List[Tuple[int, int]]:
        return [
            (r, c) for r in range(self.rows) for c in range(self.cols) if (r, c) not in self.cells
        ]

    def as_rows(self) -> List[List[Optional[PatchIndex]]]:
        return [[self.get(r, c) for c in range(self.cols)] for r in range(self.rows)]

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "cells": [
                {"lr": lr, "lc": lc, "row": p.row, "col": p.col}
                for (lr, lc), p in sorted(self.cells.items())
            ],
        }


def spatial_layout(selected: Sequence[PatchIndex]) -> LayoutGrid:
    if len(set(selected)) != len(selected):
        raise InvalidArgumentError("selected patches contain duplicates")
    row_rank = {r: i for i, r in enumerate(sorted({p.row for p in selected}))}
    col_rank = {c: i for i, c in enumerate(sorted({p.col for p in selected}))}
    cells = {(row_rank[p.row], col_rank[p.col]): p for p in selected}
    return LayoutGrid(rows=len(row_rank), cols=len(col_rank), cells=cells)


def merged_regions(selected: Sequence[PatchIndex], grid: PatchGrid) -> List[PixelRect]:
    """Bounding pixel rects of 4-connected groups of selected patches, row-major."""
    if not selected:
        return []
    mask = np.zeros((grid.grid_h, grid.grid_w), dtype=bool)
    for p in selected:
        mask[p.row, p.col] = True
    labels, _ = ndi.label(mask)
    crop = grid.crop_px
    regions = []
    for sl in ndi.find_objects(labels):
        rows, cols = sl
        regions.append(
            PixelRect(cols.start * crop, rows.start * crop, cols.stop * crop, rows.stop * crop)
        )
    return sorted(regions, key=lambda r: (r.y0, r.x0))


def crop_rects(
    selected: Sequence[PatchIndex], grid: PatchGrid
) -> Tuple[List[PixelRect], List[PixelRect]]:
    """Per-patch pixel rects (selection order) and merged region rects."""
    crop = grid.crop_px
    per_patch = [
        PixelRect(p.col * crop, p.row * crop, (p.col + 1) * crop, (p.row + 1) * crop)
        for p in selected
    ]
    return per_patch, merged_regions(selected, grid)

# modules/m1/cli.py
from __future__ import annotations

import argparse
import sys

from modules.common.jsonio import dumps

from .m1_1_grid import (
    ImageDims,
    PatchIndex,
    build_grid,
    coarse_children,
    iter_patches,
    patch_rect,
)


def _handle_grid(args: argparse.Namespace) -> int:
    grid = build_grid(ImageDims(args.width, args.height), args.crop_px, args.ratio_k)
    sys.stdout.write(dumps(grid.to_dict()).decode("utf-8"))
    return 0


def verify() -> None:
    """Aggregate verifier for Module 1."""
    grid = build_grid(ImageDims(4480, 4480), 224, 2)
    n = grid.grid_h * grid.grid_w
    m = grid.coarse_h * grid.coarse_w
    print(f"[m1.1] hr4k grid {grid.grid_h}x{grid.grid_w}, coarse {grid.coarse_h}x{grid.coarse_w}")
    if n != grid.ratio_k**2 * m:
        raise SystemExit("[m1] FAILED: n != k^2 * m")

    area = sum(patch_rect(grid, p).area for p in iter_patches(grid))
    padded = grid.padded_dims.width_px * grid.padded_dims.height_px
    print(f"[m1.1] low lattice tiles padded image: {'OK' if area == padded else 'MISSING'}")
    if area != padded:
        raise SystemExit("[m1] FAILED: low lattice does not tile")

    parent = PatchIndex(0, 0)
    children = coarse_children(grid, parent)
    if len(children) != grid.ratio_k**2:
        raise SystemExit("[m1] FAILED: wrong number of coarse children")
    print("M1 verification passed.")


def register(sub: argparse._SubParsersAction, verifiers: dict) -> None:
    sp = sub.add_parser("grid", help="Print the dual-lattice PatchGrid as JSON")
    sp.add_argument("--width", type=int, required=True)
    sp.add_argument("--height", type=int, required=True)
    sp.add_argument("--crop-px", type=int, default=112, dest="crop_px")
    sp.add_argument("--ratio-k", type=int, default=2, dest="ratio_k")
    sp.set_defaults(func=_handle_grid)

    verifiers["m1"] = verify

# modules/m4/cli.py
from __future__ import annotations

import argparse

import numpy as np

from modules.m1 import PatchIndex
from modules.m2 import ScoreMap

from .m4_1_fuse import fuse_maps, select_top_k
from .m4_2_layout import spatial_layout


def verify() -> None:
    """Aggregate verifier for Module 4."""
    fused = fuse_maps(ScoreMap(np.array([[0.5]])), ScoreMap(np.array([[1.0]])), 0.4)
    print(f"[m4.1] fuse(0.5, 1.0, w=0.4) = {fused.values[0, 0]:.6f}")
    if abs(fused.values[0, 0] - 0.7) > 1e-12:
        raise SystemExit("[m4] FAILED: fusion spot value")

    picked = select_top_k(ScoreMap(np.array([[0.1, 0.9], [0.9, 0.2]])), 2)
    order = [p.as_tuple() for p, _ in picked]
    print(f"[m4.1] top-2 with tie: {order}")
    if order != [(0, 1), (1, 0)]:
        raise SystemExit("[m4] FAILED: tie-break must be row-major")

    layout = spatial_layout([PatchIndex(2, 5), PatchIndex(2, 9), PatchIndex(7, 5)])
    print(f"[m4.2] layout {layout.rows}x{layout.cols}, holes {layout.holes()}")
    if (layout.rows, layout.cols) != (2, 2) or layout.holes() != [(1, 1)]:
        raise SystemExit("[m4] FAILED: layout compaction")
    print("M4 verification passed.")


def register(sub: argparse._SubParsersAction, verifiers: dict) -> None:
    verifiers["m4"] = verify

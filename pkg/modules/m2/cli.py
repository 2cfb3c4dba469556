# modules/m2/cli.py
from __future__ import annotations

import argparse

import numpy as np

from modules.m1 import ImageDims, build_grid, coarse_parent, iter_patches

from .m2_1_similarity import ScoreMap, cosine_similarity01
from .m2_2_multires import consistency_fuse, upsample_coarse


def _verify_cosine() -> None:
    cases = [([1.0, 0.0], [2.0, 0.0], 1.0), ([1.0, 0.0], [0.0, 3.0], 0.5), ([1.0], [-1.0], 0.0)]
    for a, b, want in cases:
        got = cosine_similarity01(a, b)
        print(f"[m2.1] cos01({a}, {b}) = {got:.6f}")
        if abs(got - want) > 1e-12:
            raise SystemExit(f"[m2] FAILED: expected {want}")


def _verify_multires() -> None:
    grid = build_grid(ImageDims(448, 448), 112, 2)
    rng = np.random.default_rng(0)
    low = ScoreMap(rng.uniform(size=(grid.grid_h, grid.grid_w)))
    hi = ScoreMap(rng.uniform(size=(grid.coarse_h, grid.coarse_w)))
    fused = consistency_fuse(low, upsample_coarse(hi, grid))
    for p in iter_patches(grid):
        q = coarse_parent(grid, p)
        want = np.sqrt(low.at(p) * hi.at(q))
        if abs(fused.at(p) - want) > 1e-12:
            raise SystemExit(f"[m2] FAILED: fused map differs at {p.as_tuple()}")
    print("[m2.2] consistency fusion matches per-patch parent lookup")


def _verify_all() -> None:
    _verify_cosine()
    _verify_multires()
    print("M2 verification passed.")


def register(sub: argparse._SubParsersAction, verifiers: dict) -> None:
    verifiers["m2"] = _verify_all

"""M2.2 - Multi-resolution consistency fusion.

The coarse map is replicated onto the low lattice (each coarse cell fills its
k*k children) and fused with the low map by an elementwise geometric mean.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from modules.common.errors import InvalidArgumentError
from modules.m1 import PatchGrid

from .m2_1_similarity import EmbeddingProvider, Query, ScoreMap, similarity_map


def upsample_coarse(map_hi: ScoreMap, grid: PatchGrid) -> ScoreMap:
    if map_hi.shape != (grid.coarse_h, grid.coarse_w):
        raise InvalidArgumentError(
            f"coarse map is {map_hi.shape}, grid expects {(grid.coarse_h, grid.coarse_w)}"
        )
    k = grid.ratio_k
    return ScoreMap(np.repeat(np.repeat(map_hi.values, k, axis=0), k, axis=1))


def fuse_geometric(low: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """sqrt(low * hi) on raw arrays; no range check."""
    low = np.asarray(low, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if low.shape != hi.shape:
        raise InvalidArgumentError(f"shape mismatch: {low.shape} vs {hi.shape}")
    return np.sqrt(low * hi)


def consistency_fuse(low: ScoreMap, hi_upsampled: ScoreMap) -> ScoreMap:
    return ScoreMap(fuse_geometric(low.values, hi_upsampled.values))


def multi_resolution_map(
    query: Query,
    grid: PatchGrid,
    embedder: EmbeddingProvider,
    image: Optional[np.ndarray] = None,
    batch_size: int = 32,
    workers: int = 1,
) -> ScoreMap:
    low = similarity_map(query, grid, False, embedder, image, batch_size, workers)
    hi = similarity_map(query, grid, True, embedder, image, batch_size, workers)
    return consistency_fuse(low, upsample_coarse(hi, grid))


def single_resolution_map(
    query: Query,
    grid: PatchGrid,
    embedder: EmbeddingProvider,
    coarse: bool,
    image: Optional[np.ndarray] = None,
    batch_size: int = 32,
    workers: int = 1,
) -> ScoreMap:
    """One lattice only, always returned on the low lattice."""
    smap = similarity_map(query, grid, coarse, embedder, image, batch_size, workers)
    return upsample_coarse(smap, grid) if coarse else smap

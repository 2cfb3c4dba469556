"""M4.1 - Semantic/detection fusion and top-K selection."""

from __future__ import annotations

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from modules.common.errors import InvalidArgumentError
from modules.m1 import PatchIndex
from modules.m2 import ScoreMap


class FusionConfig(BaseModel):
    """Fusion and retrieval knobs.

    ``max_steps`` and ``answer_tau`` belong to the downstream answering loop;
    they are carried and serialized but nothing here reads them.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    weight_w: float = Field(default=0.4, ge=0.0, le=1.0)
    top_k: int = Field(default=16, ge=1)
    max_steps: int = Field(default=200, ge=1)
    answer_tau: float = Field(default=0.6, ge=0.0, le=1.0)


def fuse_maps(semantic: ScoreMap, detection: ScoreMap, weight_w: float) -> ScoreMap:
    """(1 - w) * semantic + w * detection, elementwise."""
    if not 0.0 <= weight_w <= 1.0:
        raise InvalidArgumentError(f"weight_w must lie in [0,1], got {weight_w}")
    if semantic.shape != detection.shape:
        raise InvalidArgumentError(f"shape mismatch: {semantic.shape} vs {detection.shape}")
    s, c = semantic.values, detection.values
    out = (1.0 - weight_w) * s + weight_w * c
    # keep rounding from stepping outside the pair
    return ScoreMap(np.clip(out, np.minimum(s, c), np.maximum(s, c)))


def select_top_k(fused: ScoreMap, top_k: int) -> List[Tuple[PatchIndex, float]]:
    """K best cells, descending; equal scores go in row-major order."""
    if top_k < 1:
        raise InvalidArgumentError(f"top_k must be >= 1, got {top_k}")
    flat = fused.values.ravel()
    order = np.lexsort((np.arange(flat.size), -flat))[:top_k]
    w = fused.grid_w
    return [(PatchIndex(int(i) // w, int(i) % w), float(flat[i])) for i in order]

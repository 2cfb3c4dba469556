"""M2.1 - Semantic similarity maps.

Every patch of a lattice is embedded by an injected provider and scored
against the query embedding with cosine similarity rescaled to [0,1].
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from modules.common.errors import DegenerateInputError, InvalidArgumentError, ProviderError
from modules.common.logs import get_logger
from modules.m1 import PatchGrid, PatchIndex, PixelRect, iter_patches, lattice_shape, patch_rect

LOGGER = get_logger("m2.similarity")

Embedding = np.ndarray


@dataclass(frozen=True)
class Query:
    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.text, str) or not self.text.strip():
            raise InvalidArgumentError("query text must be nonempty")


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """Row-major HxW map with every value in [0,1]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise InvalidArgumentError(f"score map must be a nonempty 2-D array, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("score map contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise InvalidArgumentError(
                f"score map values must lie in [0,1], got [{arr.min()}, {arr.max()}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_flat(cls, grid_h: int, grid_w: int, flat: Sequence[float]) -> "ScoreMap":
        if len(flat) != grid_h * grid_w:
            raise InvalidArgumentError(
                f"expected {grid_h * grid_w} values for {grid_h}x{grid_w}, got {len(flat)}"
            )
        return cls(np.asarray(flat, dtype=np.float64).reshape(grid_h, grid_w))

    @classmethod
    def zeros(cls, grid_h: int, grid_w: int) -> "ScoreMap":
        return cls(np.zeros((grid_h, grid_w)))

    @property
    def grid_h(self) -> int:
        return int(self.values.shape[0])

    @property
    def grid_w(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.grid_h, self.grid_w)

    def at(self, idx: PatchIndex) -> float:
        return float(self.values[idx.row, idx.col])

    def flat(self) -> List[float]:
        return [float(v) for v in self.values.ravel()]


@dataclass(frozen=True, eq=False)
class Crop:
    """One image region handed to a provider (patch crop or detection window)."""

    rect: PixelRect
    index: Optional[PatchIndex] = None
    coarse: bool = False
    pixels: Optional[np.ndarray] = field(default=None, repr=False)


class EmbeddingProvider(Protocol):
    def embed_query(self, text: str) -> Embedding: ...

    def embed_crops(self, crops: Sequence[Crop]) -> List[Embedding]: ...


def as_embedding(values: Sequence[float], dim: Optional[int] = None) -> Embedding:
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1 or vec.size == 0:
        raise InvalidArgumentError(f"embedding must be a nonempty vector, got shape {vec.shape}")
    if dim is not None and vec.size != dim:
        raise InvalidArgumentError(f"embedding has dim {vec.size}, expected {dim}")
    if not np.all(np.isfinite(vec)):
        raise InvalidArgumentError("embedding contains non-finite values")
    return vec


def cosine_similarity01(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine similarity mapped from [-1,1] to [0,1]."""
    va = as_embedding(a)
    vb = as_embedding(b)
    if va.size != vb.size:
        raise InvalidArgumentError(f"dimension mismatch: {va.size} vs {vb.size}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine similarity of a zero-norm embedding")
    cos = float(np.dot(va / na, vb / nb))
    cos = min(1.0, max(-1.0, cos))
    return 0.5 * (1.0 + cos)


def lattice_crops(
    grid: PatchGrid, coarse: bool, image: Optional[np.ndarray] = None
) -> List[Crop]:
    """Row-major crops of one lattice, cut from the padded image when given."""
    crops = []
    for idx in iter_patches(grid, coarse):
        rect = patch_rect(grid, idx, coarse)
        pixels = None
        if image is not None:
            pixels = image[rect.y0 : rect.y1, rect.x0 : rect.x1]
        crops.append(Crop(rect=rect, index=idx, coarse=coarse, pixels=pixels))
    return crops


def _embed_batch(embedder: EmbeddingProvider, batch: Sequence[Crop]) -> List[Embedding]:
    try:
        out = list(embedder.embed_crops(batch))
    except ProviderError as exc:
        if exc.index is None:
            exc.with_index(batch[0].index.as_tuple())
        raise
    if len(out) != len(batch):
        raise ProviderError(
            f"embedder returned {len(out)} embeddings for {len(batch)} crops",
            index=batch[0].index.as_tuple(),
        )
    return out


def similarity_map(
    query: Query,
    grid: PatchGrid,
    coarse: bool,
    embedder: EmbeddingProvider,
    image: Optional[np.ndarray] = None,
    batch_size: int = 32,
    workers: int = 1,
) -> ScoreMap:
    """Score every patch of the chosen lattice against the query."""
    if batch_size < 1 or workers < 1:
        raise InvalidArgumentError("batch_size and workers must be >= 1")
    t0 = time.perf_counter()
    qvec = as_embedding(embedder.embed_query(query.text))
    crops = lattice_crops(grid, coarse, image)
    batches = [crops[i : i + batch_size] for i in range(0, len(crops), batch_size)]

    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: _embed_batch(embedder, b), batches))
    else:
        results = [_embed_batch(embedder, b) for b in batches]

    rows, cols = lattice_shape(grid, coarse)
    values = np.empty((rows, cols), dtype=np.float64)
    for batch, embs in zip(batches, results):
        for crop, emb in zip(batch, embs):
            try:
                values[crop.index.row, crop.index.col] = cosine_similarity01(qvec, emb)
            except (InvalidArgumentError, DegenerateInputError) as exc:
                raise ProviderError(
                    f"unusable embedding: {exc}", index=crop.index.as_tuple()
                ) from exc

    LOGGER.debug(
        "similarity map {}x{} coarse={} batches={} in {:.1f} ms",
        rows,
        cols,
        coarse,
        len(batches),
        (time.perf_counter() - t0) * 1000.0,
    )
    return ScoreMap(values)

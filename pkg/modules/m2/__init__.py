from __future__ import annotations

from .m2_1_similarity import (
    Crop,
    Embedding,
    EmbeddingProvider,
    Query,
    ScoreMap,
    as_embedding,
    cosine_similarity01,
    lattice_crops,
    similarity_map,
)
from .m2_2_multires import (
    consistency_fuse,
    fuse_geometric,
    multi_resolution_map,
    single_resolution_map,
    upsample_coarse,
)

__all__ = [
    "Crop",
    "Embedding",
    "EmbeddingProvider",
    "Query",
    "ScoreMap",
    "as_embedding",
    "consistency_fuse",
    "cosine_similarity01",
    "fuse_geometric",
    "lattice_crops",
    "multi_resolution_map",
    "similarity_map",
    "single_resolution_map",
    "upsample_coarse",
]

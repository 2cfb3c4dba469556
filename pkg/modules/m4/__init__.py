from __future__ import annotations

from .m4_1_fuse import FusionConfig, fuse_maps, select_top_k
from .m4_2_layout import LayoutGrid, crop_rects, merged_regions, spatial_layout
from .m4_3_pipeline import (
    DEFAULT_METHOD,
    METHODS,
    PipelineArtifacts,
    PipelineRun,
    Providers,
    RetrievalResult,
    execute_pipeline,
    run_pipeline,
    selected_set,
)

__all__ = [
    "DEFAULT_METHOD",
    "FusionConfig",
    "LayoutGrid",
    "METHODS",
    "PipelineArtifacts",
    "PipelineRun",
    "Providers",
    "RetrievalResult",
    "crop_rects",
    "execute_pipeline",
    "fuse_maps",
    "merged_regions",
    "run_pipeline",
    "select_top_k",
    "selected_set",
    "spatial_layout",
]

from __future__ import annotations

from .m5_1_protocol import (
    DETECT_PATH,
    EMBED_PATH,
    EXTRACT_PATH,
    DetectionOut,
    DetectRequest,
    DetectResponse,
    EmbedRequest,
    EmbedResponse,
    ExtractRequest,
    ExtractResponse,
    ProviderEndpoint,
    Region,
)
from .m5_2_http import (
    HttpDetectorProvider,
    HttpEmbeddingProvider,
    HttpObjectExtractor,
    ProviderClient,
    detect_in_window,
    embed_crops,
    embed_query,
    encode_png_b64,
    extract_objects_llm,
)
from .m5_3_synthetic import (
    SyntheticDetector,
    SyntheticEmbedder,
    SyntheticExtractor,
    SyntheticSceneSpec,
    SyntheticTarget,
    embedding_for_similarity,
    ground_truth_patches,
    render_scene,
    rescale_scene,
    scene_similarity,
    selected_ground_truth,
    synthetic_detector,
    synthetic_embedder,
    synthetic_extractor,
    target_pixel_rect,
)

__all__ = [
    "DETECT_PATH",
    "EMBED_PATH",
    "EXTRACT_PATH",
    "DetectRequest",
    "DetectResponse",
    "DetectionOut",
    "EmbedRequest",
    "EmbedResponse",
    "ExtractRequest",
    "ExtractResponse",
    "HttpDetectorProvider",
    "HttpEmbeddingProvider",
    "HttpObjectExtractor",
    "ProviderClient",
    "ProviderEndpoint",
    "Region",
    "SyntheticDetector",
    "SyntheticEmbedder",
    "SyntheticExtractor",
    "SyntheticSceneSpec",
    "SyntheticTarget",
    "detect_in_window",
    "embed_crops",
    "embed_query",
    "embedding_for_similarity",
    "encode_png_b64",
    "extract_objects_llm",
    "ground_truth_patches",
    "render_scene",
    "rescale_scene",
    "scene_similarity",
    "selected_ground_truth",
    "synthetic_detector",
    "synthetic_embedder",
    "synthetic_extractor",
    "target_pixel_rect",
]

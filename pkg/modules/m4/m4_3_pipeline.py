"""M4.3 - End-to-end retrieval pipeline.

grid -> semantic map(s) -> window detection -> fusion -> top-K -> layout.
Every failure is re-raised as PipelineError tagged with its stage.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from modules.common.errors import InvalidArgumentError, PipelineError
from modules.common.jsonio import f32, f32_list
from modules.common.logs import get_logger
from modules.m1 import ImageDims, PatchGrid, PatchIndex, PixelRect, build_grid, pad_image
from modules.m2 import (
    EmbeddingProvider,
    Query,
    ScoreMap,
    multi_resolution_map,
    similarity_map,
    single_resolution_map,
)
from modules.m3 import (
    DetectorProvider,
    ObjectExtractorProvider,
    ObjectSet,
    WindowPlan,
    detection_map,
    extract_objects,
    plan_windows,
)

from .m4_1_fuse import FusionConfig, fuse_maps, select_top_k
from .m4_2_layout import LayoutGrid, merged_regions, spatial_layout

if TYPE_CHECKING:
    from modules.m6.m6_1_config import RunConfig

LOGGER = get_logger("m4.pipeline")

METHODS = ("low_only", "hi_only", "multires", "ovd_only", "multires+ovd")
DEFAULT_METHOD = "multires+ovd"


@dataclass(frozen=True)
class Providers:
    embedder: Optional[EmbeddingProvider] = None
    detector: Optional[DetectorProvider] = None
    extractor: Optional[ObjectExtractorProvider] = None

    def close(self) -> None:
        """Release transports held by providers that have any."""
        for p in (self.embedder, self.detector, self.extractor):
            close = getattr(p, "close", None)
            if close is not None:
                close()

    def __enter__(self) -> "Providers":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


@dataclass(frozen=True)
class RetrievalResult:
    grid: PatchGrid
    selected: Tuple[PatchIndex, ...]
    scores: Tuple[float, ...]
    fused_map: ScoreMap
    layout: LayoutGrid
    regions: Tuple[PixelRect, ...] = ()

    def to_dict(self) -> dict:
        return {
            "grid": {
                "h": self.grid.grid_h,
                "w": self.grid.grid_w,
                "crop_px": self.grid.crop_px,
                "k": self.grid.ratio_k,
            },
            "fused_map": f32_list(self.fused_map.values.ravel()),
            "selected": [
                {"row": p.row, "col": p.col, "score": f32(s)}
                for p, s in zip(self.selected, self.scores)
            ],
            "layout": self.layout.to_dict(),
        }


@dataclass
class PipelineArtifacts:
    method: str
    semantic_map: Optional[ScoreMap] = None
    detection_map: Optional[ScoreMap] = None
    objects: Optional[ObjectSet] = None
    plan: Optional[WindowPlan] = None
    timings_ms: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineRun:
    result: RetrievalResult
    artifacts: PipelineArtifacts


@contextmanager
def _stage(name: str, timings: Dict[str, float]) -> Iterator[None]:
    t0 = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001
        LOGGER.error("stage {} failed: {}", name, exc)
        raise PipelineError(name, exc) from exc
    finally:
        timings[name] = round((time.perf_counter() - t0) * 1000.0, 3)


def _require(provider: object, what: str) -> None:
    if provider is None:
        raise InvalidArgumentError(f"pipeline needs a {what} provider for this method")


def execute_pipeline(
    query: Union[Query, str],
    image: Union[np.ndarray, ImageDims],
    config: "RunConfig",
    providers: Providers,
    method: str = DEFAULT_METHOD,
) -> PipelineRun:
    """Run the full pipeline; ``image`` is decoded pixels or bare dims for pixel-free providers."""
    if method not in METHODS:
        raise PipelineError("config", InvalidArgumentError(f"unknown method {method!r}"))
    timings: Dict[str, float] = {}
    art = PipelineArtifacts(method=method, timings_ms=timings)
    fusion: FusionConfig = config.fusion()

    with _stage("grid", timings):
        q = query if isinstance(query, Query) else Query(query)
        pixels: Optional[np.ndarray] = None
        if isinstance(image, ImageDims):
            grid = build_grid(image, config.crop_px, config.ratio_k)
        else:
            h, w = image.shape[:2]
            grid = build_grid(ImageDims(int(w), int(h)), config.crop_px, config.ratio_k)
            pixels = pad_image(image, grid)

    use_semantic = method != "ovd_only"
    use_detection = method in ("ovd_only", "multires+ovd")
    batching = dict(batch_size=config.batch_size, workers=config.workers)

    def semantic_branch() -> ScoreMap:
        with _stage("semantic", timings):
            _require(providers.embedder, "embedding")
            if method == "low_only":
                return similarity_map(q, grid, False, providers.embedder, pixels, **batching)
            if method == "hi_only":
                return single_resolution_map(q, grid, providers.embedder, True, pixels, **batching)
            return multi_resolution_map(q, grid, providers.embedder, pixels, **batching)

    def detection_branch() -> ScoreMap:
        with _stage("objects", timings):
            _require(providers.extractor, "object extractor")
            art.objects = extract_objects(q, providers.extractor)
        with _stage("detection", timings):
            _require(providers.detector, "detector")
            art.plan = plan_windows(grid, config.window_px, config.stride_px)
            return detection_map(
                q,
                grid,
                art.plan,
                art.objects,
                providers.detector,
                config.tau_det,
                image=pixels,
                membership=config.membership,
                workers=config.workers,
            )

    if use_semantic and use_detection and config.parallel_branches:
        with ThreadPoolExecutor(max_workers=2) as pool:
            sem_f = pool.submit(semantic_branch)
            det_f = pool.submit(detection_branch)
            art.semantic_map, art.detection_map = sem_f.result(), det_f.result()
    else:
        if use_semantic:
            art.semantic_map = semantic_branch()
        if use_detection:
            art.detection_map = detection_branch()

    with _stage("fusion", timings):
        if art.semantic_map is not None and art.detection_map is not None:
            fused = fuse_maps(art.semantic_map, art.detection_map, fusion.weight_w)
        else:
            fused = art.semantic_map if art.semantic_map is not None else art.detection_map

    with _stage("selection", timings):
        picked = select_top_k(fused, fusion.top_k)

    with _stage("layout", timings):
        selected = tuple(p for p, _ in picked)
        layout = spatial_layout(selected)
        regions = tuple(merged_regions(selected, grid))

    LOGGER.info(
        "pipeline {} on {}x{} grid: top{} best={:.4f} timings={}",
        method,
        grid.grid_h,
        grid.grid_w,
        len(selected),
        picked[0][1],
        timings,
    )
    result = RetrievalResult(
        grid=grid,
        selected=selected,
        scores=tuple(s for _, s in picked),
        fused_map=fused,
        layout=layout,
        regions=regions,
    )
    return PipelineRun(result=result, artifacts=art)


def run_pipeline(
    query: Union[Query, str],
    image: Union[np.ndarray, ImageDims],
    config: "RunConfig",
    providers: Providers,
    method: str = DEFAULT_METHOD,
) -> RetrievalResult:
    return execute_pipeline(query, image, config, providers, method).result


def selected_set(result: RetrievalResult) -> List[Tuple[int, int]]:
    return sorted(p.as_tuple() for p in result.selected)

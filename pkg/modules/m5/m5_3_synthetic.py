"""M5.3 - Deterministic synthetic providers.

A scene is a low-lattice grid with planted targets (real-valued patch
rectangles, so they may straddle lattice lines). The embedder scores a crop by
how much of each target it holds: a crop that holds a whole target gets the
full boost, a crop that holds only a fragment gets ``coherence * coverage`` of
it. Coarse crops therefore win on split objects, which is the effect the
multi-resolution fusion is meant to recover.

Noise is keyed by the crop rectangle, so outputs do not depend on call order.
"""

from __future__ import annotations

import math
import zlib
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from modules.common.errors import InvalidArgumentError
from modules.m1 import PatchIndex, PixelRect, clip_rect, intersection_area
from modules.m2 import Crop, Embedding
from modules.m3 import Detection, normalize_labels

DEFAULT_DIM = 8


class SyntheticTarget(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    rect: Tuple[float, float, float, float]  # x0, y0, x1, y1 in low-patch units
    label: str = Field(min_length=1)
    coherence: float = Field(ge=0.0, le=1.0)
    distractor: bool = False

    @model_validator(mode="after")
    def _nonempty(self) -> "SyntheticTarget":
        x0, y0, x1, y1 = self.rect
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"target rect {self.rect} is empty")
        return self


class SyntheticSceneSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scene_id: str = "scene"
    grid_h: int = Field(ge=1)
    grid_w: int = Field(ge=1)
    crop_px: int = Field(default=112, ge=1)
    targets: Tuple[SyntheticTarget, ...] = ()
    noise_seed: int = Field(default=0, ge=0)
    noise_level: float = Field(default=0.0, ge=0.0, le=1.0)
    background_level: float = Field(default=0.3, ge=0.0, le=1.0)
    query: Optional[str] = None
    dim: int = Field(default=DEFAULT_DIM, ge=2)

    @model_validator(mode="after")
    def _targets_inside(self) -> "SyntheticSceneSpec":
        for t in self.targets:
            x0, y0, x1, y1 = t.rect
            if x0 < 0 or y0 < 0 or x1 > self.grid_w or y1 > self.grid_h:
                raise ValueError(
                    f"target {t.label!r} rect {t.rect} outside {self.grid_h}x{self.grid_w}"
                )
        return self

    @property
    def width_px(self) -> int:
        return self.grid_w * self.crop_px

    @property
    def height_px(self) -> int:
        return self.grid_h * self.crop_px

    def true_targets(self) -> List[SyntheticTarget]:
        return [t for t in self.targets if not t.distractor]

    def query_text(self) -> str:
        if self.query:
            return self.query
        labels = normalize_labels(t.label for t in self.true_targets()) or ["object"]
        return f"Where is the {' and the '.join(labels)}?"


def target_pixel_rect(target: SyntheticTarget, crop_px: int) -> PixelRect:
    x0, y0, x1, y1 = target.rect
    return PixelRect(
        math.floor(x0 * crop_px),
        math.floor(y0 * crop_px),
        math.ceil(x1 * crop_px),
        math.ceil(y1 * crop_px),
    )


def rescale_scene(spec: SyntheticSceneSpec, crop_px: int) -> SyntheticSceneSpec:
    """The same picture on a ``crop_px`` lattice.

    Target pixel rectangles are kept; the grid grows to cover the old pixel
    extent, padding the far edges when the sizes do not divide.
    """
    if crop_px < 1:
        raise InvalidArgumentError(f"crop_px must be >= 1, got {crop_px}")
    if crop_px == spec.crop_px:
        return spec
    old = spec.crop_px
    targets = tuple(
        t.model_copy(update={"rect": tuple(v * old / crop_px for v in t.rect)})
        for t in spec.targets
    )
    return spec.model_copy(
        update={
            "crop_px": crop_px,
            "grid_w": -(-spec.width_px // crop_px),
            "grid_h": -(-spec.height_px // crop_px),
            "targets": targets,
        }
    )


def ground_truth_patches(spec: SyntheticSceneSpec) -> Set[Tuple[int, int]]:
    """Low cells overlapping any non-distractor target."""
    out: Set[Tuple[int, int]] = set()
    c = spec.crop_px
    for t in spec.true_targets():
        tr = target_pixel_rect(t, c)
        for r in range(tr.y0 // c, (tr.y1 - 1) // c + 1):
            for col in range(tr.x0 // c, (tr.x1 - 1) // c + 1):
                if intersection_area(tr, PixelRect(col * c, r * c, (col + 1) * c, (r + 1) * c)):
                    out.add((r, col))
    return out


def scene_similarity(spec: SyntheticSceneSpec, rect: PixelRect) -> float:
    """Similarity in [0,1] the synthetic embedder assigns to a crop rect."""
    bg = spec.background_level
    s = bg
    for t in spec.targets:
        tr = target_pixel_rect(t, spec.crop_px)
        inter = intersection_area(tr, rect)
        if inter == 0:
            continue
        if rect.contains(tr):
            s += 1.0 - bg
        else:
            s += t.coherence * (inter / rect.area) * (1.0 - bg)
    if spec.noise_level > 0.0:
        rng = np.random.default_rng([spec.noise_seed, rect.x0, rect.y0, rect.x1, rect.y1])
        s += float(rng.uniform(-spec.noise_level, spec.noise_level))
    return min(1.0, max(0.0, s))


def _unit(dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.float64)
    v[0] = 1.0
    return v


def embedding_for_similarity(similarity: float, dim: int) -> Embedding:
    """A vector whose rescaled cosine with e0 equals ``similarity``."""
    cos = 2.0 * similarity - 1.0
    v = np.zeros(dim, dtype=np.float64)
    v[0] = cos
    v[1] = math.sqrt(max(0.0, 1.0 - cos * cos))
    return v


class SyntheticEmbedder:
    def __init__(self, spec: SyntheticSceneSpec) -> None:
        self.spec = spec

    def embed_query(self, text: str) -> Embedding:
        return _unit(self.spec.dim)

    def similarity(self, rect: PixelRect) -> float:
        return scene_similarity(self.spec, rect)

    def embed_crops(self, crops: Sequence[Crop]) -> List[Embedding]:
        return [embedding_for_similarity(self.similarity(c.rect), self.spec.dim) for c in crops]


class SyntheticDetector:
    """One clipped, window-local box per true target touching the window."""

    def __init__(self, spec: SyntheticSceneSpec) -> None:
        self.spec = spec

    def detect_rect(self, window: PixelRect, labels: Sequence[str]) -> List[Detection]:
        wanted = set(normalize_labels(labels))
        out = []
        for t in self.spec.true_targets():
            if t.label.strip().lower() not in wanted:
                continue
            clipped = clip_rect(target_pixel_rect(t, self.spec.crop_px), window)
            if clipped is None:
                continue
            out.append(
                Detection(
                    box=clipped.translate(-window.x0, -window.y0),
                    score=0.5 + 0.5 * t.coherence,
                    label=t.label,
                )
            )
        return out

    def detect(self, window: Crop, labels: Sequence[str], threshold: float) -> List[Detection]:
        return self.detect_rect(window.rect, labels)


class SyntheticExtractor:
    def __init__(self, spec: SyntheticSceneSpec) -> None:
        self.spec = spec

    def extract(self, query: str) -> List[str]:
        return normalize_labels(t.label for t in self.spec.true_targets())


def synthetic_embedder(spec: SyntheticSceneSpec) -> SyntheticEmbedder:
    return SyntheticEmbedder(spec)


def synthetic_detector(spec: SyntheticSceneSpec) -> SyntheticDetector:
    return SyntheticDetector(spec)


def synthetic_extractor(spec: SyntheticSceneSpec) -> SyntheticExtractor:
    return SyntheticExtractor(spec)


def _label_color(label: str) -> Tuple[int, int, int]:
    h = zlib.crc32(label.encode("utf-8"))
    return (64 + h % 192, 64 + (h >> 8) % 192, 64 + (h >> 16) % 192)


def render_scene(spec: SyntheticSceneSpec) -> np.ndarray:
    """HxWx3 uint8 image: soft gradient background, targets as flat colored boxes."""
    h, w = spec.height_px, spec.width_px
    ys = np.linspace(40, 90, h, dtype=np.float64)[:, None]
    xs = np.linspace(0, 30, w, dtype=np.float64)[None, :]
    base = (ys + xs).astype(np.uint8)
    img = np.repeat(base[:, :, None], 3, axis=2)
    for t in spec.targets:
        r = target_pixel_rect(t, spec.crop_px)
        img[r.y0 : r.y1, r.x0 : r.x1] = _label_color(t.label)
    return img


def selected_ground_truth(
    selected: Sequence[PatchIndex], spec: SyntheticSceneSpec
) -> Tuple[int, int]:
    """(hits, ground-truth size) for a selection."""
    gt = ground_truth_patches(spec)
    hits = sum(1 for p in selected if p.as_tuple() in gt)
    return hits, len(gt)

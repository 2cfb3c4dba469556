"""M3.3 - Detection confidence maps.

Per window: keep detections scoring strictly above tau, then every patch
touched by a box takes the max score of those boxes. Globally: each patch is
the mean over every window that contains it (windows without boxes count as 0).
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence

import numpy as np

from modules.common.errors import InvalidArgumentError, ProtocolError, ProviderError
from modules.common.logs import get_logger
from modules.m1 import PatchGrid, PixelRect
from modules.m2 import Crop, Query, ScoreMap

from .m3_1_objects import ObjectSet
from .m3_2_windows import WindowPlan, coverage_counts, window_patch_dims

LOGGER = get_logger("m3.detect")

MEMBERSHIP_MODES = ("any", "center")


@dataclass(frozen=True)
class Detection:
    box: PixelRect
    score: float
    label: str
    local: bool = True  # window-local vs global pixel coordinates

    def __post_init__(self) -> None:
        if not (0.0 <= float(self.score) <= 1.0):
            raise InvalidArgumentError(f"detection score {self.score} outside [0,1]")

    def to_global(self, window: PixelRect) -> "Detection":
        if not self.local:
            return self
        return Detection(self.box.translate(window.x0, window.y0), self.score, self.label, False)


class DetectorProvider(Protocol):
    def detect(self, window: Crop, labels: Sequence[str], threshold: float) -> List[Detection]: ...


def filter_detections(dets: Sequence[Detection], tau_det: float) -> List[Detection]:
    return [d for d in dets if d.score > tau_det]


def _patch_mask(lo: int, hi: int, n: int, crop: int, membership: str) -> np.ndarray:
    starts = np.arange(n) * crop
    if membership == "center":
        centers = starts + crop / 2.0
        return (centers >= lo) & (centers < hi)
    return (starts < hi) & (starts + crop > lo)


def window_confidence_map(
    window: PixelRect,
    dets: Sequence[Detection],
    grid: PatchGrid,
    membership: str = "any",
) -> ScoreMap:
    """Max box score per window patch; boxes are window-local pixels."""
    if membership not in MEMBERSHIP_MODES:
        raise InvalidArgumentError(f"membership must be one of {MEMBERSHIP_MODES}")
    h, w = window_patch_dims(window, grid)
    local = PixelRect(0, 0, window.width, window.height)
    values = np.zeros((h, w), dtype=np.float64)
    crop = grid.crop_px
    for det in dets:
        if not det.local or not local.contains(det.box):
            raise InvalidArgumentError(
                f"box {det.box.as_tuple()} outside window-local bounds {local.as_tuple()}"
            )
        rows = _patch_mask(det.box.y0, det.box.y1, h, crop, membership)
        cols = _patch_mask(det.box.x0, det.box.x1, w, crop, membership)
        block = np.ix_(rows, cols)
        values[block] = np.maximum(values[block], float(det.score))
    return ScoreMap(values)


def global_confidence_map(
    plan: WindowPlan, per_window: Sequence[ScoreMap], grid: PatchGrid
) -> ScoreMap:
    """Average of window maps over every window covering each patch."""
    if len(per_window) != len(plan.windows):
        raise InvalidArgumentError(
            f"{len(per_window)} window maps for a plan of {len(plan.windows)} windows"
        )
    sums = np.zeros((grid.grid_h, grid.grid_w), dtype=np.float64)
    crop = grid.crop_px
    for t, (win, wmap) in enumerate(zip(plan.windows, per_window)):
        h, w = window_patch_dims(win, grid)
        if wmap.shape != (h, w):
            raise InvalidArgumentError(f"window {t} map is {wmap.shape}, expected {(h, w)}")
        r0, c0 = win.y0 // crop, win.x0 // crop
        if r0 + h > grid.grid_h or c0 + w > grid.grid_w:
            raise InvalidArgumentError(f"window {t} {win.as_tuple()} outside the padded image")
        sums[r0 : r0 + h, c0 : c0 + w] += wmap.values
    counts = coverage_counts(plan, grid)
    if np.any(counts == 0):
        raise InvalidArgumentError("window plan leaves patches uncovered")
    return ScoreMap(sums / counts)


def _detect_window(
    t: int,
    window: PixelRect,
    detector: DetectorProvider,
    objects: ObjectSet,
    tau_det: float,
    grid: PatchGrid,
    image: Optional[np.ndarray],
    membership: str,
) -> ScoreMap:
    pixels = None
    if image is not None:
        pixels = image[window.y0 : window.y1, window.x0 : window.x1]
    crop = Crop(rect=window, pixels=pixels)
    try:
        raw = detector.detect(crop, objects.labels, tau_det)
    except ProviderError as exc:
        if exc.index is None:
            exc.with_index(t)
        raise
    kept = filter_detections(raw, tau_det)
    LOGGER.debug("window {} {}: {} boxes, {} kept", t, window.as_tuple(), len(raw), len(kept))
    try:
        return window_confidence_map(window, kept, grid, membership)
    except InvalidArgumentError as exc:
        raise ProtocolError(str(exc), raw=[d.box.as_tuple() for d in kept], index=t) from exc


def detection_map(
    query: Query,
    grid: PatchGrid,
    plan: WindowPlan,
    objects: ObjectSet,
    detector: DetectorProvider,
    tau_det: float,
    image: Optional[np.ndarray] = None,
    membership: str = "any",
    workers: int = 1,
) -> ScoreMap:
    """Global detection confidence map for one query."""
    if not 0.0 <= tau_det <= 1.0:
        raise InvalidArgumentError(f"tau_det must lie in [0,1], got {tau_det}")
    t0 = time.perf_counter()

    def run(t: int) -> ScoreMap:
        return _detect_window(
            t, plan.windows[t], detector, objects, tau_det, grid, image, membership
        )

    idx = range(len(plan.windows))
    if workers > 1 and len(plan.windows) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            maps = list(pool.map(run, idx))
    else:
        maps = [run(t) for t in idx]

    out = global_confidence_map(plan, maps, grid)
    LOGGER.info(
        "detection map for {!r}: {} windows, labels={} in {:.1f} ms",
        query.text,
        len(plan.windows),
        list(objects.labels),
        (time.perf_counter() - t0) * 1000.0,
    )
    return out

from __future__ import annotations

from .m3_1_objects import (
    HeuristicExtractor,
    ObjectExtractorProvider,
    ObjectSet,
    extract_objects,
    heuristic_objects,
    normalize_labels,
)
from .m3_2_windows import WindowPlan, coverage_counts, plan_windows, window_patch_dims
from .m3_3_confidence import (
    MEMBERSHIP_MODES,
    Detection,
    DetectorProvider,
    detection_map,
    filter_detections,
    global_confidence_map,
    window_confidence_map,
)

__all__ = [
    "MEMBERSHIP_MODES",
    "Detection",
    "DetectorProvider",
    "HeuristicExtractor",
    "ObjectExtractorProvider",
    "ObjectSet",
    "WindowPlan",
    "coverage_counts",
    "detection_map",
    "extract_objects",
    "filter_detections",
    "global_confidence_map",
    "heuristic_objects",
    "normalize_labels",
    "plan_windows",
    "window_confidence_map",
    "window_patch_dims",
]

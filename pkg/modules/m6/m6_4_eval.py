"""M6.4 - Synthetic-scene evaluation harness.

Each scene is a SyntheticSceneSpec JSON file. For every scene and method the
pipeline runs with synthetic providers on a pixel-free image of the scene's
size, and the selection is scored against the planted target cells.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from modules.common.errors import InputError, InvalidArgumentError, MRDError
from modules.common.jsonio import f32
from modules.common.logs import get_logger
from modules.m1 import ImageDims
from modules.m4 import METHODS, execute_pipeline
from modules.m5 import (
    SyntheticSceneSpec,
    rescale_scene,
    selected_ground_truth,
    target_pixel_rect,
)

from .m6_1_config import RunConfig, build_providers, load_scene

LOGGER = get_logger("m6.eval")

DEFAULT_EVAL_METHODS = ("low_only", "multires", "multires+ovd")
DEFAULT_SWEEP_WEIGHTS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class EvalRecord:
    scene_id: str
    method: str
    recall_at_k: float
    precision_at_k: float
    target_fragmented: bool

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["recall_at_k"] = f32(self.recall_at_k)
        d["precision_at_k"] = f32(self.precision_at_k)
        return d


@dataclass
class EvalReport:
    methods: Tuple[str, ...]
    records: List[EvalRecord] = field(default_factory=list)
    errors: List[Dict[str, str]] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return bool(self.errors)

    def means(self) -> Dict[str, Dict[str, float]]:
        out: Dict[str, Dict[str, float]] = {}
        for m in self.methods:
            rows = [r for r in self.records if r.method == m]
            if not rows:
                continue
            out[m] = {
                "recall_at_k": sum(r.recall_at_k for r in rows) / len(rows),
                "precision_at_k": sum(r.precision_at_k for r in rows) / len(rows),
                "scenes": len(rows),
            }
        return out

    def recall_by_scene(self, method: str) -> Dict[str, float]:
        return {r.scene_id: r.recall_at_k for r in self.records if r.method == method}

    def to_dict(self) -> Dict[str, Any]:
        means = {
            m: {
                "recall_at_k": f32(v["recall_at_k"]),
                "precision_at_k": f32(v["precision_at_k"]),
                "scenes": int(v["scenes"]),
            }
            for m, v in self.means().items()
        }
        return {
            "methods": list(self.methods),
            "records": [r.to_dict() for r in self.records],
            "means": means,
            "errors": list(self.errors),
        }


def is_fragmented(spec: SyntheticSceneSpec) -> bool:
    """True when some real target spills over more than one low cell."""
    c = spec.crop_px
    for t in spec.true_targets():
        r = target_pixel_rect(t, c)
        if r.x0 // c != (r.x1 - 1) // c or r.y0 // c != (r.y1 - 1) // c:
            return True
    return False


def scene_config(spec: SyntheticSceneSpec, config: RunConfig) -> RunConfig:
    return config.with_overrides(crop_px=spec.crop_px)


def evaluate_scene(
    spec: SyntheticSceneSpec, config: RunConfig, methods: Sequence[str] = DEFAULT_EVAL_METHODS
) -> List[EvalRecord]:
    cfg = scene_config(spec, config)
    providers = build_providers(cfg, scene=spec)
    dims = ImageDims(spec.width_px, spec.height_px)
    fragmented = is_fragmented(spec)
    out = []
    for method in methods:
        result = execute_pipeline(spec.query_text(), dims, cfg, providers, method).result
        hits, gt = selected_ground_truth(result.selected, spec)
        out.append(
            EvalRecord(
                scene_id=spec.scene_id,
                method=method,
                recall_at_k=hits / gt if gt else 1.0,
                precision_at_k=hits / len(result.selected),
                target_fragmented=fragmented,
            )
        )
    return out


def _check_methods(methods: Sequence[str]) -> Tuple[str, ...]:
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise InvalidArgumentError(f"unknown methods {bad}; known: {', '.join(METHODS)}")
    return tuple(methods)


def _scene_files(scene_dir: Path) -> List[Path]:
    scene_dir = Path(scene_dir)
    if not scene_dir.is_dir():
        raise InputError(f"scene directory not found: {scene_dir}")
    return sorted(scene_dir.glob("*.json"))


def _run_one(path: Path, config: RunConfig, methods: Sequence[str]):
    try:
        spec = load_scene(path)
        return evaluate_scene(spec, config, methods), None
    except MRDError as exc:
        LOGGER.error("scene {} failed: {}", path.name, exc)
        return [], {"scene_id": path.stem, "error": str(exc)}


def run_eval(
    scene_dir: Path,
    config: RunConfig,
    methods: Sequence[str] = DEFAULT_EVAL_METHODS,
    workers: int = 1,
) -> EvalReport:
    """Evaluate every scene in a directory; failures are recorded, not raised."""
    methods = _check_methods(methods)
    files = _scene_files(scene_dir)
    report = EvalReport(methods=methods)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda p: _run_one(p, config, methods), files))
    else:
        outcomes = [_run_one(p, config, methods) for p in files]
    order = {m: i for i, m in enumerate(methods)}
    for records, err in outcomes:
        report.records.extend(records)
        if err is not None:
            report.errors.append(err)
    report.records.sort(key=lambda r: (r.scene_id, order[r.method]))
    report.errors.sort(key=lambda e: e["scene_id"])
    LOGGER.info(
        "evaluated {} scenes ({} failed) from {}", len(files), len(report.errors), scene_dir
    )
    return report


def format_table(report: EvalReport) -> str:
    lines = [f"{'method':<14} {'scenes':>6} {'recall@K':>9} {'precision@K':>12}"]
    for method, v in report.means().items():
        lines.append(
            f"{method:<14} {int(v['scenes']):>6} {v['recall_at_k']:>9.4f} "
            f"{v['precision_at_k']:>12.4f}"
        )
    if report.errors:
        lines.append(f"failed scenes: {', '.join(e['scene_id'] for e in report.errors)}")
    return "\n".join(lines)


@dataclass(frozen=True)
class SweepPoint:
    method: str
    crop_px: Optional[int]  # None: each scene on its own lattice
    weight_w: float
    window_px: int
    stride_px: int
    mean_recall: float
    scenes: int

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["weight_w"] = f32(self.weight_w)
        d["mean_recall"] = f32(self.mean_recall)
        return d


def sweep(
    scene_dir: Path,
    config: RunConfig,
    weights: Sequence[float] = DEFAULT_SWEEP_WEIGHTS,
    window_sizes: Optional[Sequence[int]] = None,
    methods: Sequence[str] = ("multires+ovd",),
    crop_sizes: Optional[Sequence[int]] = None,
) -> List[SweepPoint]:
    """Mean recall@K over a battery for each (crop, method, window, weight) point.

    Without ``crop_sizes`` every scene keeps its own lattice; with them each
    scene is re-latticed at every size while its pixels stay put. Strides keep
    the configured window:stride ratio.
    """
    methods = _check_methods(methods)
    specs = [load_scene(p) for p in _scene_files(scene_dir)]
    crops: List[Optional[int]] = list(crop_sizes) if crop_sizes else [None]
    bad = [c for c in crops if c is not None and c < 1]
    if bad:
        raise InvalidArgumentError(f"crop sizes must be >= 1, got {bad}")
    sizes = list(window_sizes) if window_sizes else [config.window_px[0]]
    ratio = config.stride_px[0] / config.window_px[0]
    points = []
    for crop in crops:
        battery = specs if crop is None else [rescale_scene(s, crop) for s in specs]
        for method in methods:
            for size in sizes:
                stride = max(1, int(round(size * ratio)))
                for w in weights:
                    cfg = config.with_overrides(weight_w=w, window_px=size, stride_px=stride)
                    recalls = [evaluate_scene(s, cfg, [method])[0].recall_at_k for s in battery]
                    mean = sum(recalls) / len(recalls) if recalls else 0.0
                    points.append(SweepPoint(method, crop, w, size, stride, mean, len(recalls)))
                    LOGGER.debug(
                        "sweep crop={} {} w={} window={} recall={:.4f}",
                        crop,
                        method,
                        w,
                        size,
                        mean,
                    )
    return points


def format_sweep(points: Sequence[SweepPoint]) -> str:
    lines = [
        f"{'crop':>5} {'method':<14} {'window':>7} {'stride':>7} {'w':>5} {'recall@K':>9}"
    ]
    for p in points:
        crop = "scene" if p.crop_px is None else str(p.crop_px)
        lines.append(
            f"{crop:>5} {p.method:<14} {p.window_px:>7} {p.stride_px:>7} "
            f"{p.weight_w:>5.2f} {p.mean_recall:>9.4f}"
        )
    return "\n".join(lines)

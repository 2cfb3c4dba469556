"""CLI registrar for Module 6 (retrieve / eval / render / sweep / make-scene-image)."""

from __future__ import annotations

import argparse
import sys
from functools import wraps
from pathlib import Path
from typing import Callable, Dict, Optional

from modules.common.errors import (
    DegenerateInputError,
    InputError,
    InvalidArgumentError,
    PipelineError,
    ProviderError,
)
from modules.common.jsonio import write_json
from modules.common.logs import get_logger
from modules.m4 import DEFAULT_METHOD, METHODS, execute_pipeline
from modules.m5 import render_scene

from .m6_1_config import (
    ROOT,
    RunConfig,
    build_providers,
    build_run_config,
    load_presets,
    load_providers_config,
    load_scene,
)
from .m6_2_imageio import load_png, save_png
from .m6_3_export import read_map, render_heatmap, write_run
from .m6_4_eval import (
    DEFAULT_EVAL_METHODS,
    DEFAULT_SWEEP_WEIGHTS,
    evaluate_scene,
    format_sweep,
    format_table,
    run_eval,
    sweep,
)

LOGGER = get_logger("m6.cli")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_PROVIDER = 3
EXIT_CONFIG = 4


def exit_code_for(exc: BaseException) -> int:
    while isinstance(exc, PipelineError):
        exc = exc.cause
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, (ProviderError, DegenerateInputError)):
        return EXIT_PROVIDER
    if isinstance(exc, InvalidArgumentError):
        return EXIT_CONFIG
    return EXIT_UNEXPECTED


def _guarded(fn: Callable[[argparse.Namespace], int]) -> Callable[[argparse.Namespace], int]:
    @wraps(fn)
    def run(args: argparse.Namespace) -> int:
        try:
            return fn(args)
        except Exception as exc:  # noqa: BLE001
            code = exit_code_for(exc)
            if code == EXIT_UNEXPECTED:
                LOGGER.opt(exception=exc).error("unexpected failure: {}", exc)
            else:
                LOGGER.error("{} (exit {})", exc, code)
            return code

    return run


def _csv(cast: Callable[[str], object]) -> Callable[[str], list]:
    def parse(text: str) -> list:
        return [cast(t.strip()) for t in text.split(",") if t.strip()]

    return parse


def add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default=None, help="vstar | hr4k | hr8k")
    p.add_argument("--crop-px", type=int, default=None, dest="crop_px")
    p.add_argument("--ratio-k", type=int, default=None, dest="ratio_k")
    p.add_argument("--window-px", default=None, dest="window_px", help="N or WxH")
    p.add_argument("--stride-px", default=None, dest="stride_px", help="N or WxH")
    p.add_argument("--tau-det", type=float, default=None, dest="tau_det")
    p.add_argument("--weight-w", type=float, default=None, dest="weight_w")
    p.add_argument("--top-k", type=int, default=None, dest="top_k")
    p.add_argument("--membership", choices=["any", "center"], default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument(
        "--parallel-branches",
        action="store_true",
        default=None,
        dest="parallel_branches",
        help="Run the semantic and detection branches concurrently",
    )


_RUN_KEYS = (
    "crop_px",
    "ratio_k",
    "window_px",
    "stride_px",
    "tau_det",
    "weight_w",
    "top_k",
    "membership",
    "workers",
    "batch_size",
    "parallel_branches",
)


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in _RUN_KEYS}
    return build_run_config(args.preset, overrides)


def register(sub: argparse._SubParsersAction, verifiers: Dict[str, Callable]) -> None:
    p = sub.add_parser("retrieve", help="Retrieve query-relevant patches from a PNG")
    p.add_argument("image", type=Path)
    p.add_argument("--query", "-q", required=True)
    p.add_argument("--method", choices=METHODS, default=DEFAULT_METHOD)
    p.add_argument("--providers", type=Path, default=None, help="Provider endpoints JSON")
    p.add_argument("--synthetic", type=Path, default=None, help="SyntheticSceneSpec JSON")
    p.add_argument("--out", type=Path, default=None, help="Result JSON (default: stdout)")
    p.add_argument("--dump-maps", type=Path, default=None, dest="dump_maps", metavar="DIR")
    add_run_flags(p)
    p.set_defaults(func=_guarded(cmd_retrieve))

    p = sub.add_parser("eval", help="Evaluate methods on a synthetic scene battery")
    p.add_argument("scene_dir", type=Path)
    p.add_argument(
        "--methods", type=_csv(str), default=list(DEFAULT_EVAL_METHODS), help="Comma list"
    )
    p.add_argument("--out", type=Path, default=None, help="Report JSON")
    p.add_argument("--scene-workers", type=int, default=1, dest="scene_workers")
    add_run_flags(p)
    p.set_defaults(func=_guarded(cmd_eval))

    p = sub.add_parser("render", help="Print a map JSON as a text heatmap")
    p.add_argument("map_json", type=Path)
    p.set_defaults(func=_guarded(cmd_render))

    p = sub.add_parser("sweep", help="Crop / window / detection-weight study over a battery")
    p.add_argument("scene_dir", type=Path)
    p.add_argument(
        "--weights", type=_csv(float), default=list(DEFAULT_SWEEP_WEIGHTS), help="Comma list"
    )
    p.add_argument("--window-sizes", type=_csv(int), default=None, dest="window_sizes")
    p.add_argument("--methods", type=_csv(str), default=["multires+ovd"], help="Comma list")
    p.add_argument(
        "--crop-sizes",
        type=_csv(int),
        default=None,
        dest="crop_sizes",
        help="Re-lattice every scene at each size, e.g. 112,224,448",
    )
    p.add_argument("--out", type=Path, default=None)
    add_run_flags(p)
    p.set_defaults(func=_guarded(cmd_sweep))

    p = sub.add_parser("make-scene-image", help="Render a SyntheticSceneSpec to PNG")
    p.add_argument("scene", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_guarded(cmd_make_scene_image))

    verifiers["m6"] = verify


def cmd_retrieve(args: argparse.Namespace) -> int:
    pixels = load_png(args.image)
    config = run_config_from_args(args)
    scene = load_scene(args.synthetic) if args.synthetic is not None else None
    providers_cfg = None if scene is not None else load_providers_config(args.providers)
    with build_providers(config, providers_cfg, scene) as providers:
        run = execute_pipeline(args.query, pixels, config, providers, args.method)
    payload = write_run(run, args.out, args.dump_maps)
    if args.out is None:
        sys.stdout.write(payload.decode("utf-8"))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = run_config_from_args(args)
    report = run_eval(args.scene_dir, config, args.methods, workers=args.scene_workers)
    if args.out is not None:
        write_json(args.out, report.to_dict())
    print(format_table(report))
    return EXIT_UNEXPECTED if report.failed else EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    print(render_heatmap(read_map(args.map_json)))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = run_config_from_args(args)
    points = sweep(
        args.scene_dir,
        config,
        args.weights,
        args.window_sizes,
        methods=args.methods,
        crop_sizes=args.crop_sizes,
    )
    if args.out is not None:
        write_json(args.out, [p.to_dict() for p in points])
    print(format_sweep(points))
    return EXIT_OK


def cmd_make_scene_image(args: argparse.Namespace) -> int:
    spec = load_scene(args.scene)
    save_png(args.out, render_scene(spec))
    LOGGER.info("rendered {} ({}x{}) to {}", spec.scene_id, spec.width_px, spec.height_px, args.out)
    return EXIT_OK


def verify(scene_path: Optional[Path] = None) -> bool:
    """Presets load, and one distractor scene retrieves its targets end to end."""
    presets = load_presets()
    missing = {"vstar", "hr4k", "hr8k"} - set(presets)
    if missing:
        print(f"M6 verify → presets missing: {sorted(missing)}")
        return False
    path = scene_path or ROOT / "data" / "eval" / "scenes" / "distractor" / "scene_000.json"
    if not path.exists():
        print(f"M6 verify → missing {path} (run python -m modules.m6.dev_make_scenes)")
        return False
    records = evaluate_scene(load_scene(path), RunConfig(), ["multires", "multires+ovd"])
    ok = records[1].recall_at_k >= records[0].recall_at_k
    print(
        "M6 verify → recall multires={:.3f} multires+ovd={:.3f} {}".format(
            records[0].recall_at_k, records[1].recall_at_k, "OK" if ok else "FAIL"
        )
    )
    return ok

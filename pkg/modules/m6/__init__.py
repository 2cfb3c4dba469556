from __future__ import annotations

from .m6_1_config import (
    ProvidersConfig,
    RunConfig,
    build_providers,
    build_run_config,
    load_presets,
    load_providers_config,
    load_scene,
)
from .m6_2_imageio import load_png, save_png
from .m6_3_export import RAMP, map_to_dict, read_map, render_heatmap, write_map, write_run
from .m6_4_eval import (
    EvalRecord,
    EvalReport,
    SweepPoint,
    evaluate_scene,
    format_sweep,
    format_table,
    is_fragmented,
    run_eval,
    sweep,
)

__all__ = [
    "EvalRecord",
    "EvalReport",
    "ProvidersConfig",
    "RAMP",
    "RunConfig",
    "SweepPoint",
    "build_providers",
    "build_run_config",
    "evaluate_scene",
    "format_sweep",
    "format_table",
    "is_fragmented",
    "load_png",
    "load_presets",
    "load_providers_config",
    "load_scene",
    "map_to_dict",
    "read_map",
    "render_heatmap",
    "run_eval",
    "save_png",
    "sweep",
    "write_map",
    "write_run",
]

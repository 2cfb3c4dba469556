"""M6.3 - Map files, result artifacts and text heatmaps.

Map file: {"grid_h", "grid_w", "values": [row-major floats]}.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import orjson

from modules.common.errors import ConfigError, InputError, InvalidArgumentError
from modules.common.jsonio import dumps, f32_list, write_json
from modules.common.logs import get_logger
from modules.m2 import ScoreMap
from modules.m4 import PipelineRun

LOGGER = get_logger("m6.export")

RAMP = " .:-=+*#%@"


def map_to_dict(score_map: ScoreMap) -> Dict[str, Any]:
    return {
        "grid_h": score_map.grid_h,
        "grid_w": score_map.grid_w,
        "values": f32_list(score_map.values.ravel()),
    }


def write_map(path: Path, score_map: ScoreMap) -> None:
    write_json(Path(path), map_to_dict(score_map))


def read_map(path: Path) -> ScoreMap:
    path = Path(path)
    try:
        raw = orjson.loads(path.read_bytes())
    except OSError as exc:
        raise InputError(f"cannot read map file {path}: {exc}") from exc
    except orjson.JSONDecodeError as exc:
        raise ConfigError(f"malformed map JSON {path}: {exc}") from exc
    if not isinstance(raw, dict) or not {"grid_h", "grid_w", "values"} <= raw.keys():
        raise ConfigError(f"{path}: map needs grid_h, grid_w and values")
    try:
        h, w = int(raw["grid_h"]), int(raw["grid_w"])
        return ScoreMap.from_flat(h, w, np.asarray(raw["values"], dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid map: {exc}") from exc


def render_heatmap(score_map: ScoreMap, ramp: str = RAMP) -> str:
    """One character per cell; v in [0,1] maps to ramp[floor(v * (len(ramp) - 1))].

    Ten characters give nine equal bins over [0, 1) plus the last character,
    which only an exact 1.0 reaches. 0 renders as " ", 0.55 as "=" and 1 as "@".
    """
    if len(ramp) < 2:
        raise InvalidArgumentError("ramp needs at least two characters")
    idx = np.floor(score_map.values * (len(ramp) - 1)).astype(np.int64)
    idx = np.clip(idx, 0, len(ramp) - 1)
    return "\n".join("".join(ramp[i] for i in row) for row in idx)


def write_run(
    run: PipelineRun,
    result_path: Optional[Path] = None,
    dump_dir: Optional[Path] = None,
) -> bytes:
    """Serialize the result (returned, and written when a path is given) plus optional maps."""
    payload = dumps(run.result.to_dict())
    if result_path is not None:
        Path(result_path).parent.mkdir(parents=True, exist_ok=True)
        Path(result_path).write_bytes(payload)
    if dump_dir is not None:
        dump_dir = Path(dump_dir)
        art = run.artifacts
        if art.semantic_map is not None:
            write_map(dump_dir / "semantic_map.json", art.semantic_map)
        if art.detection_map is not None:
            write_map(dump_dir / "detection_map.json", art.detection_map)
        write_map(dump_dir / "fused_map.json", run.result.fused_map)
        write_json(
            dump_dir / "regions.json",
            {
                "method": art.method,
                "objects": list(art.objects.labels) if art.objects is not None else [],
                "windows": len(art.plan) if art.plan is not None else 0,
                "regions": [list(r.as_tuple()) for r in run.result.regions],
            },
        )
        LOGGER.info("dumped maps to {}", dump_dir)
    return payload

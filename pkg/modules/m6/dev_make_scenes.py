"""Regenerate the checked-in synthetic scene batteries.

fragmented: three half-coherent targets per scene, each centred on the inner
corner of a coarse cell, so every low crop holds only a fragment while the
enclosing coarse crop holds the whole target.

distractor: two half-coherent targets straddling coarse boundaries plus three
or four fully coherent, coarse-aligned distractors of another class on a
bright background. The semantic branch prefers the distractors; only the
detector separates them.
"""

from __future__ import annotations

from pathlib import Path
from typing import List

from modules.common.jsonio import write_json
from modules.common.logs import get_logger
from modules.m5 import SyntheticSceneSpec, SyntheticTarget

from .m6_1_config import ROOT

LOGGER = get_logger("m6.scenes")

SCENES_DIR = ROOT / "data" / "eval" / "scenes"
N_SCENES = 50
GRID = 16

_FRAG_LABELS = ("umbrella", "bicycle", "dog")
_FRAG_DX = (1, 6, 3)
_FRAG_DY = (2, 5, 0)
_DISTRACTOR_CELLS = ((7, 0), (7, 3), (0, 7), (3, 7))


def fragmented_scene(i: int) -> SyntheticSceneSpec:
    a = 0.5 if i % 2 == 0 else 0.25
    targets: List[SyntheticTarget] = []
    for j, label in enumerate(_FRAG_LABELS):
        cx = (3 * i + _FRAG_DX[j]) % (GRID // 2)
        cy = (7 * i + _FRAG_DY[j]) % (GRID // 2)
        mx, my = 2 * cx + 1, 2 * cy + 1
        targets.append(
            SyntheticTarget(rect=(mx - a, my - a, mx + a, my + a), label=label, coherence=0.5)
        )
    return SyntheticSceneSpec(
        scene_id=f"fragmented_{i:03d}",
        grid_h=GRID,
        grid_w=GRID,
        targets=tuple(targets),
        noise_seed=1000 + i,
        noise_level=0.1,
        background_level=0.4,
    )


def distractor_scene(i: int) -> SyntheticSceneSpec:
    targets: List[SyntheticTarget] = []
    for cx, cy in ((i % 2, i % 3), (4 + (i // 2) % 2, 4 + (i // 3) % 2)):
        x, y = 2 * cx + 1.5, 2 * cy + 1.5
        targets.append(
            SyntheticTarget(rect=(x, y, x + 1.0, y + 1.0), label="umbrella", coherence=0.5)
        )
    for dx, dy in _DISTRACTOR_CELLS[: 3 + i % 2]:
        targets.append(
            SyntheticTarget(
                rect=(2.0 * dx, 2.0 * dy, 2.0 * dx + 2.0, 2.0 * dy + 2.0),
                label="rock",
                coherence=1.0,
                distractor=True,
            )
        )
    return SyntheticSceneSpec(
        scene_id=f"distractor_{i:03d}",
        grid_h=GRID,
        grid_w=GRID,
        targets=tuple(targets),
        noise_seed=2000 + i,
        noise_level=0.1,
        background_level=0.6,
    )


BATTERIES = {"fragmented": fragmented_scene, "distractor": distractor_scene}


def make_battery(kind: str, out_dir: Path = SCENES_DIR, n: int = N_SCENES) -> List[Path]:
    make = BATTERIES[kind]
    paths = []
    for i in range(n):
        path = Path(out_dir) / kind / f"scene_{i:03d}.json"
        write_json(path, make(i).model_dump(mode="json"))
        paths.append(path)
    LOGGER.info("wrote {} {} scenes under {}", n, kind, Path(out_dir) / kind)
    return paths


def main(out_dir: Path = SCENES_DIR) -> None:
    for kind in BATTERIES:
        make_battery(kind, out_dir)


if __name__ == "__main__":
    main()

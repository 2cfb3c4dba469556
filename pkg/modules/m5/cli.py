# modules/m5/cli.py
from __future__ import annotations

import argparse
from pathlib import Path

from modules.m1 import PixelRect

from .m5_3_synthetic import SyntheticSceneSpec, SyntheticTarget, synthetic_detector


def _handle_serve_stub(args: argparse.Namespace) -> int:
    from services.provider_stub_svc.main import serve

    serve(args.scene, args.port)
    return 0


def verify() -> None:
    """Aggregate verifier for Module 5."""
    spec = SyntheticSceneSpec(
        grid_h=4,
        grid_w=4,
        targets=(
            SyntheticTarget(rect=(1.5, 1.5, 2.5, 2.5), label="cat", coherence=0.5),
            SyntheticTarget(rect=(0, 0, 1, 1), label="rock", coherence=1.0, distractor=True),
        ),
    )
    window = PixelRect(112, 112, 448, 448)
    dets = synthetic_detector(spec).detect_rect(window, ["cat", "rock"])
    print(f"[m5.3] synthetic detector: {[(d.label, d.box.as_tuple(), d.score) for d in dets]}")
    if len(dets) != 1 or dets[0].box.as_tuple() != (56, 56, 168, 168):
        raise SystemExit("[m5] FAILED: synthetic detector box")
    print("M5 verification passed.")


def register(sub: argparse._SubParsersAction, verifiers: dict) -> None:
    sp = sub.add_parser("serve-stub", help="Serve synthetic providers over the wire protocol")
    sp.add_argument("--scene", type=Path, default=None, help="SyntheticSceneSpec JSON")
    sp.add_argument("--port", type=int, default=None)
    sp.set_defaults(func=_handle_serve_stub)

    verifiers["m5"] = verify

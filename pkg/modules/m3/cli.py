# modules/m3/cli.py
from __future__ import annotations

import argparse
import sys

from modules.common.jsonio import dumps
from modules.m1 import ImageDims, PixelRect, build_grid

from .m3_1_objects import heuristic_objects
from .m3_2_windows import WindowPlan, coverage_counts, plan_windows
from .m3_3_confidence import Detection, global_confidence_map, window_confidence_map


def _pair(text: str) -> tuple:
    parts = text.lower().split("x")
    if len(parts) == 1:
        return (int(parts[0]), int(parts[0]))
    return (int(parts[0]), int(parts[1]))


def _handle_plan_windows(args: argparse.Namespace) -> int:
    grid = build_grid(ImageDims(args.width, args.height), args.crop_px, args.ratio_k)
    plan = plan_windows(grid, _pair(args.window_px), _pair(args.stride_px))
    sys.stdout.write(dumps(plan.to_dict()).decode("utf-8"))
    return 0


def _handle_objects(args: argparse.Namespace) -> int:
    sys.stdout.write(dumps(heuristic_objects(args.query)).decode("utf-8"))
    return 0


def verify() -> None:
    """Aggregate verifier for Module 3."""
    grid = build_grid(ImageDims(2240, 2240), 112, 2)
    plan = plan_windows(grid, (1232, 1232), (896, 896))
    xs = sorted({w.x0 for w in plan.windows})
    print(f"[m3.2] 2240px window origins {xs}, {len(plan)} windows")
    if xs != [0, 896, 1008] or len(plan) != 9:
        raise SystemExit("[m3] FAILED: unexpected window plan")
    if coverage_counts(plan, grid).min() < 1:
        raise SystemExit("[m3] FAILED: uncovered patches")

    small = build_grid(ImageDims(448, 224), 112, 2)
    w1, w2 = PixelRect(0, 0, 336, 224), PixelRect(112, 0, 448, 224)
    box = PixelRect(0, 0, 112, 112)
    m1 = window_confidence_map(w1, [Detection(PixelRect(112, 0, 224, 112), 0.8, "x")], small)
    m2 = window_confidence_map(w2, [Detection(box, 0.6, "x")], small)
    two = WindowPlan(windows=(w1, w2), window_px=(336, 224), stride_px=(112, 224))
    g = global_confidence_map(two, [m1, m2], small)
    print(f"[m3.3] overlap average at (0,1) = {g.values[0, 1]:.3f}")
    if abs(g.values[0, 1] - 0.7) > 1e-9:
        raise SystemExit("[m3] FAILED: overlap averaging")
    print("M3 verification passed.")


def register(sub: argparse._SubParsersAction, verifiers: dict) -> None:
    sp = sub.add_parser("plan-windows", help="Print the sliding-window plan as JSON")
    sp.add_argument("--width", type=int, required=True)
    sp.add_argument("--height", type=int, required=True)
    sp.add_argument("--crop-px", type=int, default=112, dest="crop_px")
    sp.add_argument("--ratio-k", type=int, default=2, dest="ratio_k")
    sp.add_argument("--window-px", default="1232", dest="window_px", help="N or WxH")
    sp.add_argument("--stride-px", default="896", dest="stride_px", help="N or WxH")
    sp.set_defaults(func=_handle_plan_windows)

    sp = sub.add_parser("objects", help="Heuristic object phrases for a query (JSON list)")
    sp.add_argument("query")
    sp.set_defaults(func=_handle_objects)

    verifiers["m3"] = verify

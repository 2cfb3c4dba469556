import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modules.common.errors import InvalidArgumentError, ProtocolError, ProviderError
from modules.m1 import ImageDims, PixelRect, build_grid
from modules.m2 import Crop, Query
from modules.m3 import (
    Detection,
    HeuristicExtractor,
    ObjectSet,
    WindowPlan,
    coverage_counts,
    detection_map,
    extract_objects,
    filter_detections,
    global_confidence_map,
    heuristic_objects,
    plan_windows,
    window_confidence_map,
)


class ListExtractor:
    def __init__(self, labels):
        self.labels = labels

    def extract(self, query):
        return list(self.labels)


class BoxDetector:
    """Returns fixed global boxes, clipped and made window-local."""

    def __init__(self, boxes):
        self.boxes = boxes  # [(PixelRect, score)]
        self.windows = []

    def detect(self, window, labels, threshold):
        self.windows.append(window.rect)
        out = []
        for box, score in self.boxes:
            w = window.rect
            x0, y0 = max(box.x0, w.x0), max(box.y0, w.y0)
            x1, y1 = min(box.x1, w.x1), min(box.y1, w.y1)
            if x0 < x1 and y0 < y1:
                local = PixelRect(x0 - w.x0, y0 - w.y0, x1 - w.x0, y1 - w.y0)
                out.append(Detection(local, score, "x"))
        return out


# --- objects -----------------------------------------------------------------


def test_extract_objects_uses_provider_labels():
    q = Query("What color is the umbrella on the beach?")
    assert extract_objects(q, ListExtractor(["umbrella"])).labels == ("umbrella",)


def test_extract_objects_dedups_after_normalization():
    assert extract_objects(Query("Is there a dog?"), ListExtractor(["Dog", "dog "])).labels == (
        "dog",
    )


def test_extract_objects_empty_provider_falls_back_to_heuristic():
    objs = extract_objects(Query("Where is the red umbrella?"), ListExtractor([]))
    assert objs.labels == ("umbrella",)


def test_heuristic_objects():
    assert heuristic_objects("What color is the umbrella on the beach?") == ["umbrella", "beach"]
    assert heuristic_objects("Where are the dogs?") == ["dog"]
    assert heuristic_objects("Is it there?") == ["is it there?"]
    assert heuristic_objects("Is the small black dog left of the big red car?") == ["dog", "car"]
    assert HeuristicExtractor().extract("the glass") == ["glass"]


def test_object_set_validation():
    with pytest.raises(InvalidArgumentError):
        ObjectSet(())
    with pytest.raises(InvalidArgumentError):
        ObjectSet(("a", "a"))


# --- windows -----------------------------------------------------------------


def test_plan_windows_2240_example():
    grid = build_grid(ImageDims(2240, 2240), 112, 2)
    plan = plan_windows(grid, (1232, 1232), (896, 896))
    assert sorted({w.x0 for w in plan.windows}) == [0, 896, 1008]
    assert len(plan) == 9
    assert plan.windows[0].as_tuple() == (0, 0, 1232, 1232)
    assert plan.windows[-1].as_tuple() == (1008, 1008, 2240, 2240)


def test_plan_windows_snap_window_down_to_coarser_lattice():
    grid = build_grid(ImageDims(2240, 2240), 224, 2)
    plan = plan_windows(grid, (1232, 1232), (896, 896))
    assert plan.window_px == (1120, 1120)
    assert sorted({w.x0 for w in plan.windows}) == [0, 896, 1120]
    assert plan.windows[-1].as_tuple() == (1120, 1120, 2240, 2240)


def test_plan_windows_larger_than_image():
    grid = build_grid(ImageDims(1120, 1120), 112, 2)
    plan = plan_windows(grid, (1232, 1232), (896, 896))
    assert [w.as_tuple() for w in plan.windows] == [(0, 0, 1120, 1120)]


def test_plan_windows_exact_tiling():
    grid = build_grid(ImageDims(2240, 1120), 112, 2)
    plan = plan_windows(grid, (1120, 1120), (1120, 1120))
    assert [w.as_tuple() for w in plan.windows] == [(0, 0, 1120, 1120), (1120, 0, 2240, 1120)]


def test_plan_windows_rejects_zero_stride():
    grid = build_grid(ImageDims(448, 448), 112, 2)
    with pytest.raises(InvalidArgumentError):
        plan_windows(grid, (224, 224), (0, 0))
    with pytest.raises(InvalidArgumentError):
        plan_windows(grid, (0, 224), (112, 112))


@settings(max_examples=300, deadline=None)
@given(
    cw=st.integers(1, 12),
    ch=st.integers(1, 12),
    win=st.integers(1, 3000),
    stride=st.integers(1, 3000),
)
def test_plan_windows_cover_and_align(cw, ch, win, stride):
    crop = 112
    grid = build_grid(ImageDims(cw * 224, ch * 224), crop, 2)
    plan = plan_windows(grid, (win, win), (stride, stride))
    assert len(plan) >= 1
    for w in plan.windows:
        assert all(v % crop == 0 for v in w.as_tuple())
        assert grid.bounds.contains(w)
    assert coverage_counts(plan, grid).min() >= 1


# --- confidence maps ---------------------------------------------------------


def test_filter_detections_strict():
    dets = [Detection(PixelRect(0, 0, 1, 1), s, "x") for s in (0.9, 0.3, 0.31)]
    assert [d.score for d in filter_detections(dets, 0.3)] == [0.9, 0.31]
    zero = [Detection(PixelRect(0, 0, 1, 1), s, "x") for s in (0.0, 0.2)]
    assert [d.score for d in filter_detections(zero, 0.0)] == [0.2]
    assert filter_detections([], 0.5) == []


def test_detection_score_range():
    with pytest.raises(InvalidArgumentError):
        Detection(PixelRect(0, 0, 1, 1), 1.5, "x")


def test_window_confidence_map_examples():
    grid = build_grid(ImageDims(448, 448), 112, 2)
    win = PixelRect(0, 0, 448, 448)
    m = window_confidence_map(win, [Detection(PixelRect(10, 10, 200, 100), 0.9, "x")], grid)
    expected = np.zeros((4, 4))
    expected[0, 0:2] = 0.9
    assert np.array_equal(m.values, expected)

    dets = [
        Detection(PixelRect(0, 0, 50, 50), 0.7, "x"),
        Detection(PixelRect(20, 20, 60, 60), 0.9, "x"),
    ]
    assert window_confidence_map(win, dets, grid).values[0, 0] == 0.9
    assert np.all(window_confidence_map(win, [], grid).values == 0.0)


def test_window_confidence_map_center_membership():
    grid = build_grid(ImageDims(448, 448), 112, 2)
    win = PixelRect(0, 0, 448, 448)
    # covers centre of (0,0) only; touches (0,1) without its centre
    det = Detection(PixelRect(0, 0, 150, 100), 0.5, "x")
    any_map = window_confidence_map(win, [det], grid, membership="any")
    center_map = window_confidence_map(win, [det], grid, membership="center")
    assert any_map.values[0, 1] == 0.5
    assert center_map.values[0, 1] == 0.0 and center_map.values[0, 0] == 0.5


def test_window_confidence_map_rejects_outside_box():
    grid = build_grid(ImageDims(448, 448), 112, 2)
    win = PixelRect(0, 0, 224, 224)
    with pytest.raises(InvalidArgumentError):
        window_confidence_map(win, [Detection(PixelRect(0, 0, 300, 10), 0.5, "x")], grid)


def test_global_map_averages_overlaps():
    grid = build_grid(ImageDims(448, 224), 112, 2)
    w1, w2 = PixelRect(0, 0, 336, 224), PixelRect(112, 0, 448, 224)
    plan = WindowPlan(windows=(w1, w2), window_px=(336, 224), stride_px=(112, 224))
    m1 = window_confidence_map(w1, [Detection(PixelRect(112, 0, 224, 112), 0.8, "x")], grid)
    m2 = window_confidence_map(w2, [Detection(PixelRect(0, 0, 112, 112), 0.6, "x")], grid)
    g = global_confidence_map(plan, [m1, m2], grid)
    assert g.values[0, 1] == pytest.approx(0.7, abs=1e-12)

    single = window_confidence_map(w1, [Detection(PixelRect(0, 0, 112, 112), 0.5, "x")], grid)
    g = global_confidence_map(plan, [single, m2], grid)
    assert g.values[0, 0] == pytest.approx(0.5)
    with pytest.raises(InvalidArgumentError):
        global_confidence_map(plan, [m1], grid)


def test_detection_map_no_detections_is_zero():
    grid = build_grid(ImageDims(896, 896), 112, 2)
    plan = plan_windows(grid, (448, 448), (224, 224))
    out = detection_map(Query("q"), grid, plan, ObjectSet(("x",)), BoxDetector([]), 0.3)
    assert np.all(out.values == 0.0)


def test_detection_map_single_window():
    grid = build_grid(ImageDims(448, 448), 112, 2)
    plan = plan_windows(grid, (448, 448), (448, 448))
    box = PixelRect(120, 0, 300, 100)
    out = detection_map(Query("q"), grid, plan, ObjectSet(("x",)), BoxDetector([(box, 0.8)]), 0.3)
    want = window_confidence_map(plan.windows[0], [Detection(box, 0.8, "x")], grid)
    assert np.array_equal(out.values, want.values)


def test_detection_map_provider_error_has_window_index():
    grid = build_grid(ImageDims(896, 448), 112, 2)
    plan = plan_windows(grid, (448, 448), (448, 448))

    class FailSecond(BoxDetector):
        def detect(self, window, labels, threshold):
            if window.rect.x0 > 0:
                raise ProviderError("boom")
            return []

    with pytest.raises(ProviderError) as info:
        detection_map(Query("q"), grid, plan, ObjectSet(("x",)), FailSecond([]), 0.3)
    assert info.value.index == 1


def test_detection_map_box_outside_window_is_protocol_error():
    grid = build_grid(ImageDims(448, 448), 112, 2)
    plan = plan_windows(grid, (224, 224), (224, 224))

    class Sloppy:
        def detect(self, window, labels, threshold):
            return [Detection(PixelRect(0, 0, 500, 500), 0.9, "x")]

    with pytest.raises(ProtocolError):
        detection_map(Query("q"), grid, plan, ObjectSet(("x",)), Sloppy(), 0.3)


def _brute_force(grid, plan, boxes, tau):
    """Per patch: enumerate windows containing it, max over kept intersecting boxes, average."""
    crop = grid.crop_px
    out = np.zeros((grid.grid_h, grid.grid_w))
    for r in range(grid.grid_h):
        for c in range(grid.grid_w):
            cell = PixelRect(c * crop, r * crop, (c + 1) * crop, (r + 1) * crop)
            vals = []
            for w in plan.windows:
                if not w.contains(cell):
                    continue
                best = 0.0
                for box, score in boxes:
                    if score <= tau:
                        continue
                    x0, y0 = max(box.x0, w.x0), max(box.y0, w.y0)
                    x1, y1 = min(box.x1, w.x1), min(box.y1, w.y1)
                    if x0 >= x1 or y0 >= y1:
                        continue
                    clipped = PixelRect(x0, y0, x1, y1)
                    if clipped.intersects(cell):
                        best = max(best, score)
                vals.append(best)
            out[r, c] = sum(vals) / len(vals)
    return out


@st.composite
def _instances(draw):
    crop = 8
    gw, gh = 2 * draw(st.integers(1, 16)), 2 * draw(st.integers(1, 16))
    grid = build_grid(ImageDims(gw * crop, gh * crop), crop, 2)
    win = draw(st.integers(crop, gw * crop))
    stride = draw(st.integers(crop, gw * crop))
    plan = plan_windows(grid, (win, win), (stride, stride))
    if len(plan) > 8:
        # truncate, then restore coverage with one full-image window
        plan = WindowPlan(
            windows=plan.windows[:7] + (grid.bounds,),
            window_px=plan.window_px,
            stride_px=plan.stride_px,
        )
    boxes = []
    for _ in range(draw(st.integers(0, 16))):
        x0 = draw(st.integers(0, gw * crop - 1))
        y0 = draw(st.integers(0, gh * crop - 1))
        x1 = draw(st.integers(x0 + 1, gw * crop))
        y1 = draw(st.integers(y0 + 1, gh * crop))
        boxes.append((PixelRect(x0, y0, x1, y1), draw(st.floats(0, 1))))
    tau = draw(st.floats(0, 1))
    return grid, plan, boxes, tau


@settings(max_examples=200, deadline=None)
@given(_instances())
def test_detection_map_matches_brute_force(instance):
    grid, plan, boxes, tau = instance
    got = detection_map(Query("q"), grid, plan, ObjectSet(("x",)), BoxDetector(boxes), tau)
    assert np.max(np.abs(got.values - _brute_force(grid, plan, boxes, tau))) <= 1e-9


def _local_dets(window, boxes):
    return BoxDetector(boxes).detect(Crop(rect=window), ["x"], 0.0)


@settings(max_examples=200, deadline=None)
@given(_instances())
def test_window_map_never_drops_when_a_detection_is_added(instance):
    grid, plan, boxes, _ = instance
    for window in plan.windows:
        dets = _local_dets(window, boxes)
        for n in range(len(dets)):
            before = window_confidence_map(window, dets[:n], grid).values
            after = window_confidence_map(window, dets[: n + 1], grid).values
            assert np.all(after >= before)


@settings(max_examples=200, deadline=None)
@given(_instances())
def test_global_map_lies_between_its_window_values(instance):
    grid, plan, boxes, _ = instance
    crop = grid.crop_px
    maps = [window_confidence_map(w, _local_dets(w, boxes), grid) for w in plan.windows]
    g = global_confidence_map(plan, maps, grid).values
    for r in range(grid.grid_h):
        for c in range(grid.grid_w):
            vals = [
                m.values[r - w.y0 // crop, c - w.x0 // crop]
                for w, m in zip(plan.windows, maps)
                if w.x0 <= c * crop < w.x1 and w.y0 <= r * crop < w.y1
            ]
            assert min(vals) - 1e-12 <= g[r, c] <= max(vals) + 1e-12

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from modules.common.errors import InvalidArgumentError
from modules.m1 import ImageDims, PatchIndex, build_grid
from modules.m2 import ScoreMap
from modules.m4 import (
    FusionConfig,
    crop_rects,
    fuse_maps,
    merged_regions,
    select_top_k,
    spatial_layout,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def _maps(shape):
    return arrays(np.float64, shape, elements=unit).map(ScoreMap)


def test_fusion_spot_value_with_default_weight():
    w = FusionConfig().weight_w
    assert w == 0.4
    out = fuse_maps(ScoreMap(np.array([[0.5]])), ScoreMap(np.array([[1.0]])), w)
    assert out.values[0, 0] == pytest.approx(0.7, abs=1e-12)


def test_fusion_rejects_bad_inputs():
    a = ScoreMap(np.zeros((2, 2)))
    with pytest.raises(InvalidArgumentError):
        fuse_maps(a, a, 1.5)
    with pytest.raises(InvalidArgumentError):
        fuse_maps(a, ScoreMap(np.zeros((2, 3))), 0.4)


@settings(max_examples=200, deadline=None)
@given(_maps((3, 4)), _maps((3, 4)), unit)
def test_fusion_is_convex(sem, det, w):
    out = fuse_maps(sem, det, w).values
    assert np.all(out >= np.minimum(sem.values, det.values))
    assert np.all(out <= np.maximum(sem.values, det.values))


@settings(max_examples=100, deadline=None)
@given(_maps((4, 4)), _maps((4, 4)))
def test_fusion_degenerate_weights_are_exact(sem, det):
    assert np.array_equal(fuse_maps(sem, det, 0.0).values, sem.values)
    assert np.array_equal(fuse_maps(sem, det, 1.0).values, det.values)


@settings(max_examples=200, deadline=None)
@given(_maps((3, 4)), _maps((3, 4)), unit, st.integers(0, 11), unit)
def test_raising_a_detection_cell_never_hurts_it(sem, det, w, cell, bump):
    r, c = divmod(cell, 4)
    raised = det.values.copy()
    raised[r, c] = max(raised[r, c], bump)
    before = fuse_maps(sem, det, w)
    after = fuse_maps(sem, ScoreMap(raised), w)
    assert after.values[r, c] >= before.values[r, c]

    def rank(fused):
        order = [p.as_tuple() for p, _ in select_top_k(fused, 12)]
        return order.index((r, c))

    assert rank(after) <= rank(before)


def test_fusion_config_ranges():
    with pytest.raises(ValueError):
        FusionConfig(weight_w=-0.1)
    with pytest.raises(ValueError):
        FusionConfig(top_k=0)


def test_top_k_tie_break_row_major():
    picked = select_top_k(ScoreMap(np.array([[0.1, 0.9], [0.9, 0.2]])), 2)
    assert [p.as_tuple() for p, _ in picked] == [(0, 1), (1, 0)]
    assert [s for _, s in picked] == [0.9, 0.9]


def test_top_k_larger_than_grid():
    picked = select_top_k(ScoreMap(np.array([[0.3, 0.1]])), 16)
    assert [p.as_tuple() for p, _ in picked] == [(0, 0), (0, 1)]
    with pytest.raises(InvalidArgumentError):
        select_top_k(ScoreMap(np.array([[0.3]])), 0)


@settings(max_examples=200, deadline=None)
@given(
    arrays(np.float64, (5, 6), elements=st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])),
    st.integers(1, 40),
    st.randoms(use_true_random=False),
)
def test_top_k_is_order_independent(values, k, rnd):
    picked = select_top_k(ScoreMap(values), k)
    assert len(picked) == min(k, values.size)
    scores = [s for _, s in picked]
    assert scores == sorted(scores, reverse=True)
    assert len({p for p, _ in picked}) == len(picked)

    # brute force over cells enumerated in a shuffled order
    cells = [(r, c) for r in range(5) for c in range(6)]
    rnd.shuffle(cells)
    ranked = sorted(cells, key=lambda rc: (-values[rc], rc[0], rc[1]))[:k]
    assert [p.as_tuple() for p, _ in picked] == ranked


def test_layout_examples():
    layout = spatial_layout([PatchIndex(2, 5), PatchIndex(2, 9), PatchIndex(7, 5)])
    assert (layout.rows, layout.cols) == (2, 2)
    assert layout.get(0, 0) == PatchIndex(2, 5)
    assert layout.get(0, 1) == PatchIndex(2, 9)
    assert layout.get(1, 0) == PatchIndex(7, 5)
    assert layout.holes() == [(1, 1)]
    assert layout.as_rows()[1] == [PatchIndex(7, 5), None]


def test_layout_single_and_duplicates():
    layout = spatial_layout([PatchIndex(4, 4)])
    assert (layout.rows, layout.cols) == (1, 1)
    with pytest.raises(InvalidArgumentError):
        spatial_layout([PatchIndex(1, 1), PatchIndex(1, 1)])


def test_layout_to_dict_is_sorted():
    d = spatial_layout([PatchIndex(7, 5), PatchIndex(2, 9)]).to_dict()
    assert d["cells"] == [
        {"lr": 0, "lc": 1, "row": 2, "col": 9},
        {"lr": 1, "lc": 0, "row": 7, "col": 5},
    ]


@settings(max_examples=1000, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=20))
def test_layout_preserves_relative_order(cells):
    selected = [PatchIndex(r, c) for r, c in cells]
    layout = spatial_layout(selected)
    pos = {p: rc for rc, p in layout.cells.items()}
    assert layout.rows == len({r for r, _ in cells})
    assert layout.cols == len({c for _, c in cells})
    for a in selected:
        for b in selected:
            if a.row < b.row:
                assert pos[a][0] < pos[b][0]
            if a.col < b.col:
                assert pos[a][1] < pos[b][1]
            if a.row == b.row:
                assert pos[a][0] == pos[b][0]


def test_merged_regions_groups_4_connected_cells():
    grid = build_grid(ImageDims(448, 448), 112, 2)
    selected = [PatchIndex(0, 0), PatchIndex(0, 1), PatchIndex(1, 1), PatchIndex(3, 3)]
    regions = [r.as_tuple() for r in merged_regions(selected, grid)]
    assert regions == [(0, 0, 224, 224), (336, 336, 448, 448)]
    # diagonal neighbours stay separate
    diag = [r.as_tuple() for r in merged_regions([PatchIndex(0, 0), PatchIndex(1, 1)], grid)]
    assert diag == [(0, 0, 112, 112), (112, 112, 224, 224)]
    assert merged_regions([], grid) == []


def test_crop_rects():
    grid = build_grid(ImageDims(448, 448), 112, 2)
    per_patch, merged = crop_rects([PatchIndex(1, 2), PatchIndex(1, 3)], grid)
    assert [r.as_tuple() for r in per_patch] == [(224, 112, 336, 224), (336, 112, 448, 224)]
    assert [r.as_tuple() for r in merged] == [(224, 112, 448, 224)]

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdqeval.assign import assign_frame, hungarian_max
from pdqeval.model import AxisAlignedBox, GroundTruthObject, ImageDims

from conftest import bbox_det, one_hot
from naive import best_assignment

DIMS = ImageDims(16, 16)


def total(mat, pairs):
    return math.fsum(mat[i, j] for i, j in pairs)


def test_two_by_two_example():
    mat = np.array([[0.9, 0.6], [0.7, 0.8]])
    pairs = hungarian_max(mat)
    assert pairs == [(0, 0), (1, 1)]
    assert total(mat, pairs) == pytest.approx(1.7)


def test_wide_matrix_picks_best_column():
    assert hungarian_max(np.array([[0.2, 0.9, 0.1]])) == [(0, 1)]


def test_greedy_would_be_suboptimal():
    mat = np.array([[0.9, 0.8], [0.85, 0.0]])
    assert total(mat, hungarian_max(mat)) == pytest.approx(1.65)


def test_empty_inputs():
    assert hungarian_max(np.zeros((0, 3))) == []
    fa = assign_frame([], [bbox_det(0, (0, 0, 1, 1), one_hot(0))], DIMS)
    assert (fa.tp_count, fa.fn_gt, fa.fp_det) == (0, [], [0])


matrices = st.integers(1, 6).flatmap(
    lambda n: st.integers(1, 6).flatmap(
        lambda m: arrays(np.float64, (n, m), elements=st.floats(0, 1, allow_subnormal=False))
    )
)


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_optimal_against_enumeration(mat):
    pairs = hungarian_max(mat)
    assert len({i for i, _ in pairs}) == len(pairs) == len({j for _, j in pairs})
    assert total(mat, pairs) == pytest.approx(best_assignment(mat)[0], abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(matrices, st.randoms(use_true_random=False))
def test_total_invariant_under_permutation(mat, rnd):
    rows = list(range(mat.shape[0]))
    cols = list(range(mat.shape[1]))
    rnd.shuffle(rows)
    rnd.shuffle(cols)
    shuffled = mat[np.ix_(rows, cols)]
    assert total(shuffled, hungarian_max(shuffled)) == pytest.approx(total(mat, hungarian_max(mat)), abs=1e-12)


def test_zero_quality_pair_is_fn_and_fp():
    gt = GroundTruthObject.from_box(0, AxisAlignedBox(1, 1, 3, 3), 0)
    det = bbox_det(0, (1, 1, 3, 3), one_hot(1))  # wrong class with zero probability
    fa = assign_frame([gt], [det], DIMS)
    assert fa.tp_count == 0 and fa.fn_gt == [0] and fa.fp_det == [0]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12), st.integers(0, 3)), min_size=0, max_size=5),
       st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12), st.integers(0, 3)), min_size=0, max_size=5))
def test_counting_identity(gt_spec, det_spec):
    gts = [GroundTruthObject.from_box(0, AxisAlignedBox(x, y, x + s, y + s), 0) for x, y, s in gt_spec]
    dets = [bbox_det(0, (x, y, x + s, y + s), [0.6, 0.4, 0.0]) for x, y, s in det_spec]
    fa = assign_frame(gts, dets, DIMS)
    assert fa.tp_count + len(fa.fn_gt) == len(gts)
    assert fa.tp_count + len(fa.fp_det) == len(dets)
    assert all(p.quality.ppdq > 0 for p in fa.pairs)

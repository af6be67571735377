import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqdetect import evaluation


class TestBuildIntervals:
    def test_no_events_single_interval(self):
        li = evaluation.build_intervals([], [], (0, 30))
        assert list(li.boundaries) == [0, 30]
        assert list(li.gt) == [False]
        assert list(li.det) == [False]

    def test_perfect_overlap_three_intervals(self):
        li = evaluation.build_intervals([(10, 20)], [(10, 20)], (0, 30))
        assert list(li.boundaries) == [0, 10, 20, 30]
        assert list(li.gt) == [False, True, False]
        assert list(li.det) == [False, True, False]

    def test_hand_sweep(self):
        li = evaluation.build_intervals([(10, 20)], [(15, 25)], (0, 30))
        assert list(li.boundaries) == [0, 10, 15, 20, 25, 30]
        assert list(li.gt) == [False, True, True, False, False]
        assert list(li.det) == [False, False, True, True, False]

    def test_events_clipped_to_range(self):
        li = evaluation.build_intervals([(-5, 12)], [(28, 99)], (0, 30))
        assert list(li.boundaries) == [0, 12, 28, 30]
        assert list(li.gt) == [True, False, False]
        assert list(li.det) == [False, False, True]

    def test_event_outside_range_ignored(self):
        li = evaluation.build_intervals([(40, 50)], [], (0, 30))
        assert list(li.boundaries) == [0, 30]
        assert not li.gt.any()

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            evaluation.build_intervals([], [], (5, 5))

    @given(
        st.lists(st.tuples(st.integers(0, 900), st.integers(0, 200)), max_size=8),
        st.lists(st.tuples(st.integers(0, 900), st.integers(0, 200)), max_size=8),
    )
    @settings(max_examples=80, deadline=None)
    def test_order_independence(self, gt_raw, det_raw):
        gt = [(s, s + d) for s, d in gt_raw]
        det = [(s, s + d) for s, d in det_raw]
        li1 = evaluation.build_intervals(gt, det, (0, 1200))
        li2 = evaluation.build_intervals(gt[::-1], det[::-1], (0, 1200))
        assert np.array_equal(li1.boundaries, li2.boundaries)
        assert np.array_equal(li1.gt, li2.gt)
        assert np.array_equal(li1.det, li2.det)


class TestWeightedMetrics:
    def test_hand_example_all_half(self):
        li = evaluation.build_intervals([(10, 20)], [(15, 25)], (0, 30))
        rep = evaluation.weighted_metrics(li, beta=0.5)
        assert rep.tp == 5 and rep.fp == 5 and rep.fn == 5
        assert rep.precision == 0.5
        assert rep.recall == 0.5
        assert rep.f_beta == 0.5

    def test_exact_match_scores_one(self):
        li = evaluation.build_intervals([(10, 20)], [(10, 20)], (0, 30))
        rep = evaluation.weighted_metrics(li, beta=0.5)
        assert rep.precision == 1.0 and rep.recall == 1.0 and rep.f_beta == 1.0

    def test_empty_detection_absent_precision(self):
        li = evaluation.build_intervals([(10, 20)], [], (0, 30))
        rep = evaluation.weighted_metrics(li, beta=0.5)
        assert rep.recall == 0.0
        assert rep.precision is None
        assert rep.f_beta is None

    def test_empty_gt_absent_recall(self):
        li = evaluation.build_intervals([], [(10, 20)], (0, 30))
        rep = evaluation.weighted_metrics(li, beta=0.5)
        assert rep.recall is None
        assert rep.precision == 0.0

    def test_split_invariance(self):
        li = evaluation.build_intervals([(10, 20)], [(15, 25)], (0, 30))
        # same labeling with interval [0,10) split at 7
        split = evaluation.LabeledIntervals(
            boundaries=np.array([0, 7, 10, 15, 20, 25, 30]),
            gt=np.array([0, 0, 1, 1, 0, 0], dtype=bool),
            det=np.array([0, 0, 0, 1, 1, 0], dtype=bool),
        )
        a = evaluation.weighted_metrics(li, 0.5)
        b = evaluation.weighted_metrics(split, 0.5)
        assert (a.precision, a.recall, a.f_beta) == (b.precision, b.recall, b.f_beta)

    def test_beta_one_is_harmonic_mean(self):
        li = evaluation.build_intervals([(0, 10)], [(5, 20)], (0, 40))
        rep = evaluation.weighted_metrics(li, beta=1.0)
        p, r = rep.precision, rep.recall
        assert rep.f_beta == pytest.approx(2 * p * r / (p + r))

    def test_f_half_weights_precision_higher(self):
        # P > R: F0.5 must exceed F1 on the same counts
        li = evaluation.build_intervals([(0, 20)], [(0, 10)], (0, 40))
        rep_half = evaluation.weighted_metrics(li, beta=0.5)
        rep_one = evaluation.weighted_metrics(li, beta=1.0)
        assert rep_half.precision == 1.0
        assert rep_half.recall == 0.5
        assert rep_half.f_beta > rep_one.f_beta

    @given(
        st.lists(st.tuples(st.integers(0, 900), st.integers(1, 150)), max_size=6),
        st.lists(st.tuples(st.integers(0, 900), st.integers(1, 150)), max_size=6),
    )
    @settings(max_examples=60, deadline=None)
    def test_weights_add_up(self, gt_raw, det_raw):
        gt = [(s, s + d) for s, d in gt_raw]
        det = [(s, s + d) for s, d in det_raw]
        li = evaluation.build_intervals(gt, det, (0, 1200))
        rep = evaluation.weighted_metrics(li, 0.5)
        tn = float(li.weights[~li.gt & ~li.det].sum())
        assert rep.tp + rep.fp + rep.fn + tn == pytest.approx(1200.0)


class TestSummarize:
    def test_mean_row_skips_absent(self):
        r1 = evaluation.MetricReport(precision=1.0, recall=0.5, f_beta=0.9, beta=0.5, tp=1, fp=0, fn=1)
        r2 = evaluation.MetricReport(precision=None, recall=0.0, f_beta=None, beta=0.5, tp=0, fp=0, fn=2)
        out = evaluation.summarize([("S1", "PM25", r1), ("S2", "PM25", r2)])
        assert out["mean"]["precision"] == 1.0
        assert out["mean"]["recall"] == 0.25
        assert len(out["rows"]) == 2

    def test_empty_rows(self):
        out = evaluation.summarize([])
        assert out["rows"] == []
        assert out["mean"]["precision"] is None

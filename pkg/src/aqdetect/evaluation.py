"""Interval-weighted comparison of detected events against ground truth.

Start and end points of both event sets are combined into one boundary
sequence; every interval between consecutive boundaries gets a binary label
per class (covered / not covered) and its length in seconds becomes the
sample weight for precision, recall, and F-beta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LabeledIntervals:
    """Half-open sweep intervals [boundaries[i], boundaries[i+1]) with labels."""

    boundaries: np.ndarray
    gt: np.ndarray
    det: np.ndarray

    def __post_init__(self):
        self.boundaries = np.asarray(self.boundaries, dtype=np.int64)
        self.gt = np.asarray(self.gt, dtype=bool)
        self.det = np.asarray(self.det, dtype=bool)
        if self.boundaries.size < 2:
            raise ValueError("need at least two boundaries")
        if not np.all(np.diff(self.boundaries) > 0):
            raise ValueError("boundaries must be strictly ascending")
        if self.gt.size != self.boundaries.size - 1 or self.det.size != self.gt.size:
            raise ValueError("labels must have one entry per interval")

    @property
    def weights(self) -> np.ndarray:
        return np.diff(self.boundaries).astype(np.float64)


@dataclass
class MetricReport:
    """Length-weighted scores; undefined ratios are None rather than 0."""

    precision: float | None
    recall: float | None
    f_beta: float | None
    beta: float
    tp: float
    fp: float
    fn: float


def _clip_events(events, lo: int, hi: int) -> list:
    clipped = []
    for start, end in events:
        s, e = max(int(start), lo), min(int(end), hi)
        if s <= e:
            clipped.append((s, e))
    return clipped


def build_intervals(gt_events, det_events, eval_range: tuple) -> LabeledIntervals:
    """Sweep both event sets over eval_range into labeled intervals.

    Events are closed [start, end] pairs in epoch seconds and are clipped to
    the range. An interval is labeled 1 for a class iff it lies inside some
    event of that class.
    """
    lo, hi = int(eval_range[0]), int(eval_range[1])
    if hi <= lo:
        raise ValueError("evaluation range must be non-empty")
    gt = _clip_events(gt_events, lo, hi)
    det = _clip_events(det_events, lo, hi)

    points = {lo, hi}
    for s, e in gt + det:
        points.add(s)
        points.add(e)
    boundaries = np.array(sorted(points), dtype=np.int64)

    def cover(events) -> np.ndarray:
        labels = np.zeros(boundaries.size - 1, dtype=bool)
        for s, e in events:
            labels |= (boundaries[:-1] >= s) & (boundaries[1:] <= e)
        return labels

    return LabeledIntervals(boundaries=boundaries, gt=cover(gt), det=cover(det))


def f_beta_score(precision: float, recall: float, beta: float) -> float | None:
    denom = beta**2 * precision + recall
    if denom == 0:
        return None
    return (1 + beta**2) * precision * recall / denom


def weighted_metrics(li: LabeledIntervals, beta: float = 0.5) -> MetricReport:
    w = li.weights
    tp = float(w[li.gt & li.det].sum())
    fp = float(w[~li.gt & li.det].sum())
    fn = float(w[li.gt & ~li.det].sum())

    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    fb = None
    if precision is not None and recall is not None:
        fb = f_beta_score(precision, recall, beta)
    return MetricReport(precision=precision, recall=recall, f_beta=fb, beta=beta, tp=tp, fp=fp, fn=fn)


def summarize(rows: list) -> dict:
    """Aggregate per-model reports into a table with a mean row.

    ``rows`` holds (station_id, attribute, MetricReport); means average the
    models where the ratio is defined.
    """
    def mean_of(values):
        vals = [v for v in values if v is not None]
        return float(np.mean(vals)) if vals else None

    table = [
        {
            "station_id": st,
            "attribute": attr,
            "precision": r.precision,
            "recall": r.recall,
            "f_beta": r.f_beta,
        }
        for st, attr, r in rows
    ]
    return {
        "rows": table,
        "mean": {
            "precision": mean_of(r.precision for _, _, r in rows),
            "recall": mean_of(r.recall for _, _, r in rows),
            "f_beta": mean_of(r.f_beta for _, _, r in rows),
        },
        "beta": rows[0][2].beta if rows else None,
    }

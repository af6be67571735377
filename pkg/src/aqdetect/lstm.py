"""Single-layer LSTM regressor with a scalar dense head, trained by BPTT.

Everything is float64 numpy so analytic gradients can be validated against
central finite differences. Gate weights live in stacked matrices with gate
order (input, forget, output, candidate):

    pre = x_t @ W + h_{t-1} @ U + b          # (batch, 4*hidden)
    i, f, o = sigmoid(pre[:, :3H] slices), g = tanh(pre[:, 3H:])
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)
    prediction = h_T @ w_out + b_out
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySeries, NonFiniteInput, TrainingDiverged
from .series import POLLUTANT_COL, WindowedDataset

INPUT_DIM = 5


@dataclass
class LstmParams:
    hidden_dim: int
    W: np.ndarray       # (input_dim, 4*hidden)
    U: np.ndarray       # (hidden, 4*hidden)
    b: np.ndarray       # (4*hidden,)
    w_out: np.ndarray   # (hidden,)
    b_out: np.ndarray   # (1,)
    input_dim: int = INPUT_DIM

    def copy(self) -> "LstmParams":
        return LstmParams(
            hidden_dim=self.hidden_dim,
            W=self.W.copy(),
            U=self.U.copy(),
            b=self.b.copy(),
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
            input_dim=self.input_dim,
        )

    def arrays(self) -> dict:
        return {"W": self.W, "U": self.U, "b": self.b, "w_out": self.w_out, "b_out": self.b_out}


@dataclass
class TrainConfig:
    epochs: int = 35
    learning_rate: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    optimizer: str = "adam"
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be adam or sgd")


@dataclass
class PredictionSet:
    """Aligned predictions and targets; y[t] is the next-step pollutant value."""

    y_hat: np.ndarray
    y: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        self.y_hat = np.asarray(self.y_hat, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        if not (self.y_hat.shape == self.y.shape == self.timestamps.shape):
            raise ValueError("y_hat, y and timestamps must have equal length")

    def __len__(self) -> int:
        return int(self.y.size)


def init_params(hidden_dim: int, seed: int) -> LstmParams:
    """Uniform init scaled by 1/sqrt(hidden_dim); forget-gate bias starts at 1."""
    if hidden_dim < 1:
        raise ValueError("hidden_dim must be >= 1")
    rng = np.random.default_rng(seed)
    r = 1.0 / np.sqrt(hidden_dim)
    h = hidden_dim
    b = np.zeros(4 * h)
    b[h : 2 * h] = 1.0
    return LstmParams(
        hidden_dim=h,
        W=rng.uniform(-r, r, size=(INPUT_DIM, 4 * h)),
        U=rng.uniform(-r, r, size=(h, 4 * h)),
        b=b,
        w_out=rng.uniform(-r, r, size=h),
        b_out=np.zeros(1),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _forward_batch(params: LstmParams, X: np.ndarray):
    """Recurrence over (batch, steps, input_dim); returns predictions and cache."""
    B, T, _ = X.shape
    H = params.hidden_dim
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    cache = []
    for t in range(T):
        x_t = X[:, t, :]
        pre = x_t @ params.W + h @ params.U + params.b
        i = _sigmoid(pre[:, :H])
        f = _sigmoid(pre[:, H : 2 * H])
        o = _sigmoid(pre[:, 2 * H : 3 * H])
        g = np.tanh(pre[:, 3 * H :])
        c_prev = c
        h_prev = h
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        cache.append((x_t, h_prev, c_prev, i, f, o, g, tanh_c))
    preds = h @ params.w_out + params.b_out[0]
    return preds, h, cache


def forward(params: LstmParams, window: np.ndarray) -> float:
    """Scalar prediction for one window of shape (l_s, input_dim)."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[1] != params.input_dim:
        raise ValueError(f"window must be (l_s, {params.input_dim})")
    if not np.isfinite(window).all():
        raise NonFiniteInput("window contains NaN or inf")
    preds, _, _ = _forward_batch(params, window[None, :, :])
    return float(preds[0])


def _backward_batch(params: LstmParams, cache, h_T: np.ndarray, dpred: np.ndarray) -> dict:
    """Gradients of the scalar-head loss wrt every parameter, full BPTT."""
    B = dpred.shape[0]
    H = params.hidden_dim
    grads = {
        "W": np.zeros_like(params.W),
        "U": np.zeros_like(params.U),
        "b": np.zeros_like(params.b),
        "w_out": h_T.T @ dpred,
        "b_out": np.array([dpred.sum()]),
    }
    dh = dpred[:, None] * params.w_out[None, :]
    dc_next = np.zeros((B, H))
    for x_t, h_prev, c_prev, i, f, o, g, tanh_c in reversed(cache):
        do = dh * tanh_c
        dc = dc_next + dh * o * (1.0 - tanh_c**2)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        da = np.concatenate(
            [di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g**2)],
            axis=1,
        )
        grads["W"] += x_t.T @ da
        grads["U"] += h_prev.T @ da
        grads["b"] += da.sum(axis=0)
        dh = da @ params.U.T
    return grads


def loss_and_grads(params: LstmParams, X: np.ndarray, y: np.ndarray):
    """Mean squared error over the batch and its parameter gradients."""
    preds, h_T, cache = _forward_batch(params, X)
    diff = preds - y
    loss = float(np.mean(diff**2))
    dpred = 2.0 * diff / y.size
    return loss, _backward_batch(params, cache, h_T, dpred)


def _clip_global_norm(grads: dict, clip_norm: float) -> None:
    total = np.sqrt(sum(float(np.sum(g**2)) for g in grads.values()))
    if total > clip_norm:
        scale = clip_norm / total
        for g in grads.values():
            g *= scale


class _Adam:
    def __init__(self, params: LstmParams, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.arrays().items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays().items()}

    def step(self, params: LstmParams, grads: dict) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for k, arr in params.arrays().items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g**2
            arr -= self.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + self.eps)


def train(params: LstmParams, data: WindowedDataset, cfg: TrainConfig):
    """Fit on trainable windows; returns (new params, per-epoch loss history).

    Deterministic given cfg.seed: the shuffle order each epoch comes from one
    seeded generator. Windows flagged excluded-from-training are skipped.
    Raises TrainingDiverged (with the epoch index) if the loss goes non-finite.
    """
    usable = np.nonzero(data.train_mask)[0]
    if usable.size == 0:
        raise EmptySeries("no trainable windows")
    X_all = data.inputs[usable]
    y_all = data.targets[usable]

    out = params.copy()
    rng = np.random.default_rng(cfg.seed)
    adam = _Adam(out, cfg.learning_rate) if cfg.optimizer == "adam" else None

    history = []
    m = usable.size
    for epoch in range(cfg.epochs):
        perm = rng.permutation(m)
        total = 0.0
        for lo in range(0, m, cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            loss, grads = loss_and_grads(out, X_all[idx], y_all[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch)
            _clip_global_norm(grads, cfg.clip_norm)
            if adam is not None:
                adam.step(out, grads)
            else:
                for k, arr in out.arrays().items():
                    arr -= cfg.learning_rate * grads[k]
            total += loss * idx.size
        epoch_loss = total / m
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(epoch)
        history.append(epoch_loss)
    return out, history


def predict_series(params: LstmParams, data: WindowedDataset) -> PredictionSet:
    """One prediction per window, aligned to the target timestamps."""
    if len(data) == 0:
        empty = np.array([], dtype=np.float64)
        return PredictionSet(y_hat=empty, y=empty, timestamps=np.array([], dtype=np.int64))
    if data.inputs.shape[2] != params.input_dim:
        raise ValueError(f"expected input dim {params.input_dim}, got {data.inputs.shape[2]}")
    preds, _, _ = _forward_batch(params, data.inputs)
    return PredictionSet(y_hat=preds, y=data.targets.copy(), timestamps=data.target_timestamps())


def persistence_baseline(data: WindowedDataset) -> PredictionSet:
    """Predict the last observed pollutant value of each window."""
    if len(data) == 0:
        empty = np.array([], dtype=np.float64)
        return PredictionSet(y_hat=empty, y=empty, timestamps=np.array([], dtype=np.int64))
    y_hat = data.inputs[:, -1, POLLUTANT_COL].copy()
    return PredictionSet(y_hat=y_hat, y=data.targets.copy(), timestamps=data.target_timestamps())


def mape(p: PredictionSet, eps: float = 1e-9) -> float:
    """Mean of |y_hat - y| / max(|y|, eps)."""
    if len(p) == 0:
        raise EmptySeries("cannot compute MAPE of an empty prediction set")
    denom = np.maximum(np.abs(p.y), eps)
    return float(np.mean(np.abs(p.y_hat - p.y) / denom))


CHECKPOINT_FORMAT = "aqdetect-lstm-checkpoint"
CHECKPOINT_VERSION = 1


def checkpoint_to_dict(params: LstmParams, norm: dict | None = None, config_hash: str = "") -> dict:
    """Serializable checkpoint; JSON floats round-trip exactly."""
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "input_dim": params.input_dim,
        "hidden_dim": params.hidden_dim,
        "weights": {k: v.tolist() for k, v in params.arrays().items()},
        "norm": norm,
        "config_hash": config_hash,
    }


def checkpoint_from_dict(d: dict) -> tuple:
    if d.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not an LSTM checkpoint")
    if d.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')}")
    w = d["weights"]
    params = LstmParams(
        hidden_dim=int(d["hidden_dim"]),
        W=np.array(w["W"], dtype=np.float64),
        U=np.array(w["U"], dtype=np.float64),
        b=np.array(w["b"], dtype=np.float64),
        w_out=np.array(w["w_out"], dtype=np.float64),
        b_out=np.array(w["b_out"], dtype=np.float64),
        input_dim=int(d["input_dim"]),
    )
    return params, d.get("norm"), d.get("config_hash", "")

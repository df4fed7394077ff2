"""Hybrid price forecaster: an LSTM branch and a Conv1D branch over the
same OHLC+sentiment window, fused by a linear head, trained with full
analytic backpropagation (including BPTT) and an Adam-style optimizer.

Everything runs in float64; forward/backward support a leading batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .data import WindowedDataset

N_INPUT_FEATURES = 5


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss becomes NaN or infinite."""


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class LstmParams:
    """Gate weights of shape (H, H+F) acting on [h_{t-1}, x_t], biases (H,)."""

    W_f: np.ndarray
    W_i: np.ndarray
    W_c: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.W_f.shape[0]


@dataclass
class LstmState:
    h: np.ndarray
    C: np.ndarray


@dataclass
class ConvParams:
    """K filters of shape (2k+1, F) applied as a valid cross-correlation."""

    kernels: np.ndarray  # (K, 2k+1, F)
    biases: np.ndarray  # (K,)
    activation: str = "relu"

    @property
    def half_width(self) -> int:
        return (self.kernels.shape[1] - 1) // 2

    @property
    def n_filters(self) -> int:
        return self.kernels.shape[0]


@dataclass
class FusionParams:
    w_cnn: np.ndarray  # (K,)
    w_lstm: np.ndarray  # (H,)
    b: np.ndarray  # (1,)


@dataclass
class FusionNetwork:
    lstm: LstmParams
    conv: ConvParams
    fusion: FusionParams
    window_length: int
    n_features: int = N_INPUT_FEATURES

    @classmethod
    def initialize(
        cls,
        hidden_size: int,
        n_filters: int,
        kernel_half_width: int,
        window_length: int,
        activation: str = "relu",
        seed: int = 0,
        n_features: int = N_INPUT_FEATURES,
    ) -> "FusionNetwork":
        """Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights; biases
        zero except the forget gate, initialized to 1 to favor memory."""
        if activation not in ("relu", "tanh", "linear"):
            raise ValueError(f"unknown activation {activation!r}")
        if window_length < 2 * kernel_half_width + 1:
            raise ValueError("window shorter than the convolution kernel")
        rng = np.random.default_rng(seed)
        H, F, K = hidden_size, n_features, n_filters
        width = 2 * kernel_half_width + 1

        def uniform(shape, fan_in):
            s = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-s, s, size=shape)

        lstm = LstmParams(
            W_f=uniform((H, H + F), H + F),
            W_i=uniform((H, H + F), H + F),
            W_c=uniform((H, H + F), H + F),
            W_o=uniform((H, H + F), H + F),
            b_f=np.ones(H),
            b_i=np.zeros(H),
            b_c=np.zeros(H),
            b_o=np.zeros(H),
        )
        conv = ConvParams(
            kernels=uniform((K, width, F), width * F),
            biases=np.zeros(K),
            activation=activation,
        )
        fusion = FusionParams(
            w_cnn=uniform((K,), K),
            w_lstm=uniform((H,), H),
            b=np.zeros(1),
        )
        return cls(lstm, conv, fusion, window_length, n_features)

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        """Stable (name, tensor) listing shared by optimizer and serializer."""
        p = self
        return [
            ("lstm.W_f", p.lstm.W_f), ("lstm.W_i", p.lstm.W_i),
            ("lstm.W_c", p.lstm.W_c), ("lstm.W_o", p.lstm.W_o),
            ("lstm.b_f", p.lstm.b_f), ("lstm.b_i", p.lstm.b_i),
            ("lstm.b_c", p.lstm.b_c), ("lstm.b_o", p.lstm.b_o),
            ("conv.kernels", p.conv.kernels), ("conv.biases", p.conv.biases),
            ("fusion.w_cnn", p.fusion.w_cnn), ("fusion.w_lstm", p.fusion.w_lstm),
            ("fusion.b", p.fusion.b),
        ]


# -- forward pass ----------------------------------------------------------


def lstm_step(params: LstmParams, x_t: np.ndarray, state: LstmState) -> LstmState:
    """One gated recurrence step on a single feature vector."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape != (params.W_f.shape[1] - params.hidden_size,):
        raise ValueError(f"input shape {x_t.shape} inconsistent with gate weights")
    if not np.all(np.isfinite(x_t)):
        raise ValueError("non-finite input")
    z = np.concatenate([state.h, x_t])
    f = _sigmoid(params.W_f @ z + params.b_f)
    i = _sigmoid(params.W_i @ z + params.b_i)
    c_tilde = np.tanh(params.W_c @ z + params.b_c)
    C = f * state.C + i * c_tilde
    o = _sigmoid(params.W_o @ z + params.b_o)
    return LstmState(h=o * np.tanh(C), C=C)


def lstm_forward(params: LstmParams, windows: np.ndarray) -> tuple[np.ndarray, list[dict]]:
    """Run the recurrence over t=1..L from a zero state.

    ``windows`` is (B, L, F); returns the final hidden state (B, H) and the
    per-step cache needed by the backward pass.
    """
    B, L, F = windows.shape
    H = params.hidden_size
    h = np.zeros((B, H))
    C = np.zeros((B, H))
    cache: list[dict] = []
    for t in range(L):
        z = np.concatenate([h, windows[:, t, :]], axis=1)
        f = _sigmoid(z @ params.W_f.T + params.b_f)
        i = _sigmoid(z @ params.W_i.T + params.b_i)
        c_tilde = np.tanh(z @ params.W_c.T + params.b_c)
        C_prev = C
        C = f * C_prev + i * c_tilde
        o = _sigmoid(z @ params.W_o.T + params.b_o)
        tanh_C = np.tanh(C)
        h = o * tanh_C
        cache.append(
            {"z": z, "f": f, "i": i, "o": o, "c_tilde": c_tilde,
             "C_prev": C_prev, "tanh_C": tanh_C}
        )
    return h, cache


def _activate(pre: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(pre, 0.0)
    if activation == "tanh":
        return np.tanh(pre)
    if activation == "linear":
        return pre
    raise ValueError(f"unknown activation {activation!r}")


def conv1d_forward(params: ConvParams, windows: np.ndarray) -> tuple[np.ndarray, dict]:
    """Valid (no padding) cross-correlation over the time axis.

    ``windows`` is (B, L, F); output is (B, L-2k, K) after the activation.
    """
    B, L, F = windows.shape
    width = params.kernels.shape[1]
    if L < width:
        raise ValueError(f"window length {L} shorter than kernel width {width}")
    patches = np.lib.stride_tricks.sliding_window_view(windows, width, axis=1)
    patches = patches.transpose(0, 1, 3, 2)  # (B, L', width, F)
    pre = np.einsum("btwf,kwf->btk", patches, params.kernels) + params.biases
    feat = _activate(pre, params.activation)
    return feat, {"patches": patches, "pre": pre, "feat": feat}


def temporal_pool(features: np.ndarray) -> np.ndarray:
    """Per-filter mean over the time axis: (B, L', K) -> (B, K)."""
    if features.shape[-2] == 0:
        raise ValueError("empty feature sequence")
    return features.mean(axis=-2)


def fusion_forward(params: FusionParams, x_conv: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Linear head: Y = w_cnn . x_conv + w_lstm . h + b (no nonlinearity)."""
    return x_conv @ params.w_cnn + h @ params.w_lstm + params.b[0]


def _as_batch(windows: np.ndarray, net: FusionNetwork) -> tuple[np.ndarray, bool]:
    windows = np.asarray(windows, dtype=np.float64)
    single = windows.ndim == 2
    if single:
        windows = windows[None]
    if windows.ndim != 3 or windows.shape[1:] != (net.window_length, net.n_features):
        raise ValueError(
            f"expected windows of shape (B, {net.window_length}, {net.n_features}), "
            f"got {windows.shape}"
        )
    if not np.all(np.isfinite(windows)):
        raise ValueError("non-finite input window")
    return windows, single


def forward(net: FusionNetwork, windows: np.ndarray) -> tuple[np.ndarray, dict]:
    """Full forward pass; both branches consume the same window(s).

    Accepts one (L, F) window or a (B, L, F) batch; returns predictions of
    shape () or (B,) plus the cache for :func:`backward`.
    """
    windows, single = _as_batch(windows, net)
    h_L, lstm_cache = lstm_forward(net.lstm, windows)
    feat, conv_cache = conv1d_forward(net.conv, windows)
    pooled = temporal_pool(feat)
    preds = fusion_forward(net.fusion, pooled, h_L)
    cache = {
        "windows": windows, "single": single, "h_L": h_L,
        "lstm": lstm_cache, "conv": conv_cache, "pooled": pooled, "preds": preds,
    }
    return (preds[0] if single else preds), cache


def loss_mse(pred, target) -> float:
    """Squared error for scalars, mean squared error over batches."""
    return float(np.mean((np.asarray(pred) - np.asarray(target)) ** 2))


def _activation_deriv(cache: dict, activation: str) -> np.ndarray:
    if activation == "relu":
        return (cache["pre"] > 0).astype(np.float64)
    if activation == "tanh":
        return 1.0 - cache["feat"] ** 2
    return np.ones_like(cache["pre"])


def backward(net: FusionNetwork, targets, cache: dict) -> dict[str, np.ndarray]:
    """Analytic gradients of the batch-mean squared error w.r.t. every
    parameter tensor, backpropagating through the fusion head, the pooled
    convolution and all L recurrence steps."""
    targets = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    preds = cache["preds"]
    if targets.shape != preds.shape:
        raise ValueError("targets do not match the cached forward batch")
    B = len(preds)
    H = net.lstm.hidden_size

    d_pred = 2.0 * (preds - targets) / B  # (B,)

    # fusion head
    grads = {
        "fusion.w_cnn": cache["pooled"].T @ d_pred,
        "fusion.w_lstm": cache["h_L"].T @ d_pred,
        "fusion.b": np.array([d_pred.sum()]),
    }
    d_pool = np.outer(d_pred, net.fusion.w_cnn)  # (B, K)
    d_h = np.outer(d_pred, net.fusion.w_lstm)  # (B, H)

    # conv branch (mean pool spreads the gradient uniformly over time)
    conv_cache = cache["conv"]
    Lp = conv_cache["pre"].shape[1]
    d_feat = np.broadcast_to(d_pool[:, None, :] / Lp, conv_cache["pre"].shape)
    d_pre = d_feat * _activation_deriv(conv_cache, net.conv.activation)
    grads["conv.kernels"] = np.einsum("btk,btwf->kwf", d_pre, conv_cache["patches"])
    grads["conv.biases"] = d_pre.sum(axis=(0, 1))

    # LSTM branch, backpropagation through time
    for name in ("W_f", "W_i", "W_c", "W_o"):
        grads[f"lstm.{name}"] = np.zeros_like(getattr(net.lstm, name))
    for name in ("b_f", "b_i", "b_c", "b_o"):
        grads[f"lstm.{name}"] = np.zeros_like(getattr(net.lstm, name))
    d_C = np.zeros_like(d_h)
    for step in reversed(cache["lstm"]):
        f, i, o = step["f"], step["i"], step["o"]
        c_tilde, tanh_C, z = step["c_tilde"], step["tanh_C"], step["z"]
        d_o = d_h * tanh_C
        d_C = d_C + d_h * o * (1.0 - tanh_C**2)
        d_c_tilde = d_C * i
        d_i = d_C * c_tilde
        d_f = d_C * step["C_prev"]
        a_f = d_f * f * (1.0 - f)
        a_i = d_i * i * (1.0 - i)
        a_o = d_o * o * (1.0 - o)
        a_c = d_c_tilde * (1.0 - c_tilde**2)
        grads["lstm.W_f"] += a_f.T @ z
        grads["lstm.W_i"] += a_i.T @ z
        grads["lstm.W_c"] += a_c.T @ z
        grads["lstm.W_o"] += a_o.T @ z
        grads["lstm.b_f"] += a_f.sum(axis=0)
        grads["lstm.b_i"] += a_i.sum(axis=0)
        grads["lstm.b_c"] += a_c.sum(axis=0)
        grads["lstm.b_o"] += a_o.sum(axis=0)
        d_z = a_f @ net.lstm.W_f + a_i @ net.lstm.W_i + a_c @ net.lstm.W_c + a_o @ net.lstm.W_o
        d_h = d_z[:, :H]
        d_C = d_C * f
    return grads


# -- optimizer and training loop ------------------------------------------


@dataclass
class AdamOptimizer:
    """Adaptive-moment update with bias correction; deterministic."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = field(default=0, init=False)
    m: dict = field(default_factory=dict, init=False)
    v: dict = field(default_factory=dict, init=False)

    def step(self, params: Sequence[tuple[str, np.ndarray]], grads: dict[str, np.ndarray]):
        self.t += 1
        for name, p in params:
            g = grads[name]
            if g.shape != p.shape:
                raise ValueError(f"gradient shape mismatch for {name}")
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    lr: float = 1e-3
    batch_size: int = 32
    seed: int = 0


def train(net: FusionNetwork, dataset: WindowedDataset, config: TrainConfig) -> list[float]:
    """Mini-batch gradient descent on the windowed dataset, in place.

    Returns the per-epoch mean training loss; aborts on non-finite loss.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(config.seed)
    opt = AdamOptimizer(lr=config.lr)
    params = net.param_items()
    history: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            preds, cache = forward(net, dataset.inputs[idx])
            batch_targets = dataset.targets[idx]
            loss = loss_mse(preds, batch_targets)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}"
                )
            total += loss * len(idx)
            grads = backward(net, batch_targets, cache)
            opt.step(params, grads)
        history.append(total / n)
    return history


def predict_series(net: FusionNetwork, windows: np.ndarray) -> np.ndarray:
    """One prediction per window, order preserved; pure."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 3 and windows.shape[0] == 0:
        return np.zeros(0)
    preds, _ = forward(net, windows)
    return np.atleast_1d(preds)


class FusionForecaster(BaseEstimator, RegressorMixin):
    """sklearn-style wrapper: fit on (B, L, 5) windows and scalar targets."""

    def __init__(
        self,
        hidden_size: int = 32,
        n_filters: int = 16,
        kernel_half_width: int = 2,
        window_length: int = 10,
        activation: str = "relu",
        lr: float = 1e-3,
        batch_size: int = 32,
        epochs: int = 200,
        seed: int = 0,
    ):
        self.hidden_size = hidden_size
        self.n_filters = n_filters
        self.kernel_half_width = kernel_half_width
        self.window_length = window_length
        self.activation = activation
        self.lr = lr
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray) -> "FusionForecaster":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 3 or len(X) != len(y):
            raise ValueError("X must be (B, L, F) with one target per window")
        self.net_ = FusionNetwork.initialize(
            self.hidden_size, self.n_filters, self.kernel_half_width,
            self.window_length, self.activation, self.seed, n_features=X.shape[2],
        )
        dataset = WindowedDataset(X, y, self.window_length, horizon=1)
        self.loss_history_ = train(
            self.net_, dataset,
            TrainConfig(self.epochs, self.lr, self.batch_size, self.seed),
        )
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if not hasattr(self, "net_"):
            raise NotFittedError("forecaster is not fitted")
        return predict_series(self.net_, np.asarray(X, dtype=np.float64))


# -- persistence -----------------------------------------------------------


def network_state(net: FusionNetwork) -> tuple[dict, dict[str, np.ndarray]]:
    meta = {
        "window_length": net.window_length,
        "n_features": net.n_features,
        "hidden_size": net.lstm.hidden_size,
        "n_filters": net.conv.n_filters,
        "kernel_half_width": net.conv.half_width,
        "activation": net.conv.activation,
    }
    return meta, dict(net.param_items())


def network_from_state(meta: dict, arrays: dict[str, np.ndarray]) -> FusionNetwork:
    net = FusionNetwork.initialize(
        meta["hidden_size"], meta["n_filters"], meta["kernel_half_width"],
        meta["window_length"], meta["activation"], seed=0,
        n_features=meta["n_features"],
    )
    for name, p in net.param_items():
        p[...] = arrays[name]
    return net

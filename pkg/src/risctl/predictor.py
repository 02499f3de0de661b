"""Two-layer LSTM trajectory regressor trained with Adam on MSE.

Everything runs in float64 numpy. A window of eight (lat, lon) points is
expressed as offsets from its last point, z-scored with :class:`NormStats`,
and the model predicts the next offset.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .geom import GeoPoint
from .trajectory import NormStats, Windows, anchor_offsets, denormalize, normalize

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
N_LAYERS = 2
IO_DIM = 2


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def init_params(hidden: int = 64, seed: int = 0) -> dict[str, np.ndarray]:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias +1.

    Gate blocks along the last axis are ordered input, forget, cell, output.
    """
    rng = np.random.default_rng(seed)
    k = 1.0 / math.sqrt(hidden)
    params = {}
    in_dim = IO_DIM
    for layer in range(N_LAYERS):
        params[f"W{layer}"] = rng.uniform(-k, k, (in_dim + hidden, 4 * hidden))
        b = rng.uniform(-k, k, 4 * hidden)
        b[hidden:2 * hidden] += 1.0
        params[f"b{layer}"] = b
        in_dim = hidden
    params["Wy"] = rng.uniform(-k, k, (hidden, IO_DIM))
    params["by"] = np.zeros(IO_DIM)
    return params


def hidden_size(params) -> int:
    return params["Wy"].shape[0]


def check_shapes(params):
    H = hidden_size(params)
    expect = {"W0": (IO_DIM + H, 4 * H), "b0": (4 * H,), "W1": (2 * H, 4 * H),
              "b1": (4 * H,), "Wy": (H, IO_DIM), "by": (IO_DIM,)}
    for k, shape in expect.items():
        if params[k].shape != shape:
            raise ValueError(f"parameter {k} has shape {params[k].shape}, expected {shape}")


def lstm_forward(params, x):
    """Run a batch of windows through the network.

    ``x`` is (B, T, 2) or a single (T, 2) window. Returns the (B, 2) or (2,)
    prediction and a cache for :func:`lstm_backward`.
    """
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != IO_DIM:
        raise ValueError(f"expected (batch, time, {IO_DIM}) input, got {x.shape}")
    H = hidden_size(params)
    B, T, _ = x.shape
    layers = []
    seq = x
    for layer in range(N_LAYERS):
        W, b = params[f"W{layer}"], params[f"b{layer}"]
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        steps = []
        hs = np.empty((B, T, H))
        for t in range(T):
            xh = np.concatenate([seq[:, t], h], axis=1)
            z = xh @ W + b
            i = sigmoid(z[:, :H])
            f = sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = sigmoid(z[:, 3 * H:])
            c_prev = c
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[:, t] = h
            steps.append((xh, i, f, g, o, c_prev, tc))
        layers.append(steps)
        seq = hs
    y = seq[:, -1] @ params["Wy"] + params["by"]
    cache = {"layers": layers, "h_last": seq[:, -1], "shape": (B, T), "single": single, "H": H}
    return (y[0] if single else y), cache


def lstm_backward(params, cache, grad_out):
    """Backpropagate ``d loss / d prediction`` through time to every parameter."""
    H = cache["H"]
    if hidden_size(params) != H:
        raise ValueError("cache does not match these parameters")
    B, T = cache["shape"]
    dy = np.asarray(grad_out, dtype=float).reshape(B, IO_DIM)
    grads = {"Wy": cache["h_last"].T @ dy, "by": dy.sum(axis=0)}
    # gradient flowing into each time step's hidden output of the current layer
    dseq = np.zeros((B, T, H))
    dseq[:, -1] = dy @ params["Wy"].T
    for layer in reversed(range(N_LAYERS)):
        W = params[f"W{layer}"]
        in_dim = W.shape[0] - H
        dW = np.zeros_like(W)
        db = np.zeros(4 * H)
        dx = np.zeros((B, T, in_dim))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in reversed(range(T)):
            xh, i, f, g, o, c_prev, tc = cache["layers"][layer][t]
            dh = dseq[:, t] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1 - tc**2)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f
            dz = np.concatenate([di * i * (1 - i), df * f * (1 - f),
                                 dg * (1 - g**2), do * o * (1 - o)], axis=1)
            dW += xh.T @ dz
            db += dz.sum(axis=0)
            dxh = dz @ W.T
            dx[:, t] = dxh[:, :in_dim]
            dh_next = dxh[:, in_dim:]
        grads[f"W{layer}"] = dW
        grads[f"b{layer}"] = db
        dseq = dx
    return grads


def mse_loss(pred, target):
    """Mean squared error over all coordinates and its gradient w.r.t. ``pred``."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    diff = pred - target
    return float(np.mean(diff**2)), diff * (2.0 / diff.size)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state: AdamState):
    """In-place bias-corrected Adam update; returns ``(params, state)``."""
    if not state.m:
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
    state.t += 1
    c1 = 1 - state.beta1**state.t
    c2 = 1 - state.beta2**state.t
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {k} has shape {g.shape}, expected {p.shape}")
        m = state.m[k]
        v = state.v[k]
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


@dataclass
class TrainConfig:
    hidden: int = 64
    batch_size: int = 64
    epochs: int = 40
    lr: float = 1e-3
    seed: int = 0
    patience: int = 10

    def __post_init__(self):
        if self.batch_size < 1 or self.hidden < 1 or self.epochs < 1:
            raise ValueError("batch_size, hidden and epochs must be positive")

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def encode(windows: Windows, stats: NormStats):
    """Model-space inputs and targets for a set of windows."""
    _, rel_in, rel_tg = anchor_offsets(windows.inputs, windows.targets)
    return normalize(rel_in, stats), normalize(rel_tg, stats)


def batch_loss(params, x, y):
    pred, _ = lstm_forward(params, x)
    return mse_loss(pred, y)[0]


def train(train_set: Windows, val_set: Windows, stats: NormStats, config: TrainConfig = TrainConfig(),
          on_epoch=None):
    """Mini-batch Adam training; returns the best-validation parameters.

    The returned ``curve`` has one ``(epoch, train_loss, val_loss)`` row per
    epoch; epoch 0 is the untrained model.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("training and validation sets must be non-empty")
    x, y = encode(train_set, stats)
    xv, yv = encode(val_set, stats)
    rng = np.random.default_rng(config.seed)
    params = init_params(config.hidden, config.seed)
    state = AdamState(lr=config.lr)
    best = ({k: p.copy() for k, p in params.items()}, batch_loss(params, xv, yv))
    curve = [(0, batch_loss(params, x, y), best[1])]
    stale = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(x), config.batch_size):
            idx = order[start:start + config.batch_size]
            pred, cache = lstm_forward(params, x[idx])
            loss, dpred = mse_loss(pred, y[idx])
            adam_step(params, lstm_backward(params, cache, dpred), state)
            total += loss * idx.size
        val = batch_loss(params, xv, yv)
        curve.append((epoch, total / len(x), val))
        if on_epoch:
            on_epoch(epoch, total / len(x), val)
        if val < best[1]:
            best = ({k: p.copy() for k, p in params.items()}, val)
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                log.info("early stop at epoch %d", epoch)
                break
    return best[0], curve


def predict_next(params, stats: NormStats, windows: np.ndarray) -> np.ndarray:
    """One-step prediction for (B, 8, 2) degree windows; returns (B, 2) degrees."""
    anchor, rel_in, _ = anchor_offsets(windows)
    z, _ = lstm_forward(params, normalize(rel_in, stats))
    return anchor + denormalize(z, stats)


def rollout(step_fn, windows: np.ndarray, steps: int) -> np.ndarray:
    """Recursive multi-step forecast; returns (B, steps, 2)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    win = np.array(windows, dtype=float)
    out = np.empty((win.shape[0], steps, 2))
    for k in range(steps):
        nxt = step_fn(win)
        out[:, k] = nxt
        win = np.concatenate([win[:, 1:], nxt[:, None]], axis=1)
    return out


def _history_array(history, need):
    if len(history) < need:
        raise ValueError(f"history needs at least {need} points, got {len(history)}")
    if isinstance(history[0], GeoPoint):
        return np.array([[p.lat, p.lon] for p in history]), history[-1].t
    return np.asarray(history, dtype=float), None


def predict_horizon(params, stats: NormStats, history, steps: int = 10, dt: float = 5.0,
                    in_len: int = 8) -> list[GeoPoint]:
    """Forecast ``steps`` future points from at least ``in_len`` resampled points."""
    xy, t0 = _history_array(history, in_len)
    path = rollout(lambda w: predict_next(params, stats, w), xy[None, -in_len:], steps)[0]
    t0 = 0.0 if t0 is None else t0
    return [GeoPoint(float(a), float(b), t0 + (k + 1) * dt) for k, (a, b) in enumerate(path)]


def linear_next(windows: np.ndarray) -> np.ndarray:
    return 2 * windows[:, -1] - windows[:, -2]


def linear_baseline(history, steps: int = 10, dt: float = 5.0) -> list[GeoPoint]:
    """Constant-velocity extrapolation of the last displacement."""
    xy, t0 = _history_array(history, 2)
    last, step = xy[-1], xy[-1] - xy[-2]
    t0 = 0.0 if t0 is None else t0
    return [GeoPoint(float(last[0] + k * step[0]), float(last[1] + k * step[1]), t0 + k * dt)
            for k in range(1, steps + 1)]


# -- checkpoints -------------------------------------------------------------

@dataclass
class Checkpoint:
    params: dict
    stats: NormStats
    dt: float
    config: TrainConfig
    manifest_digest: str = ""
    curve: list = field(default_factory=list)

    def step_fn(self):
        return lambda w: predict_next(self.params, self.stats, w)

    def save(self, path):
        blob = {
            "version": CHECKPOINT_VERSION,
            "config": asdict(self.config),
            "config_hash": self.config.digest(),
            "dt": self.dt,
            "stats": asdict(self.stats),
            "stats_hash": self.stats.digest(),
            "manifest_digest": self.manifest_digest,
            "shapes": {k: list(p.shape) for k, p in self.params.items()},
            "params": {k: p.ravel().tolist() for k, p in self.params.items()},
            "curve": [list(r) for r in self.curve],
        }
        Path(path).write_text(json.dumps(blob, sort_keys=True))

    @classmethod
    def load(cls, path) -> "Checkpoint":
        blob = json.loads(Path(path).read_text())
        if blob.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"checkpoint version {blob.get('version')} != {CHECKPOINT_VERSION}")
        config = TrainConfig(**blob["config"])
        if config.digest() != blob["config_hash"]:
            raise ValueError("checkpoint config hash mismatch")
        params = {k: np.array(v, dtype=float).reshape(blob["shapes"][k]) for k, v in blob["params"].items()}
        check_shapes(params)
        return cls(params, NormStats(**blob["stats"]), blob["dt"], config,
                   blob.get("manifest_digest", ""), [tuple(r) for r in blob.get("curve", [])])

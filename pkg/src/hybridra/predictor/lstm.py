"""A small stacked LSTM regressor written directly in numpy.

Forward and backward passes are explicit (backpropagation through time over
the input window) so gradients can be checked against finite differences.
Shapes: inputs ``(B, T, D)``, hidden ``(B, H)``, outputs ``(B, n_out)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

FORMAT_NAME = "hybridra-lstm"
FORMAT_VERSION = 1


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmModel:
    n_in: int
    hidden: int = 16
    layers: int = 1
    n_out: int = 2
    params: dict[str, np.ndarray] = field(default_factory=dict)
    # affine map from network output to target units: y = raw * scale + offset
    out_scale: np.ndarray = None
    out_offset: np.ndarray = None

    def __post_init__(self):
        if self.out_scale is None:
            self.out_scale = np.ones(self.n_out)
        if self.out_offset is None:
            self.out_offset = np.zeros(self.n_out)

    @classmethod
    def init(cls, n_in: int, hidden: int = 16, layers: int = 1, n_out: int = 2,
             rng: Optional[np.random.Generator] = None, init_range: float = 0.1) -> "LstmModel":
        rng = rng if rng is not None else np.random.default_rng(0)
        params = {}
        d = n_in
        for l in range(layers):
            params[f"W{l}"] = rng.uniform(-init_range, init_range, (d, 4 * hidden))
            params[f"U{l}"] = rng.uniform(-init_range, init_range, (hidden, 4 * hidden))
            params[f"b{l}"] = rng.uniform(-init_range, init_range, 4 * hidden)
            d = hidden
        params["V"] = rng.uniform(-init_range, init_range, (hidden, n_out))
        params["c"] = rng.uniform(-init_range, init_range, n_out)
        return cls(n_in, hidden, layers, n_out, params)

    def copy(self) -> "LstmModel":
        return LstmModel(self.n_in, self.hidden, self.layers, self.n_out,
                         {k: v.copy() for k, v in self.params.items()},
                         self.out_scale.copy(), self.out_offset.copy())

    # -- forward / backward -------------------------------------------------

    def forward(self, X: np.ndarray, keep_cache: bool = False):
        """Raw network output for a batch of sequences ``X`` (B, T, D)."""
        X = np.asarray(X, dtype=float)
        B, T, _ = X.shape
        H = self.hidden
        caches = []
        seq = X
        for l in range(self.layers):
            W, U, b = self.params[f"W{l}"], self.params[f"U{l}"], self.params[f"b{l}"]
            h = np.zeros((B, H))
            c = np.zeros((B, H))
            hs = np.empty((B, T, H))
            steps = []
            xW = seq @ W + b  # (B, T, 4H), input projection for all steps at once
            for t in range(T):
                z = xW[:, t] + h @ U
                i = sigmoid(z[:, :H])
                f = sigmoid(z[:, H:2 * H])
                o = sigmoid(z[:, 2 * H:3 * H])
                g = np.tanh(z[:, 3 * H:])
                c_prev, h_prev = c, h
                c = f * c_prev + i * g
                tc = np.tanh(c)
                h = o * tc
                hs[:, t] = h
                if keep_cache:
                    steps.append((i, f, o, g, c_prev, h_prev, tc))
            if keep_cache:
                caches.append((seq, steps))
            seq = hs
        h_top = seq[:, -1]
        y = h_top @ self.params["V"] + self.params["c"]
        if keep_cache:
            return y, (caches, h_top)
        return y

    def loss_and_grads(self, X: np.ndarray, Y: np.ndarray):
        """Mean squared error of the raw output against ``Y`` and its gradient."""
        y, (caches, h_top) = self.forward(X, keep_cache=True)
        B = y.shape[0]
        diff = y - Y
        loss = float(np.mean(diff**2))
        dy = 2.0 * diff / diff.size
        grads = {"V": h_top.T @ dy, "c": dy.sum(axis=0)}
        H = self.hidden
        # gradient w.r.t. the output sequence of the current layer
        dseq = np.zeros((B,) + caches[-1][0].shape[1:2] + (H,))
        dseq[:, -1] = dy @ self.params["V"].T
        for l in reversed(range(self.layers)):
            seq_in, steps = caches[l]
            W, U = self.params[f"W{l}"], self.params[f"U{l}"]
            T = seq_in.shape[1]
            dz_all = np.empty((B, T, 4 * H))
            dh_next = np.zeros((B, H))
            dc_next = np.zeros((B, H))
            for t in reversed(range(T)):
                i, f, o, g, c_prev, h_prev, tc = steps[t]
                dh = dseq[:, t] + dh_next
                do = dh * tc
                dc = dh * o * (1.0 - tc**2) + dc_next
                di = dc * g
                dg = dc * i
                df = dc * c_prev
                dz = np.concatenate([
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    do * o * (1.0 - o),
                    dg * (1.0 - g**2),
                ], axis=1)
                dz_all[:, t] = dz
                dh_next = dz @ U.T
                dc_next = dc * f
            h_prevs = np.stack([s[5] for s in steps], axis=1)  # (B, T, H)
            grads[f"W{l}"] = np.einsum("btd,btk->dk", seq_in, dz_all)
            grads[f"U{l}"] = np.einsum("bth,btk->hk", h_prevs, dz_all)
            grads[f"b{l}"] = dz_all.sum(axis=(0, 1))
            dseq = dz_all @ W.T
        return loss, grads

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Outputs in target units for ``X`` of shape (B, T, D) or (T, D)."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 2
        y = self.forward(X[None] if single else X) * self.out_scale + self.out_offset
        return y[0] if single else y

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "dims": {"n_in": self.n_in, "hidden": self.hidden,
                     "layers": self.layers, "n_out": self.n_out},
            "out_scale": self.out_scale.tolist(),
            "out_offset": self.out_offset.tolist(),
            "params": {
                k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                for k, v in self.params.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LstmModel":
        if d.get("format") != FORMAT_NAME:
            raise ValueError(f"not a {FORMAT_NAME} file")
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')}")
        dims = d["dims"]
        params = {k: np.array(v["data"], dtype=float).reshape(v["shape"])
                  for k, v in d["params"].items()}
        model = cls(dims["n_in"], dims["hidden"], dims["layers"], dims["n_out"], params,
                    np.array(d["out_scale"], dtype=float), np.array(d["out_offset"], dtype=float))
        if not all(np.isfinite(v).all() for v in params.values()):
            raise ValueError("model file contains non-finite parameters")
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "LstmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def gradient_check(model: LstmModel, X: np.ndarray, Y: np.ndarray, eps: float = 1e-5) -> dict[str, float]:
    """Max relative error between analytic and central-difference gradients,
    per parameter tensor."""
    _, grads = model.loss_and_grads(X, Y)
    out = {}
    for name, p in model.params.items():
        num = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + eps
            lp = float(np.mean((model.forward(X) - Y) ** 2))
            p[idx] = old - eps
            lm = float(np.mean((model.forward(X) - Y) ** 2))
            p[idx] = old
            num[idx] = (lp - lm) / (2 * eps)
        a = grads[name]
        denom = np.maximum(np.abs(a) + np.abs(num), 1e-8)
        out[name] = float(np.max(np.abs(a - num) / denom))
    return out


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    lr: float = 5e-3
    lr_decay: float = 1.0  # multiplicative per epoch
    clip_norm: float = 1.0
    patience: Optional[int] = None
    tol: float = 0.0
    standardize: bool = True


@dataclass
class TrainResult:
    model: LstmModel
    loss_history: list[float]
    best_epoch: int


def train(
    X: np.ndarray,
    Y: np.ndarray,
    cfg: TrainConfig = TrainConfig(),
    rng: Optional[np.random.Generator] = None,
    hidden: int = 16,
    layers: int = 1,
    model: Optional[LstmModel] = None,
    on_epoch: Optional[Callable[[int, float], None]] = None,
) -> TrainResult:
    """Fit an LSTM to windows ``X`` (N, T, D) and targets ``Y`` (N, n_out).

    Adam with global-norm gradient clipping. The returned model carries the
    parameters of the epoch with the lowest dataset loss, so the recorded
    best loss never goes up. ``loss_history[0]`` is the untrained loss.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if len(X) == 0:
        raise ValueError("empty training set")
    if cfg.epochs < 1:
        raise ValueError("epochs must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    if model is None:
        model = LstmModel.init(X.shape[2], hidden, layers, Y.shape[1], rng=rng)
    model = model.copy()
    if cfg.standardize:
        model.out_offset = Y.mean(axis=0)
        model.out_scale = np.where(Y.std(axis=0) > 1e-12, Y.std(axis=0), 1.0)
    Yn = (Y - model.out_offset) / model.out_scale

    def full_loss(m):
        return float(np.mean((m.forward(X) - Yn) ** 2))

    m1 = {k: np.zeros_like(v) for k, v in model.params.items()}
    m2 = {k: np.zeros_like(v) for k, v in model.params.items()}
    b1, b2, adam_eps = 0.9, 0.999, 1e-8
    step = 0
    lr = cfg.lr
    best = model.copy()
    best_loss = full_loss(model)
    history = [best_loss]
    best_epoch = 0
    n = len(X)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = model.loss_and_grads(X[idx], Yn[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(epoch, loss)
            norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if cfg.clip_norm and norm > cfg.clip_norm:
                grads = {k: g * (cfg.clip_norm / norm) for k, g in grads.items()}
            step += 1
            for k, g in grads.items():
                m1[k] = b1 * m1[k] + (1 - b1) * g
                m2[k] = b2 * m2[k] + (1 - b2) * g * g
                mh = m1[k] / (1 - b1**step)
                vh = m2[k] / (1 - b2**step)
                model.params[k] -= lr * mh / (np.sqrt(vh) + adam_eps)
        loss = full_loss(model)
        if not math.isfinite(loss):
            raise TrainingDiverged(epoch, loss)
        history.append(loss)
        if on_epoch is not None:
            on_epoch(epoch, loss)
        if loss < best_loss - cfg.tol:
            best_loss, best, best_epoch = loss, model.copy(), epoch
        elif cfg.patience is not None and epoch - best_epoch >= cfg.patience:
            break
        lr *= cfg.lr_decay
    return TrainResult(best, history, best_epoch)

"""Synthesizing (history, backlog) pairs and fitting the LSTM predictor.

Training traffic is produced by the simulator itself, so observations carry
the collision statistics the base station would see in operation. Half the
streams run on a fixed channel split; the other half run the scenario's own
reservation loop driven by the moving-average estimator, so the model also
sees the channel counts the slicer produces when it is in charge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .predictor import (
    History,
    LstmModel,
    LstmPredictor,
    MovingAveragePredictor,
    Observation,
    TrainConfig,
    TrainResult,
    history_features,
    mse,
    train,
)
from .protocol import Simulator
from .scenario import PredictorConfig, ReservationConfig, Scenario

# channel split used while collecting training traffic (54 channels, 5 URLLC)
TRAINING_SPLIT = (5, 49)


@dataclass
class Dataset:
    X: np.ndarray              # (N, T_w, N_FEATURES)
    Y: np.ndarray              # (N, 2) backlog / population
    windows: list[tuple[Observation, ...]]
    truth: np.ndarray          # (N, 2) raw backlog counts
    population: tuple[int, int]

    def __len__(self):
        return len(self.X)


def collection_scenario(scn: Scenario, split: tuple[int, int] = TRAINING_SPLIT) -> Scenario:
    return replace(
        scn,
        predictor=PredictorConfig("none", "", scn.predictor.window, 0),
        reservation=ReservationConfig("fixed", split[0], split[1]),
        access="uniform",
    )


def closed_loop_scenario(scn: Scenario) -> Scenario:
    return replace(
        scn,
        predictor=PredictorConfig("moving-average", "", scn.predictor.window,
                                  scn.predictor.min_channels),
        access="uniform",
    )


def build_dataset(scn: Scenario, samples: int, seed: int, streams: int = 4,
                  split: tuple[int, int] = TRAINING_SPLIT, closed_loop: bool = True) -> Dataset:
    """``samples`` windows drawn from ``streams`` independent simulated streams.

    Each sample pairs the last ``T_w`` observations before frame ``t`` with
    the backlog that contends in frame ``t``. With ``closed_loop`` every
    other stream runs the scenario's own reservation loop.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    T_w = scn.predictor.window
    tr = scn.traffic
    sources = [collection_scenario(scn, split)]
    if closed_loop:
        sources.append(closed_loop_scenario(scn))
    streams = max(1, min(streams, samples))
    per_stream = math.ceil(samples / streams)
    X, Y, wins, truth = [], [], [], []
    for i, ss in enumerate(np.random.SeedSequence(seed).spawn(streams)):
        sim = Simulator(sources[i % len(sources)], np.random.default_rng(ss), check=False)
        obs, backlog = [], []
        for _ in range(per_stream + T_w):
            o = sim.run_frame()
            obs.append(o.observation)
            backlog.append((o.urllc.contenders, o.mmtc.contenders))
        feats = history_features(obs, tr.T_p, tr.T_u)
        for t in range(T_w, T_w + per_stream):
            X.append(feats[t - T_w:t])
            wins.append(tuple(obs[t - T_w:t]))
            truth.append(backlog[t])
    truth_arr = np.array(truth[:samples], dtype=float)
    pop = np.array([max(tr.K_u, 1), max(tr.K_m, 1)], dtype=float)
    return Dataset(np.array(X[:samples]), truth_arr / pop, wins[:samples], truth_arr,
                   (tr.K_u, tr.K_m))


def lstm_mse(model: LstmModel, data: Dataset) -> np.ndarray:
    """Per-class population-normalized MSE of the raw (unrounded) output."""
    pred = np.clip(model.predict(data.X), 0.0, 1.0)
    return np.mean((pred - data.Y) ** 2, axis=0)


def moving_average_mse(data: Dataset, T_w: int) -> np.ndarray:
    K_u, K_m = data.population
    ma = MovingAveragePredictor(K_u, K_m)
    preds = []
    for win in data.windows:
        e = ma.predict(History(T_w, win))
        preds.append((e.k_hat_u, e.k_hat_m))
    preds = np.array(preds, dtype=float)
    return np.array([
        mse(preds[:, 0], data.truth[:, 0], K_u),
        mse(preds[:, 1], data.truth[:, 1], K_m),
    ])


@dataclass
class PredictorTraining:
    result: TrainResult
    train_set: Dataset
    untrained: LstmModel

    @property
    def model(self) -> LstmModel:
        return self.result.model


def train_predictor(scn: Scenario, epochs: int = 200, samples: int = 2000, seed: int = 0,
                    hidden: int = 16, layers: int = 1, lr: float = 5e-3,
                    batch_size: int = 64, on_epoch=None) -> PredictorTraining:
    data = build_dataset(scn, samples, seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    untrained = LstmModel.init(data.X.shape[2], hidden, layers, 2, rng=rng)
    cfg = TrainConfig(epochs=epochs, batch_size=batch_size, lr=lr)
    res = train(data.X, data.Y, cfg, rng=rng, model=untrained, on_epoch=on_epoch)
    return PredictorTraining(res, data, untrained)


def lstm_predictor(model: LstmModel, scn: Scenario) -> LstmPredictor:
    tr = scn.traffic
    return LstmPredictor(model, tr.K_u, tr.K_m, tr.T_p, tr.T_u, scn.predictor.window)

"""Backlog predictors: observations, history windows and the three estimators."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .lstm import LstmModel

# Expected colliders per collided channel under uniform random access
# (Schoute's dynamic-frame ALOHA estimate).
COLLIDERS_PER_COLLISION = 2.39

N_FEATURES = 8


class Triplet(NamedTuple):
    success: int
    collision: int
    idle: int

    @property
    def channels(self) -> int:
        return self.success + self.collision + self.idle


@dataclass(frozen=True)
class Observation:
    urllc: Triplet
    mmtc: Triplet
    frame_index: int


@dataclass(frozen=True)
class BacklogEstimate:
    k_hat_u: int
    k_hat_m: int

    @property
    def total(self) -> int:
        return self.k_hat_u + self.k_hat_m


class ColdStart(RuntimeError):
    """Raised when a learned predictor has not seen enough history."""


class History:
    """The last ``T_w`` observations, oldest first."""

    def __init__(self, T_w: int = 20, items: Sequence[Observation] = ()):
        if T_w < 1:
            raise ValueError("T_w must be >= 1")
        self.T_w = T_w
        self._window: deque[Observation] = deque(maxlen=T_w)
        for o in items:
            self.append(o)

    def append(self, obs: Observation) -> None:
        if self._window and obs.frame_index != self._window[-1].frame_index + 1:
            raise ValueError(
                f"history must be contiguous: got frame {obs.frame_index} "
                f"after {self._window[-1].frame_index}"
            )
        self._window.append(obs)

    def __len__(self):
        return len(self._window)

    def __iter__(self):
        return iter(self._window)

    @property
    def window(self) -> tuple[Observation, ...]:
        return tuple(self._window)

    @property
    def full(self) -> bool:
        return len(self._window) == self.T_w


def observation_features(obs: Observation, T_p: int, T_u: int) -> np.ndarray:
    """Triplets as fractions of each class's channels, plus traffic phases."""
    out = np.zeros(N_FEATURES)
    for k, trip in enumerate((obs.urllc, obs.mmtc)):
        n = trip.channels
        if n:
            out[3 * k: 3 * k + 3] = np.array(trip, dtype=float) / n
    out[6] = (obs.frame_index % T_p) / T_p
    out[7] = (obs.frame_index % T_u) / T_u
    return out


def history_features(history, T_p: int, T_u: int) -> np.ndarray:
    return np.array([observation_features(o, T_p, T_u) for o in history])


def mse(predictions, truths, population=None) -> float:
    """Mean squared error, optionally after dividing by class population.

    ``population`` may be a scalar or broadcast against the trailing axis,
    e.g. ``(K_u, K_m)`` for ``(N, 2)`` arrays.
    """
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(truths, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("mse of empty sequences")
    if population is not None:
        scale = np.maximum(np.asarray(population, dtype=float), 1.0)
        p, t = p / scale, t / scale
    return float(np.mean((p - t) ** 2))


class _Clamp:
    def __init__(self, K_u: int, K_m: int):
        self.K_u, self.K_m = K_u, K_m

    def clamp(self, u: float, m: float) -> BacklogEstimate:
        return BacklogEstimate(
            int(min(max(round(u), 0), self.K_u)), int(min(max(round(m), 0), self.K_m))
        )


class OraclePredictor(_Clamp):
    """Returns the realized backlog; the simulator passes it in."""

    name = "oracle"
    learned = False

    def predict(self, history: History, true_backlog: Optional[tuple[int, int]] = None) -> BacklogEstimate:
        if true_backlog is None:
            raise ValueError("oracle predictor needs the true backlog")
        return self.clamp(*true_backlog)


class MovingAveragePredictor(_Clamp):
    """Average of per-frame backlog estimates ``V_s + 2.39 V_c`` over the
    most recent ``span`` observations."""

    name = "moving-average"
    learned = True

    def __init__(self, K_u: int, K_m: int, span: Optional[int] = None):
        super().__init__(K_u, K_m)
        self.span = span

    def predict(self, history: History, true_backlog=None) -> BacklogEstimate:
        obs = list(history)
        if not obs:
            raise ColdStart("moving average needs at least one observation")
        if self.span:
            obs = obs[-self.span:]
        est = np.array([
            [o.urllc.success + COLLIDERS_PER_COLLISION * o.urllc.collision,
             o.mmtc.success + COLLIDERS_PER_COLLISION * o.mmtc.collision]
            for o in obs
        ])
        u, m = est.mean(axis=0)
        return self.clamp(u, m)


class LstmPredictor(_Clamp):
    """LSTM over the feature window; outputs population-normalized backlogs."""

    name = "lstm"
    learned = True

    def __init__(self, model: LstmModel, K_u: int, K_m: int, T_p: int, T_u: int, T_w: int = 20):
        super().__init__(K_u, K_m)
        self.model = model
        self.T_p, self.T_u, self.T_w = T_p, T_u, T_w

    def predict_normalized(self, history: History) -> np.ndarray:
        if len(history) < self.T_w:
            raise ColdStart(f"LSTM needs {self.T_w} observations, has {len(history)}")
        feats = history_features(list(history)[-self.T_w:], self.T_p, self.T_u)
        return self.model.predict(feats)

    def predict(self, history: History, true_backlog=None) -> BacklogEstimate:
        y = self.predict_normalized(history)
        return self.clamp(y[0] * self.K_u, y[1] * self.K_m)


def predict(predictor, history: History, true_backlog: Optional[tuple[int, int]] = None) -> BacklogEstimate:
    return predictor.predict(history, true_backlog)

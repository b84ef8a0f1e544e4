"""Per-frame arrival generation for the mMTC and URLLC user populations.

mMTC devices mix two behaviours: ``K_m - K_m_p`` aperiodic devices wake up
independently with probability ``p`` every frame, and ``K_m_p`` periodic
devices all report once every ``T_p`` frames. URLLC devices follow a Beta
activation profile that repeats every ``T_u`` frames.

The per-user masks are what the protocol consumes (it must know *which*
device got a packet); the count functions are thin wrappers kept for
statistical checks and for callers that only need totals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrafficConfig:
    K_m: int = 1000
    K_u: int = 25
    p: float = 0.001
    K_m_p: int = 10
    T_p: int = 10
    alpha: float = 3.0
    beta: float = 4.0
    T_u: int = 10

    def __post_init__(self):
        if self.K_m < 0 or self.K_u < 0:
            raise ValueError("population sizes must be non-negative")
        if not 0 <= self.K_m_p <= self.K_m:
            raise ValueError(f"K_m_p={self.K_m_p} must lie in [0, K_m={self.K_m}]")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} must lie in [0, 1]")
        if self.T_p < 1 or self.T_u < 1:
            raise ValueError("periods T_p and T_u must be >= 1 frame")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("Beta shape parameters must be > 0")


@dataclass(frozen=True)
class ArrivalBatch:
    frame_index: int
    new_mmtc: int
    new_urllc: int


def _beta_fn(a: float, b: float) -> float:
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def urllc_activation_prob(cfg: TrafficConfig, t: int) -> float:
    """Per-user URLLC activation probability at frame ``t``.

    The Beta density over one period, sampled at the integer offset
    ``tau = t mod T_u`` and clamped to ``[0, 1]``.
    """
    T = cfg.T_u
    tau = t % T
    a, b = cfg.alpha, cfg.beta
    # 0**0 == 1 keeps alpha == 1 / beta == 1 well defined at the edges
    num = float(tau) ** (a - 1) * float(T - tau) ** (b - 1)
    q = num / (T ** (a + b - 1) * _beta_fn(a, b))
    return min(1.0, max(0.0, q))


def urllc_profile(cfg: TrafficConfig) -> np.ndarray:
    """Activation probability for every offset of one URLLC period."""
    return np.array([urllc_activation_prob(cfg, tau) for tau in range(cfg.T_u)])


def mmtc_arrival_mask(cfg: TrafficConfig, t: int, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask of length ``K_m``: which mMTC devices generate a packet.

    Indices ``[0, K_m_p)`` are the periodic devices, the rest are aperiodic.
    """
    if t < 0:
        raise ValueError("frame index must be >= 0")
    mask = np.empty(cfg.K_m, dtype=bool)
    mask[: cfg.K_m_p] = t % cfg.T_p == 0
    # U[0,1) >= 1 - p
    mask[cfg.K_m_p :] = rng.random(cfg.K_m - cfg.K_m_p) >= 1.0 - cfg.p
    return mask


def urllc_arrival_mask(cfg: TrafficConfig, t: int, rng: np.random.Generator) -> np.ndarray:
    if t < 0:
        raise ValueError("frame index must be >= 0")
    q = urllc_activation_prob(cfg, t)
    return rng.random(cfg.K_u) >= 1.0 - q if q > 0 else np.zeros(cfg.K_u, dtype=bool)


def gen_mmtc_arrivals(cfg: TrafficConfig, t: int, rng: np.random.Generator) -> int:
    return int(mmtc_arrival_mask(cfg, t, rng).sum())


def gen_urllc_arrivals(cfg: TrafficConfig, t: int, rng: np.random.Generator) -> int:
    return int(urllc_arrival_mask(cfg, t, rng).sum())


def gen_arrivals(cfg: TrafficConfig, t: int, rng: np.random.Generator) -> ArrivalBatch:
    return ArrivalBatch(t, gen_mmtc_arrivals(cfg, t, rng), gen_urllc_arrivals(cfg, t, rng))


def expected_arrivals(cfg: TrafficConfig, t: int) -> tuple[float, float]:
    """Mean (mMTC, URLLC) arrivals at frame ``t``."""
    m = (cfg.K_m - cfg.K_m_p) * cfg.p + (cfg.K_m_p if t % cfg.T_p == 0 else 0)
    return m, cfg.K_u * urllc_activation_prob(cfg, t)

"""Access class barring: barring factors, the per-device check and delays."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

FIXED = "fixed"
OPTIMAL = "optimal"


@dataclass(frozen=True)
class AcbConfig:
    """``mode`` is ``"fixed"`` (broadcast ``p`` every frame) or ``"optimal"``
    (``min(1, 1/n_bar)`` from the true collision multiplicities)."""

    mode: str = OPTIMAL
    p: float = 1.0
    T_acb: int = 0
    W: int = 10

    def __post_init__(self):
        if self.mode not in (FIXED, OPTIMAL):
            raise ValueError(f"unknown ACB mode {self.mode!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} must lie in [0, 1]")
        if self.T_acb < 0:
            raise ValueError("T_acb must be >= 0")
        if self.W < 1:
            raise ValueError("W must be >= 1")

    @classmethod
    def parse_mode(cls, text: str, **kw) -> "AcbConfig":
        """Build from ``"optimal"`` or ``"fixed:0.6"``."""
        name, _, arg = text.partition(":")
        if name == FIXED:
            return cls(FIXED, float(arg) if arg else 1.0, **kw)
        if name == OPTIMAL and not arg:
            return cls(OPTIMAL, 1.0, **kw)
        raise ValueError(f"bad ACB mode {text!r}; expected 'optimal' or 'fixed:<p>'")

    def mode_string(self) -> str:
        return OPTIMAL if self.mode == OPTIMAL else f"{FIXED}:{self.p:g}"

    def factor(self, collided_counts: np.ndarray) -> float:
        """Broadcast factor given the number of users on each collided channel."""
        if self.mode == FIXED:
            return self.p
        if len(collided_counts) == 0:
            return 1.0
        return optimal_acb(float(np.mean(collided_counts)))


def expected_success(k_breve: int, L: int) -> float:
    """Mean number of channels picked by exactly one of ``k_breve`` users
    choosing uniformly among ``L`` channels."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if k_breve < 0:
        raise ValueError("k_breve must be >= 0")
    if k_breve == 0:
        return 0.0
    return k_breve * (1.0 - 1.0 / L) ** (k_breve - 1)


def optimal_acb(n_bar: float) -> float:
    if n_bar < 0:
        raise ValueError("n_bar must be >= 0")
    return 1.0 if n_bar <= 1.0 else 1.0 / n_bar


def acb_check(p: float, rng: np.random.Generator, size: Optional[int] = None):
    """Draw ``q ~ U[0,1)``; a device passes iff ``q <= p``.

    Returns a bool, or a bool array when ``size`` is given.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} must lie in [0, 1]")
    q = rng.random(size)
    # q is never exactly 0 in practice; keep p == 0 a hard "never"
    passed = (q <= p) & (p > 0.0)
    return bool(passed) if size is None else passed


def barring_delay(T_acb: int, rng: np.random.Generator, size: Optional[int] = None):
    """Frames a barred device waits: ``round((0.7 + 0.1 U) * T_acb)``."""
    if T_acb < 0:
        raise ValueError("T_acb must be >= 0")
    u = rng.random(size)
    d = np.rint((0.7 + 0.1 * u) * T_acb).astype(int)
    return int(d) if size is None else d

"""Resource-block grid, NR numerology and packet-size arithmetic.

RB coordinates are 0-based. ``f`` indexes frequency RBs (0..F-1) and ``s``
indexes time slots (0..S-1).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

MAX_MU = 2  # larger numerologies are mmWave-only


class ServiceClass(str, enum.Enum):
    URLLC = "urllc"
    MMTC = "mmtc"


@dataclass(frozen=True)
class GridConfig:
    F: int = 50
    S: int = 10
    nu: int = 14
    xi: int = 5

    def __post_init__(self):
        if self.F < 1 or self.S < 1 or self.nu < 1:
            raise ValueError("F, S and nu must be >= 1")
        if self.xi < 0:
            raise ValueError("xi must be >= 0")

    @property
    def area(self) -> int:
        return self.F * self.S


@dataclass(frozen=True)
class ServiceProfile:
    packet_bytes: int
    mod_order: int
    service: ServiceClass
    iota_override: Optional[int] = None

    def __post_init__(self):
        if self.packet_bytes < 1:
            raise ValueError("packet_bytes must be >= 1")
        m = self.mod_order
        if m < 2 or m > 256 or m & (m - 1):
            raise ValueError(f"mod_order={m} must be a power of two in [2, 256]")
        if self.iota_override is not None and self.iota_override < 1:
            raise ValueError("iota_override must be >= 1")


def urllc_profile(iota_override: Optional[int] = None) -> ServiceProfile:
    return ServiceProfile(32, 4, ServiceClass.URLLC, iota_override)


def mmtc_profile(iota_override: Optional[int] = 16) -> ServiceProfile:
    return ServiceProfile(200, 256, ServiceClass.MMTC, iota_override)


@dataclass(frozen=True)
class ChannelRect:
    f0: int
    s0: int
    f_ext: int
    s_ext: int
    mu: int = 0

    def __post_init__(self):
        if self.f_ext < 1 or self.s_ext < 1:
            raise ValueError("extents must be >= 1")
        if self.f0 < 0 or self.s0 < 0:
            raise ValueError("origin must be non-negative")
        if not 0 <= self.mu <= MAX_MU:
            raise ValueError(f"numerology mu={self.mu} outside 0..{MAX_MU}")

    @property
    def f1(self) -> int:
        return self.f0 + self.f_ext

    @property
    def s1(self) -> int:
        return self.s0 + self.s_ext

    @property
    def area(self) -> int:
        return self.f_ext * self.s_ext

    def fits(self, grid: GridConfig) -> bool:
        return self.f1 <= grid.F and self.s1 <= grid.S

    def overlaps(self, other: "ChannelRect") -> bool:
        return (
            self.f0 < other.f1 and other.f0 < self.f1
            and self.s0 < other.s1 and other.s0 < self.s1
        )


def check_mu(mu: int) -> None:
    if not 0 <= mu <= MAX_MU:
        raise ValueError(f"numerology mu={mu} not supported (0..{MAX_MU}; higher is mmWave only)")


def tti(mu: int, n_sym: int, nu: int = 14) -> float:
    """Duration in ms of ``n_sym`` OFDM symbols under numerology ``mu``."""
    check_mu(mu)
    if n_sym < 1:
        raise ValueError("n_sym must be >= 1")
    return n_sym / (2**mu * nu)


def symbols_per_ms(mu: int, nu: int = 14) -> int:
    check_mu(mu)
    return 2**mu * nu


def subcarrier_spacing_khz(mu: int) -> float:
    check_mu(mu)
    return 15.0 * 2**mu


def packet_rbs(profile: ServiceProfile, grid: GridConfig) -> int:
    """Number of base RBs (iota) a packet of this service needs."""
    if profile.iota_override is not None:
        return profile.iota_override
    symbols = 8 * profile.packet_bytes / math.log2(profile.mod_order) + grid.xi
    return math.ceil(symbols / grid.nu)


def z_bound(grid: GridConfig, iota_u: int, K_u: int, iota_m: int) -> int:
    """Upper bound on the channel count with every URLLC user served first."""
    if iota_m < 1:
        raise ValueError("iota_m must be >= 1")
    rest = grid.area - iota_u * K_u
    if rest < 0:
        return min(K_u, grid.area // iota_u)
    return rest // iota_m + K_u


def aligned_width(width: int, mu: int) -> int:
    """Smallest multiple of ``2**mu`` that is >= ``width``."""
    step = 2**mu
    return -(-width // step) * step

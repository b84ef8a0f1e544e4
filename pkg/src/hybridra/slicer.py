"""Time-frequency slicing of the frame into dedicated URLLC / mMTC channels.

Channels are packed with a maximal-rectangles bottom-left heuristic. URLLC
channels come first (priority), one slot tall. mMTC boxes are shaped at the
smallest numerology that fits the candidate free rectangle, escalating
``mu`` from 0 to 2 before moving on to the next bottom-left vertex.

Free space is tracked as the set of *maximal* free rectangles, so any box
that fits anywhere in the free space fits inside one of them with its
bottom-left corner on that rectangle's corner.
"""
from __future__ import annotations

import functools
import io
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .grid import (
    MAX_MU,
    ChannelRect,
    GridConfig,
    ServiceClass,
    ServiceProfile,
    aligned_width,
    packet_rbs,
)


class FreeRect(NamedTuple):
    f0: int
    s0: int
    f_ext: int
    s_ext: int

    @property
    def area(self) -> int:
        return self.f_ext * self.s_ext

    def contains(self, other: "FreeRect") -> bool:
        return (
            self.f0 <= other.f0 and self.s0 <= other.s0
            and other.f0 + other.f_ext <= self.f0 + self.f_ext
            and other.s0 + other.s_ext <= self.s0 + self.s_ext
        )


@dataclass(frozen=True)
class ChannelPlan:
    urllc_channels: tuple[ChannelRect, ...] = ()
    mmtc_channels: tuple[ChannelRect, ...] = ()
    free_rects: tuple[FreeRect, ...] = ()
    frame_index: int = 0

    @property
    def L_u(self) -> int:
        return len(self.urllc_channels)

    @property
    def L_m(self) -> int:
        return len(self.mmtc_channels)

    @property
    def L(self) -> int:
        return self.L_u + self.L_m

    @property
    def channels(self) -> tuple[ChannelRect, ...]:
        return self.urllc_channels + self.mmtc_channels

    @property
    def occupied_rbs(self) -> int:
        return sum(c.area for c in self.channels)


@dataclass(frozen=True)
class SlicerWeights:
    w_u: float = 0.9
    w_m: float = 0.05
    w_p: float = 0.05

    def __post_init__(self):
        for w in (self.w_u, self.w_m, self.w_p):
            if not 0.0 <= w <= 1.0:
                raise ValueError("weights must lie in [0, 1]")
        if not math.isclose(self.w_u + self.w_m + self.w_p, 1.0, abs_tol=1e-9):
            raise ValueError("weights must sum to 1")
        if not self.w_u > self.w_m >= self.w_p:
            raise ValueError("weights must satisfy w_u > w_m >= w_p")


@dataclass(frozen=True)
class GainVectors:
    rho_u: tuple[float, ...] = ()
    rho_m: tuple[float, ...] = ()

    def __post_init__(self):
        if any(g < 0 for g in self.rho_u + self.rho_m):
            raise ValueError("gains must be >= 0")

    @classmethod
    def unit(cls, plan: ChannelPlan) -> "GainVectors":
        return cls((1.0,) * plan.L_u, (1.0,) * plan.L_m)


@dataclass(frozen=True)
class Violation:
    constraint: str
    channels: tuple[int, ...]
    detail: str = field(default="", compare=False)

    def __str__(self):
        idx = ",".join(map(str, self.channels))
        return f"{self.constraint} at ({idx})" + (f": {self.detail}" if self.detail else "")


class MaxRects:
    """Maximal free rectangles of an F x S bin."""

    def __init__(self, F: int, S: int):
        self.free: list[FreeRect] = [FreeRect(0, 0, F, S)]

    def candidates(self) -> list[FreeRect]:
        # bottom-left: earliest slot, then lowest frequency
        return sorted(self.free, key=lambda r: (r.s0, r.f0, -r.s_ext, -r.f_ext))

    def largest_area(self) -> int:
        return max((r.area for r in self.free), default=0)

    def place(self, f0: int, s0: int, f_ext: int, s_ext: int) -> None:
        f1, s1 = f0 + f_ext, s0 + s_ext
        out: list[FreeRect] = []
        for r in self.free:
            rf1, rs1 = r.f0 + r.f_ext, r.s0 + r.s_ext
            if f0 >= rf1 or f1 <= r.f0 or s0 >= rs1 or s1 <= r.s0:
                out.append(r)
                continue
            if f0 > r.f0:
                out.append(FreeRect(r.f0, r.s0, f0 - r.f0, r.s_ext))
            if f1 < rf1:
                out.append(FreeRect(f1, r.s0, rf1 - f1, r.s_ext))
            if s0 > r.s0:
                out.append(FreeRect(r.f0, r.s0, r.f_ext, s0 - r.s0))
            if s1 < rs1:
                out.append(FreeRect(r.f0, s1, r.f_ext, rs1 - s1))
        self.free = _prune(out)


def _prune(rects: list[FreeRect]) -> list[FreeRect]:
    uniq = list(dict.fromkeys(rects))
    return [
        r for i, r in enumerate(uniq)
        if not any(j != i and o.contains(r) for j, o in enumerate(uniq))
    ]


def shape_mmtc_box(iota_m: int, mu: int, width: int, height: int) -> tuple[int, int] | None:
    """Narrowest ``(f_ext, s_ext)`` box of area >= iota_m at numerology ``mu``
    that fits a ``width x height`` free rectangle, or None."""
    step = 2**mu
    k = 1
    while step * k <= width:
        f = step * k
        s = -(-iota_m // f)
        if s <= height:
            return f, s
        k += 1
    return None


def urllc_width(iota_u: int, urllc_mu: int) -> int:
    return aligned_width(iota_u, urllc_mu)


@functools.lru_cache(maxsize=4096)
def _pack(k_u: int, k_m: int, F: int, S: int, iota_u: int, iota_m: int, urllc_mu: int) -> ChannelPlan:
    bins = MaxRects(F, S)
    w_u = urllc_width(iota_u, urllc_mu)
    urllc: list[ChannelRect] = []
    while len(urllc) < k_u:
        spot = next((r for r in bins.candidates() if r.f_ext >= w_u), None)
        if spot is None:
            break
        bins.place(spot.f0, spot.s0, w_u, 1)
        urllc.append(ChannelRect(spot.f0, spot.s0, w_u, 1, urllc_mu))

    mmtc: list[ChannelRect] = []
    while len(mmtc) < k_m and bins.largest_area() >= iota_m:
        placed = None
        for r in bins.candidates():
            for mu in range(MAX_MU + 1):
                box = shape_mmtc_box(iota_m, mu, r.f_ext, r.s_ext)
                if box is not None:
                    placed = ChannelRect(r.f0, r.s0, box[0], box[1], mu)
                    break
            if placed is not None:
                break
        if placed is None:
            break
        bins.place(placed.f0, placed.s0, placed.f_ext, placed.s_ext)
        mmtc.append(placed)
    return ChannelPlan(tuple(urllc), tuple(mmtc), tuple(bins.candidates()))


@functools.lru_cache(maxsize=4096)
def _mmtc_cap(k_u: int, F: int, S: int, iota_u: int, iota_m: int, urllc_mu: int) -> int:
    """Most mMTC channels granted next to ``k_u`` URLLC channels.

    Greedy placement can occasionally fit one more mMTC box after an extra
    URLLC channel shifts the layout; capping at the running minimum over
    smaller URLLC demands keeps the mMTC share non-increasing in ``k_u``.
    mMTC placement is prefix-stable, so the cap just truncates the plan.
    """
    cap = F * S // iota_m
    for k in range(k_u + 1):
        cap = min(cap, _pack(k, F * S // iota_m, F, S, iota_u, iota_m, urllc_mu).L_m)
    return cap


@functools.lru_cache(maxsize=4096)
def _pack_baseline(k_u: int, k_m: int, F: int, S: int, width: int, mu: int) -> ChannelPlan:
    bins = MaxRects(F, S)
    rects: list[ChannelRect] = []
    while len(rects) < k_u + k_m:
        spot = next((r for r in bins.candidates() if r.f_ext >= width), None)
        if spot is None:
            break
        bins.place(spot.f0, spot.s0, width, 1)
        rects.append(ChannelRect(spot.f0, spot.s0, width, 1, mu))
    n_u = min(k_u, len(rects))
    return ChannelPlan(tuple(rects[:n_u]), tuple(rects[n_u:]), tuple(bins.candidates()))


def maxrect_pack(
    k_hat_u: int,
    k_hat_m: int,
    grid: GridConfig,
    urllc: ServiceProfile,
    mmtc: ServiceProfile,
    urllc_mu: int = 2,
    frame_index: int = 0,
) -> ChannelPlan:
    """Pack up to ``k_hat_u`` URLLC and ``k_hat_m`` mMTC channels into the grid.

    URLLC channels are one slot tall and ``iota_u`` RBs wide, rounded up to
    the ``urllc_mu`` sub-channel width (``urllc_mu=2`` turns 10 RBs into
    three 4-RB sub-channels). Results are memoized on the demand clamped to
    what the grid could ever hold, which leaves the output unchanged.
    """
    if k_hat_u < 0 or k_hat_m < 0:
        raise ValueError("channel demands must be >= 0")
    iota_u, iota_m = packet_rbs(urllc, grid), packet_rbs(mmtc, grid)
    k_u = min(int(k_hat_u), grid.area // urllc_width(iota_u, urllc_mu))
    k_m = min(int(k_hat_m), _mmtc_cap(k_u, grid.F, grid.S, iota_u, iota_m, urllc_mu))
    plan = _pack(k_u, k_m, grid.F, grid.S, iota_u, iota_m, urllc_mu)
    return replace(plan, frame_index=frame_index) if frame_index else plan


def baseline_pack(
    k_hat_u: int,
    k_hat_m: int,
    grid: GridConfig,
    urllc: ServiceProfile,
    mmtc: ServiceProfile,
    mu: int = MAX_MU,
    frame_index: int = 0,
) -> ChannelPlan:
    """No-slicing layout: identical one-slot channels wide enough for either
    service at numerology ``mu``; URLLC demand is served first."""
    if k_hat_u < 0 or k_hat_m < 0:
        raise ValueError("channel demands must be >= 0")
    width = aligned_width(max(packet_rbs(urllc, grid), packet_rbs(mmtc, grid)), mu)
    cap = grid.S * (grid.F // width)
    k_u = min(int(k_hat_u), cap)
    k_m = min(int(k_hat_m), cap - k_u)
    plan = _pack_baseline(k_u, k_m, grid.F, grid.S, width, mu)
    return replace(plan, frame_index=frame_index) if frame_index else plan


def validate_plan(
    plan: ChannelPlan, grid: GridConfig, urllc: ServiceProfile, mmtc: ServiceProfile
) -> list[Violation]:
    """List every constraint the plan breaks; empty means feasible.

    Channel indices count URLLC channels first, then mMTC channels.
    """
    out: list[Violation] = []
    chans = plan.channels
    iota = {ServiceClass.URLLC: packet_rbs(urllc, grid), ServiceClass.MMTC: packet_rbs(mmtc, grid)}
    for i, c in enumerate(chans):
        cls = ServiceClass.URLLC if i < plan.L_u else ServiceClass.MMTC
        if c.f_ext < 1 or c.s_ext < 1:
            out.append(Violation("contiguity", (i,)))
        if not c.fits(grid):
            out.append(Violation("bounds", (i,), f"{c} outside {grid.F}x{grid.S}"))
        if cls is ServiceClass.URLLC and c.s_ext != 1:
            out.append(Violation("urllc-time", (i,), f"s_ext={c.s_ext}"))
        if c.f_ext % 2**c.mu:
            out.append(Violation("numerology", (i,), f"f_ext={c.f_ext}, mu={c.mu}"))
        if c.area < iota[cls]:
            out.append(Violation("packet-size", (i,), f"area={c.area} < {iota[cls]}"))
    for i in range(len(chans)):
        for j in range(i + 1, len(chans)):
            if chans[i].overlaps(chans[j]):
                out.append(Violation("overlap", (i, j)))
    return out


def objective(
    plan: ChannelPlan,
    gains: GainVectors,
    weights: SlicerWeights,
    k_breve: int,
    z: int,
) -> float:
    """Weighted received-power reward minus the channel-shortage penalty."""
    if len(gains.rho_u) != plan.L_u or len(gains.rho_m) != plan.L_m:
        raise ValueError(
            f"gain lengths ({len(gains.rho_u)}, {len(gains.rho_m)}) do not match "
            f"plan ({plan.L_u}, {plan.L_m})"
        )
    reward = weights.w_u * sum(gains.rho_u) + weights.w_m * sum(gains.rho_m)
    shortage = max(0, k_breve - min(plan.L, z))
    return reward - weights.w_p * shortage


def occupancy(plan: ChannelPlan, grid: GridConfig) -> np.ndarray:
    """``(F, S)`` integer map: 0 free, else 1-based channel id (URLLC first)."""
    occ = np.zeros((grid.F, grid.S), dtype=int)
    for i, c in enumerate(plan.channels, start=1):
        occ[c.f0 : c.f1, c.s0 : c.s1] = i
    return occ


def occupancy_text(plan: ChannelPlan, grid: GridConfig) -> str:
    """One line per frequency RB (highest on top), one char per slot:
    ``.`` free, ``U`` URLLC, ``0``/``1``/``2`` mMTC channel numerology."""
    occ = occupancy(plan, grid)
    chars = ["."] + ["U"] * plan.L_u + [str(c.mu) for c in plan.mmtc_channels]
    return "\n".join("".join(chars[v] for v in occ[f]) for f in range(grid.F - 1, -1, -1)) + "\n"


def occupancy_csv(plan: ChannelPlan, grid: GridConfig) -> str:
    buf = io.StringIO()
    np.savetxt(buf, occupancy(plan, grid), fmt="%d", delimiter=",")
    return buf.getvalue()


def plan_capacity(
    k_hat_u: int, grid: GridConfig, urllc: ServiceProfile, mmtc: ServiceProfile, urllc_mu: int = 2
) -> int:
    """Total channels packed when URLLC asks for ``k_hat_u`` and mMTC demand is unbounded."""
    return maxrect_pack(k_hat_u, grid.area, grid, urllc, mmtc, urllc_mu).L

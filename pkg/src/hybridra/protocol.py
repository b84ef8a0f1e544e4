"""Frame-level engine for the four-step random-access procedure.

Per frame: barred devices whose timer ran out rejoin, new packets arrive,
the base station predicts the backlog and reserves channels (SIB2), every
active device picks one channel of its class (Msg1), colliders run the ACB
check against the broadcast factor (Msg2), and on each collided channel a
lone ACB survivor transmits while two or more collide again (Msg3).
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from . import acb as acb_mod
from .grid import ServiceClass
from .metrics import FRAME_FIELDS, MetricsSeries, channel_loading, normalized_throughput
from .predictor import (
    ColdStart,
    History,
    LstmModel,
    LstmPredictor,
    MovingAveragePredictor,
    Observation,
    OraclePredictor,
    Triplet,
)
from .scenario import Scenario
from .slicer import ChannelPlan, baseline_pack, maxrect_pack
from .traffic import expected_arrivals, mmtc_arrival_mask, urllc_arrival_mask

log = logging.getLogger(__name__)

IDLE, ACTIVE, BARRED = 0, 1, 2


class ConservationError(AssertionError):
    pass


@dataclass(frozen=True)
class ClassOutcome:
    """What happened to one service class in one frame."""

    channels: int
    triplet: Triplet           # final channel states after Msg3
    msg1_collided: int         # channels with >= 2 selectors in Msg1
    carried: int               # active at frame start
    rejoined: int              # barring timer expired this frame
    arrivals: int              # new packets accepted
    blocked: int               # new packets lost to a busy device
    served: int
    dropped: int
    barred: int
    backlog: int               # active after the frame
    p_acb: float
    delay_sum: int             # frames from arrival to success, summed

    @property
    def backlog_in(self) -> int:
        return self.carried + self.rejoined

    @property
    def contenders(self) -> int:
        return self.carried + self.rejoined + self.arrivals

    def conserved(self) -> bool:
        return self.contenders == self.served + self.dropped + self.barred + self.backlog


@dataclass(frozen=True)
class FrameOutcome:
    frame_index: int
    urllc: ClassOutcome
    mmtc: ClassOutcome
    k_hat_u: float
    k_hat_m: float

    @property
    def observation(self) -> Observation:
        return Observation(self.urllc.triplet, self.mmtc.triplet, self.frame_index)

    @property
    def plan_summary(self) -> tuple[int, int]:
        return self.urllc.channels, self.mmtc.channels

    def row(self, K_u: int, K_m: int) -> dict[str, float]:
        u, m = self.urllc, self.mmtc
        L = u.channels + m.channels
        nan = float("nan")
        return {
            "L_u": u.channels, "L_m": m.channels,
            "backlog_in_u": u.backlog_in, "backlog_in_m": m.backlog_in,
            "arrivals_u": u.arrivals, "arrivals_m": m.arrivals,
            "served_u": u.served, "served_m": m.served,
            "collided_u": u.triplet.collision, "collided_m": m.triplet.collision,
            "idle_u": u.triplet.idle, "idle_m": m.triplet.idle,
            "msg1_collided_u": u.msg1_collided, "msg1_collided_m": m.msg1_collided,
            "dropped_u": u.dropped, "dropped_m": m.dropped,
            "barred_u": u.barred, "barred_m": m.barred,
            "blocked_u": u.blocked, "blocked_m": m.blocked,
            "backlog_u": u.backlog, "backlog_m": m.backlog,
            "k_hat_u": self.k_hat_u, "k_hat_m": self.k_hat_m,
            "p_acb_u": u.p_acb, "p_acb_m": m.p_acb,
            "cl_u": channel_loading(u.contenders, u.channels),
            "cl_m": channel_loading(m.contenders, m.channels),
            "eta_u": normalized_throughput(*u.triplet),
            "eta_m": normalized_throughput(*m.triplet),
            "eta_total": (u.served + m.served) / L if L else 0.0,
            "delay_m": m.delay_sum / m.served if m.served else nan,
            "sqerr_u": _sqerr(self.k_hat_u, u.contenders, K_u),
            "sqerr_m": _sqerr(self.k_hat_m, m.contenders, K_m),
        }


def _sqerr(k_hat: float, truth: int, K: int) -> float:
    if np.isnan(k_hat):
        return float("nan")
    return ((k_hat - truth) / max(K, 1)) ** 2


SERIES_FIELDS = FRAME_FIELDS + ("delay_m", "sqerr_u", "sqerr_m")


class UserPopulation:
    """Per-device state of one service class."""

    def __init__(self, service: ServiceClass, K: int):
        self.service = service
        self.K = K
        self.status = np.zeros(K, dtype=np.int8)
        self.attempts = np.zeros(K, dtype=np.int32)
        self.until = np.zeros(K, dtype=np.int64)
        self.born = np.zeros(K, dtype=np.int64)
        self._carried = self._rejoined = self._arrivals = self._blocked = 0

    @property
    def active(self) -> int:
        return int(np.count_nonzero(self.status == ACTIVE))

    def begin_frame(self, t: int, arrivals: np.ndarray) -> int:
        """Rejoin expired barrings and admit new packets; returns the backlog."""
        self._carried = self.active
        expired = (self.status == BARRED) & (self.until <= t)
        self.status[expired] = ACTIVE
        self._rejoined = int(expired.sum())
        busy = self.status != IDLE
        self._blocked = int(np.count_nonzero(arrivals & busy))
        new = arrivals & ~busy
        self.status[new] = ACTIVE
        self.attempts[new] = 0
        self.born[new] = t
        self._arrivals = int(new.sum())
        return self.active

    def access(self, t: int, L: int, cfg: acb_mod.AcbConfig, use_acb: bool,
               coordinated: bool, rng: np.random.Generator) -> ClassOutcome:
        """Msg1 to Msg3 for every active device over ``L`` dedicated channels."""
        idx = np.flatnonzero(self.status == ACTIVE)
        n = idx.size
        served = dropped = barred = delay_sum = 0
        p = float("nan")
        if L == 0 or n == 0:
            trip = Triplet(0, 0, L)
            return self._outcome(L, trip, 0, 0, 0, 0, p, 0)

        if coordinated and n <= L:
            choice = rng.permutation(L)[:n]
        else:
            choice = rng.integers(0, L, size=n)
        self.attempts[idx] += 1
        counts = np.bincount(choice, minlength=L)
        on_count = counts[choice]

        solo = on_count == 1
        coll = ~solo
        collided_channels = counts[counts >= 2]
        msg1_collided = collided_channels.size
        win = solo.copy()
        bar = np.zeros(n, dtype=bool)
        resolved_channels = 0
        if msg1_collided:
            p = cfg.factor(collided_channels) if use_acb else 1.0
            passed = np.zeros(n, dtype=bool)
            passed[coll] = acb_mod.acb_check(p, rng, size=int(coll.sum()))
            survivors = np.bincount(choice[passed], minlength=L)
            lone = passed & (survivors[choice] == 1)
            win |= lone
            resolved_channels = int(lone.sum())
            bar = coll & ~passed
        elif use_acb:
            p = cfg.factor(collided_channels)

        won = idx[win]
        served = won.size
        delay_sum = int((t - self.born[won]).sum())
        self.status[won] = IDLE
        self.attempts[won] = 0

        lost = idx[~win]
        exhausted = lost[self.attempts[lost] >= cfg.W]
        dropped = exhausted.size
        self.status[exhausted] = IDLE
        self.attempts[exhausted] = 0

        to_bar = idx[bar]
        to_bar = to_bar[self.status[to_bar] == ACTIVE]
        barred = to_bar.size
        if barred:
            delay = acb_mod.barring_delay(cfg.T_acb, rng, size=barred)
            self.status[to_bar] = BARRED
            self.until[to_bar] = t + np.maximum(delay, 1)

        idle = int(np.count_nonzero(counts == 0))
        success = int(np.count_nonzero(counts == 1)) + resolved_channels
        trip = Triplet(success, L - success - idle, idle)
        return self._outcome(L, trip, msg1_collided, served, dropped, barred, p, delay_sum)

    def _outcome(self, L, trip, msg1_collided, served, dropped, barred, p, delay_sum) -> ClassOutcome:
        return ClassOutcome(
            channels=L, triplet=trip, msg1_collided=msg1_collided,
            carried=self._carried, rejoined=self._rejoined, arrivals=self._arrivals,
            blocked=self._blocked, served=served, dropped=dropped, barred=barred,
            backlog=self.active, p_acb=p, delay_sum=delay_sum,
        )


def make_predictor(scn: Scenario):
    tr = scn.traffic
    kind = scn.predictor.kind
    if kind == "oracle":
        return OraclePredictor(tr.K_u, tr.K_m)
    if kind == "moving-average":
        return MovingAveragePredictor(tr.K_u, tr.K_m)
    if kind == "lstm":
        model = LstmModel.load(scn.predictor.model_path)
        return LstmPredictor(model, tr.K_u, tr.K_m, tr.T_p, tr.T_u, scn.predictor.window)
    return None


class Simulator:
    """One realization: user state, observation history and the frame loop."""

    def __init__(self, scn: Scenario, rng: np.random.Generator, predictor=None,
                 check: bool = True, event_log: Optional[TextIO] = None):
        self.scn = scn
        self.rng = rng
        self.urllc = UserPopulation(ServiceClass.URLLC, scn.traffic.K_u)
        self.mmtc = UserPopulation(ServiceClass.MMTC, scn.traffic.K_m)
        self.predictor = predictor if predictor is not None else make_predictor(scn)
        self.history = History(scn.predictor.window)
        self._fallback = MovingAveragePredictor(scn.traffic.K_u, scn.traffic.K_m)
        self.check = check
        self.event_log = event_log
        self.t = 0
        self.last_plan: Optional[ChannelPlan] = None

    def _estimate(self, truth: tuple[int, int]):
        if self.predictor is None:
            return None
        try:
            return self.predictor.predict(self.history, truth)
        except ColdStart:
            pass
        try:
            return self._fallback.predict(self.history)
        except ColdStart:
            m, u = expected_arrivals(self.scn.traffic, self.t)
            return self._fallback.clamp(u, m)

    def _reserve(self, est) -> tuple[int, int]:
        scn = self.scn
        res = scn.reservation
        if res.mode != "slicer":
            self.last_plan = None
            return res.fixed_split(scn.traffic.K_m)
        floor = scn.predictor.min_channels
        k_u = max(est.k_hat_u, floor)
        k_m = max(est.k_hat_m, floor)
        if scn.slicing:
            plan = maxrect_pack(k_u, k_m, scn.grid, scn.urllc, scn.mmtc, scn.urllc_mu, self.t)
        else:
            # no slicing: the whole grid is laid out in generic channels,
            # URLLC takes what it needs first and mMTC gets the rest
            plan = baseline_pack(k_u, scn.grid.area, scn.grid, scn.urllc, scn.mmtc, frame_index=self.t)
        self.last_plan = plan
        return plan.L_u, plan.L_m

    def run_frame(self) -> FrameOutcome:
        scn, rng, t = self.scn, self.rng, self.t
        arr_m = mmtc_arrival_mask(scn.traffic, t, rng)
        arr_u = urllc_arrival_mask(scn.traffic, t, rng)
        k_u = self.urllc.begin_frame(t, arr_u)
        k_m = self.mmtc.begin_frame(t, arr_m)

        est = self._estimate((k_u, k_m))
        L_u, L_m = self._reserve(est)

        coordinated = scn.access == "coordinated"
        out_u = self.urllc.access(t, L_u, scn.acb, scn.acb_applies(ServiceClass.URLLC), coordinated, rng)
        out_m = self.mmtc.access(t, L_m, scn.acb, scn.acb_applies(ServiceClass.MMTC), coordinated, rng)
        nan = float("nan")
        outcome = FrameOutcome(
            t, out_u, out_m,
            est.k_hat_u if est is not None else nan,
            est.k_hat_m if est is not None else nan,
        )
        if self.check:
            for name, o in (("urllc", out_u), ("mmtc", out_m)):
                if not o.conserved():
                    raise ConservationError(f"frame {t} {name}: {o}")
                if o.triplet.channels != o.channels:
                    raise ConservationError(f"frame {t} {name}: triplet {o.triplet} vs L={o.channels}")
        self.history.append(outcome.observation)
        if self.event_log is not None:
            self.event_log.write(event_line(outcome))
        self.t += 1
        return outcome

    def run(self, frames: int) -> list[FrameOutcome]:
        return [self.run_frame() for _ in range(frames)]


def event_line(o: FrameOutcome) -> str:
    u, m = o.urllc, o.mmtc
    return (
        f"t={o.frame_index} L=({u.channels},{m.channels}) "
        f"u={tuple(u.triplet)} m={tuple(m.triplet)} "
        f"p_acb=({u.p_acb:.3g},{m.p_acb:.3g}) served=({u.served},{m.served}) "
        f"dropped=({u.dropped},{m.dropped}) backlog=({u.backlog},{m.backlog})\n"
    )


def realization_seeds(seed: int, realizations: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(realizations)


def run_realization(scn: Scenario, seed_seq, frames: Optional[int] = None,
                    predictor=None, check: bool = True) -> dict[str, np.ndarray]:
    """Run one realization and return its per-frame metric arrays."""
    frames = scn.frames if frames is None else frames
    sim = Simulator(scn, np.random.default_rng(seed_seq), predictor, check)
    K_u, K_m = scn.traffic.K_u, scn.traffic.K_m
    cols = {k: np.empty(frames) for k in SERIES_FIELDS}
    for t in range(frames):
        row = sim.run_frame().row(K_u, K_m)
        for k in SERIES_FIELDS:
            cols[k][t] = row[k]
    return cols


def _run_one(args):
    return run_realization(*args)


def run_simulation(scn: Scenario, frames: Optional[int] = None, realizations: Optional[int] = None,
                   seed: Optional[int] = None, workers: Optional[int] = None,
                   predictor=None) -> MetricsSeries:
    """Independent realizations with seeds spawned from the master seed."""
    frames = scn.frames if frames is None else frames
    realizations = scn.realizations if realizations is None else realizations
    seed = scn.seed if seed is None else seed
    workers = scn.workers if workers is None else workers
    seeds = realization_seeds(seed, realizations)
    jobs = [(scn, s, frames, predictor) for s in seeds]
    if workers > 1 and realizations > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    series = MetricsSeries.stack(runs)
    series.predictor_mse = predictor_errors(series, scn)
    return series


def predictor_errors(series: MetricsSeries, scn: Scenario) -> dict[str, float]:
    out = {}
    for cls, K in (("u", scn.traffic.K_u), ("m", scn.traffic.K_m)):
        a = series[f"sqerr_{cls}"]
        if np.isnan(a).all():
            continue
        norm = float(np.nanmean(a))
        out[f"normalized_{cls}"] = norm
        out[f"absolute_{cls}"] = norm * max(K, 1) ** 2
    return out

"""Channel loading, normalized throughput, and per-frame metric series."""
from __future__ import annotations

import csv
import io
import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

# Per-frame fields recorded for every realization, in CSV order.
FRAME_FIELDS = (
    "L_u", "L_m",
    "backlog_in_u", "backlog_in_m",
    "arrivals_u", "arrivals_m",
    "served_u", "served_m",
    "collided_u", "collided_m",
    "idle_u", "idle_m",
    "msg1_collided_u", "msg1_collided_m",
    "dropped_u", "dropped_m",
    "barred_u", "barred_m",
    "blocked_u", "blocked_m",
    "backlog_u", "backlog_m",
    "k_hat_u", "k_hat_m",
    "p_acb_u", "p_acb_m",
    "cl_u", "cl_m",
    "eta_u", "eta_m", "eta_total",
)


def channel_loading(k_breve: int, L: int) -> float:
    """Active users per available channel; NaN when the class has no channels."""
    if L == 0:
        log.debug("channel loading undefined for L=0 (K=%d)", k_breve)
        return float("nan")
    if L < 0:
        raise ValueError("L must be >= 0")
    return k_breve / L


def normalized_throughput(v_s: int, v_c: int, v_i: int) -> float:
    total = v_s + v_c + v_i
    if total == 0:
        log.debug("normalized throughput over zero channels taken as 0")
        return 0.0
    return v_s / total


@dataclass
class MetricsSeries:
    """Per-frame metric arrays for several realizations.

    ``data[name]`` has shape ``(realizations, frames)``.
    """

    data: dict[str, np.ndarray] = field(default_factory=dict)
    predictor_mse: dict[str, float] = field(default_factory=dict)

    @property
    def realizations(self) -> int:
        return next(iter(self.data.values())).shape[0] if self.data else 0

    @property
    def frames(self) -> int:
        return next(iter(self.data.values())).shape[1] if self.data else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    def mean(self, name: str) -> np.ndarray:
        """Per-frame mean across realizations, NaN entries excluded."""
        a = self.data[name]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN columns stay NaN
            return np.nanmean(a, axis=0) if np.isnan(a).any() else a.mean(axis=0)

    def std(self, name: str) -> np.ndarray:
        a = self.data[name]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanstd(a, axis=0) if np.isnan(a).any() else a.std(axis=0)

    def window_mean(self, name: str, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Mean over frames ``[start, stop)`` for each realization (NaN ignored)."""
        a = self.data[name][:, start:stop]
        out = np.full(a.shape[0], np.nan)
        for r in range(a.shape[0]):
            row = a[r][~np.isnan(a[r])]
            if row.size:
                out[r] = row.mean()
        return out

    def summary(self, start: int = 0) -> dict[str, dict[str, float]]:
        """Mean, std across realizations and min/max of per-realization means."""
        out = {}
        for name in self.data:
            per_run = self.window_mean(name, start)
            per_run = per_run[~np.isnan(per_run)]
            if per_run.size == 0:
                out[name] = {"mean": None, "std": None, "min": None, "max": None}
                continue
            out[name] = {
                "mean": float(per_run.mean()),
                "std": float(per_run.std()),
                "min": float(per_run.min()),
                "max": float(per_run.max()),
            }
        return out

    @classmethod
    def stack(cls, runs: list[dict[str, np.ndarray]]) -> "MetricsSeries":
        return cls({k: np.vstack([r[k] for r in runs]) for k in runs[0]})

    def to_csv(self) -> str:
        """Long format: ``realization,frame,metric,value``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["realization", "frame", "metric", "value"])
        names = list(self.data)
        for r in range(self.realizations):
            for t in range(self.frames):
                for name in names:
                    w.writerow([r, t, name, _fmt(self.data[name][r, t])])
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        """Wide per-frame file: frame, then ``<metric>_mean`` / ``<metric>_std``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.data)
        w.writerow(["frame"] + [f"{n}_{s}" for n in names for s in ("mean", "std")])
        means = {n: self.mean(n) for n in names}
        stds = {n: self.std(n) for n in names}
        for t in range(self.frames):
            w.writerow([t] + [_fmt(v[t]) for n in names for v in (means[n], stds[n])])
        return buf.getvalue()

    def to_json(self, start: int = 0) -> str:
        payload = {
            "realizations": self.realizations,
            "frames": self.frames,
            "window_start": start,
            "metrics": self.summary(start),
            "predictor_mse": self.predictor_mse,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    v = float(v)
    if np.isnan(v):
        return "nan"
    if v.is_integer():
        return str(int(v))
    return repr(round(v, 10))

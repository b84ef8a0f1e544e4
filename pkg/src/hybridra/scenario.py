"""Scenario configuration: a flat ``key = value`` text format, typed build,
and the named presets mirroring the published experiments.

Every scenario is fully described by a mapping of dotted keys to strings.
Defaults, presets, config files and command-line overrides are layered in
that order, then converted and validated in one place so errors can name
the offending key.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from .acb import AcbConfig
from .grid import GridConfig, ServiceClass, ServiceProfile
from .slicer import SlicerWeights
from .traffic import TrafficConfig


class ConfigSyntaxError(ValueError):
    def __init__(self, msg: str, line: int, column: int, source: str = "<config>"):
        super().__init__(f"{source}:{line}:{column}: {msg}")
        self.line, self.column, self.source = line, column, source


class ConfigValueError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


RESERVATION_MODES = ("slicer", "fixed", "variable")
PREDICTORS = ("oracle", "moving-average", "lstm", "none")
ACCESS_MODES = ("uniform", "coordinated")
ACB_CLASSES = ("both", "mmtc", "urllc", "none")

DEFAULTS: dict[str, str] = {
    "name": "custom",
    "traffic.K_m": "1000",
    "traffic.K_u": "25",
    "traffic.urllc_ratio": "0",
    "traffic.p": "0.001",
    "traffic.K_m_p": "10",
    "traffic.T_p": "10",
    "traffic.T_u": "10",
    "traffic.alpha": "3",
    "traffic.beta": "4",
    "grid.F": "50",
    "grid.S": "10",
    "grid.nu": "14",
    "grid.xi": "5",
    "urllc.packet_bytes": "32",
    "urllc.mod_order": "4",
    "urllc.iota": "auto",
    "mmtc.packet_bytes": "200",
    "mmtc.mod_order": "256",
    "mmtc.iota": "16",
    "weights.w_u": "0.9",
    "weights.w_m": "0.05",
    "weights.w_p": "0.05",
    "acb.mode": "optimal",
    "acb.T_acb": "0",
    "acb.W": "10",
    "acb.classes": "both",
    "predictor": "moving-average",
    "predictor.model": "",
    "predictor.window": "20",
    "slicing": "on",
    "slicer.urllc_mu": "2",
    "slicer.min_channels": "1",
    "reservation": "slicer",
    "reservation.table": "1000:4,30000:34",
    "reservation.total": "54",
    "access": "uniform",
    "run.frames": "1000",
    "run.realizations": "10",
    "run.seed": "1",
    "run.window_start": "0",
    "run.workers": "1",
    "out_dir": "results",
}

PRESETS: dict[str, dict[str, str]] = {
    "table1-baseline": {
        "name": "table1-baseline",
        "run.frames": "1200",
    },
    # Channel loading with slicing on; compare against `slicing=off`.
    "fig3-cl": {
        "name": "fig3-cl",
        "predictor": "oracle",
        "slicer.min_channels": "0",
        "access": "coordinated",
        "run.frames": "1200",
    },
    "fig3-cl-noslicing": {
        "name": "fig3-cl-noslicing",
        "predictor": "oracle",
        "slicing": "off",
        "slicer.min_channels": "0",
        "access": "coordinated",
        "run.frames": "1200",
    },
    # ACB study on a fixed 54-channel frame, K_u = K_m / 40.
    "fig4a-fixed": {
        "name": "fig4a-fixed",
        "traffic.K_m": "4000",
        "traffic.urllc_ratio": "40",
        "traffic.p": "0.0075",
        "predictor": "none",
        "reservation": "fixed:8,46",
        "acb.mode": "optimal",
        "run.frames": "1000",
        "run.window_start": "800",
    },
    "fig4b-variable": {
        "name": "fig4b-variable",
        "traffic.K_m": "4000",
        "traffic.urllc_ratio": "40",
        "traffic.p": "0.0075",
        "predictor": "none",
        "reservation": "variable",
        "acb.mode": "optimal",
        "run.frames": "1000",
        "run.window_start": "800",
    },
    # Perfect prediction + slicing + optimal ACB, K_u = K_m / 400.
    "fig5-perfect": {
        "name": "fig5-perfect",
        "traffic.K_m": "10000",
        "traffic.urllc_ratio": "400",
        "traffic.p": "0.0075",
        "predictor": "oracle",
        "slicer.min_channels": "0",
        "access": "coordinated",
        "acb.mode": "optimal",
        "run.frames": "1200",
        "run.realizations": "5",
        "run.window_start": "200",
    },
}


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines skipped."""
    out: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigSyntaxError("expected 'key = value'", n, col, source)
        key, _, value = line.partition("=")
        k = key.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.\-]*", k):
            col = len(key) - len(key.lstrip()) + 1
            raise ConfigSyntaxError(f"invalid key {k!r}", n, col, source)
        if k not in DEFAULTS:
            col = len(key) - len(key.lstrip()) + 1
            raise ConfigSyntaxError(f"unknown key {k!r}", n, col, source)
        out[k] = value.strip()
    return out


def parse_override(item: str) -> tuple[str, str]:
    key, sep, value = item.partition("=")
    key = key.strip()
    if not sep:
        raise ConfigSyntaxError(f"override {item!r} must be key=value", 1, 1, "--set")
    if key not in DEFAULTS:
        raise ConfigSyntaxError(f"unknown key {key!r}", 1, 1, "--set")
    return key, value.strip()


def dump_text(flat: dict[str, str]) -> str:
    return "".join(f"{k} = {flat[k]}\n" for k in DEFAULTS if k in flat)


def resolve(preset: Optional[str] = None, text: Optional[str] = None,
            overrides: Optional[dict[str, str]] = None, source: str = "<config>") -> dict[str, str]:
    flat = dict(DEFAULTS)
    if preset:
        if preset not in PRESETS:
            raise ConfigValueError("preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        flat.update(PRESETS[preset])
    if text is not None:
        flat.update(parse_text(text, source))
    if overrides:
        for k in overrides:
            if k not in DEFAULTS:
                raise ConfigSyntaxError(f"unknown key {k!r}", 1, 1, "--set")
        flat.update(overrides)
    return flat


@dataclass(frozen=True)
class PredictorConfig:
    kind: str = "moving-average"
    model_path: str = ""
    window: int = 20
    min_channels: int = 1


@dataclass(frozen=True)
class ReservationConfig:
    mode: str = "slicer"
    L_u: int = 8
    L_m: int = 46
    table: tuple[tuple[int, int], ...] = ((1000, 4), (30000, 34))
    total: int = 54

    def fixed_split(self, K_m: int) -> tuple[int, int]:
        if self.mode == "fixed":
            return self.L_u, self.L_m
        if self.mode == "variable":
            L_u = variable_urllc_channels(self.table, K_m)
            return L_u, self.total - L_u
        raise ValueError("slicer-driven reservation has no fixed split")


def variable_urllc_channels(table, K_m: int) -> int:
    """Linear interpolation of the (K_m -> L_u) table, rounded; flat outside."""
    pts = sorted(table)
    if K_m <= pts[0][0]:
        return pts[0][1]
    if K_m >= pts[-1][0]:
        return pts[-1][1]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if x0 <= K_m <= x1:
            return int(round(y0 + (y1 - y0) * (K_m - x0) / (x1 - x0)))
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class Scenario:
    name: str = "custom"
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    urllc: ServiceProfile = field(default_factory=lambda: ServiceProfile(32, 4, ServiceClass.URLLC))
    mmtc: ServiceProfile = field(default_factory=lambda: ServiceProfile(200, 256, ServiceClass.MMTC, 16))
    weights: SlicerWeights = field(default_factory=SlicerWeights)
    acb: AcbConfig = field(default_factory=AcbConfig)
    acb_classes: str = "both"
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    slicing: bool = True
    urllc_mu: int = 2
    reservation: ReservationConfig = field(default_factory=ReservationConfig)
    access: str = "uniform"
    frames: int = 1000
    realizations: int = 10
    seed: int = 1
    window_start: int = 0
    workers: int = 1
    out_dir: str = "results"

    def acb_applies(self, service: ServiceClass) -> bool:
        return self.acb_classes == "both" or self.acb_classes == service.value


def _int(v: str) -> int:
    return int(v)


def _num(v: str) -> float:
    return float(v)


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0", "off-baseline"):
        return False
    raise ValueError(f"expected on/off, got {v!r}")


def _iota(v: str) -> Optional[int]:
    return None if v.lower() in ("auto", "") else int(v)


def _table(v: str) -> tuple[tuple[int, int], ...]:
    pts = []
    for item in v.split(","):
        k, _, l = item.partition(":")
        pts.append((int(k), int(l)))
    if not pts:
        raise ValueError("empty table")
    return tuple(pts)


def _field_path(section: str, msg: str) -> str:
    """Narrow a section-level validation error to the key its message names."""
    names = sorted((k.split(".", 1)[1] for k in DEFAULTS if k.startswith(section + ".")),
                   key=len, reverse=True)
    for name in names:
        if re.search(rf"(?<![\w.]){re.escape(name)}(?![\w])", msg):
            return f"{section}.{name}"
    return section


def build(flat: dict[str, str]) -> Scenario:
    """Convert a resolved flat mapping into a validated Scenario.

    Raises ConfigValueError naming the first offending key.
    """

    def get(key: str, conv: Callable[[str], object]):
        try:
            return conv(flat[key])
        except (ValueError, TypeError) as e:
            raise ConfigValueError(key, str(e)) from None

    def make(path: str, fn: Callable[[], object]):
        try:
            return fn()
        except ValueError as e:
            raise ConfigValueError(_field_path(path, str(e)), str(e)) from None

    K_m = get("traffic.K_m", _int)
    ratio = get("traffic.urllc_ratio", _num)
    if ratio < 0:
        raise ConfigValueError("traffic.urllc_ratio", "must be >= 0")
    K_u = int(round(K_m / ratio)) if ratio > 0 else get("traffic.K_u", _int)
    traffic = make("traffic", lambda: TrafficConfig(
        K_m=K_m, K_u=K_u, p=get("traffic.p", _num), K_m_p=get("traffic.K_m_p", _int),
        T_p=get("traffic.T_p", _int), alpha=get("traffic.alpha", _num),
        beta=get("traffic.beta", _num), T_u=get("traffic.T_u", _int),
    ))
    grid = make("grid", lambda: GridConfig(
        get("grid.F", _int), get("grid.S", _int), get("grid.nu", _int), get("grid.xi", _int)))
    urllc = make("urllc", lambda: ServiceProfile(
        get("urllc.packet_bytes", _int), get("urllc.mod_order", _int), ServiceClass.URLLC,
        get("urllc.iota", _iota)))
    mmtc = make("mmtc", lambda: ServiceProfile(
        get("mmtc.packet_bytes", _int), get("mmtc.mod_order", _int), ServiceClass.MMTC,
        get("mmtc.iota", _iota)))
    weights = make("weights", lambda: SlicerWeights(
        get("weights.w_u", _num), get("weights.w_m", _num), get("weights.w_p", _num)))
    acb = make("acb.mode", lambda: AcbConfig.parse_mode(
        flat["acb.mode"], T_acb=get("acb.T_acb", _int), W=get("acb.W", _int)))
    acb_classes = flat["acb.classes"]
    if acb_classes not in ACB_CLASSES:
        raise ConfigValueError("acb.classes", f"must be one of {ACB_CLASSES}")

    kind, _, model_path = flat["predictor"].partition(":")
    if kind not in PREDICTORS:
        raise ConfigValueError("predictor", f"must be one of {PREDICTORS}")
    model_path = model_path or flat["predictor.model"]
    if kind == "lstm" and not model_path:
        raise ConfigValueError("predictor.model", "lstm predictor needs a model file")
    predictor = PredictorConfig(kind, model_path, get("predictor.window", _int),
                                get("slicer.min_channels", _int))
    if predictor.window < 1:
        raise ConfigValueError("predictor.window", "must be >= 1")
    if predictor.min_channels < 0:
        raise ConfigValueError("slicer.min_channels", "must be >= 0")

    urllc_mu = get("slicer.urllc_mu", _int)
    if not 0 <= urllc_mu <= 2:
        raise ConfigValueError("slicer.urllc_mu", "must be 0, 1 or 2")

    rmode, _, rarg = flat["reservation"].partition(":")
    if rmode not in RESERVATION_MODES:
        raise ConfigValueError("reservation", f"must be one of {RESERVATION_MODES}")
    table = get("reservation.table", _table)
    total = get("reservation.total", _int)
    L_u, L_m = 0, 0
    if rmode == "fixed":
        try:
            L_u, L_m = (int(x) for x in rarg.split(","))
        except ValueError:
            raise ConfigValueError("reservation", "fixed reservation is 'fixed:<L_u>,<L_m>'") from None
        if L_u < 0 or L_m < 0:
            raise ConfigValueError("reservation", "channel counts must be >= 0")
    reservation = ReservationConfig(rmode, L_u, L_m, table, total)
    if rmode == "variable":
        lu = variable_urllc_channels(table, K_m)
        if not 0 <= lu <= total:
            raise ConfigValueError("reservation.table", f"L_u={lu} outside [0, {total}]")
    if rmode == "slicer" and kind == "none":
        raise ConfigValueError("predictor", "slicer-driven reservation needs a predictor")

    access = flat["access"]
    if access not in ACCESS_MODES:
        raise ConfigValueError("access", f"must be one of {ACCESS_MODES}")
    if access == "coordinated" and kind != "oracle":
        raise ConfigValueError("access", "coordinated access needs the oracle predictor")

    frames = get("run.frames", _int)
    realizations = get("run.realizations", _int)
    if frames < 1:
        raise ConfigValueError("run.frames", "must be >= 1")
    if realizations < 1:
        raise ConfigValueError("run.realizations", "must be >= 1")
    window_start = get("run.window_start", _int)
    if not 0 <= window_start < frames:
        raise ConfigValueError("run.window_start", f"must lie in [0, {frames})")
    workers = get("run.workers", _int)
    if workers < 1:
        raise ConfigValueError("run.workers", "must be >= 1")

    return Scenario(
        name=flat["name"], traffic=traffic, grid=grid, urllc=urllc, mmtc=mmtc,
        weights=weights, acb=acb, acb_classes=acb_classes, predictor=predictor,
        slicing=get("slicing", _bool), urllc_mu=urllc_mu, reservation=reservation,
        access=access, frames=frames, realizations=realizations, seed=get("run.seed", _int),
        window_start=window_start, workers=workers, out_dir=flat["out_dir"],
    )


def load(preset: Optional[str] = None, path: Optional[str] = None,
         overrides: Optional[dict[str, str]] = None) -> tuple[Scenario, dict[str, str]]:
    text = None
    if path is not None:
        with open(path) as fh:
            text = fh.read()
    flat = resolve(preset, text, overrides, source=str(path) if path else "<config>")
    return build(flat), flat


def scenario_from(preset: Optional[str] = None, **overrides) -> Scenario:
    """Convenience for scripts: ``scenario_from("fig4a-fixed", **{"traffic.K_m": 8000})``."""
    flat = resolve(preset, overrides={k: str(v) for k, v in overrides.items()})
    return build(flat)

"""Command-line entry point: ``hybridra {run,sweep,train-predictor,validate}``.

Exit codes: 0 ok, 2 config parse error, 3 invalid value, 4 I/O error,
5 training diverged.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import platform
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .predictor import TrainingDiverged
from .protocol import run_simulation
from .scenario import (
    PRESETS,
    ConfigSyntaxError,
    ConfigValueError,
    build,
    dump_text,
    parse_override,
    resolve,
)

log = logging.getLogger("hybridra")

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_IO, EXIT_DIVERGED = 0, 2, 3, 4, 5

SUMMARY_METRICS = ("eta_u", "eta_m", "eta_total", "served_u", "served_m",
                   "cl_u", "cl_m", "dropped_u", "dropped_m", "backlog_u", "backlog_m")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", nargs="?", help="scenario file (key = value lines)")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a built-in preset")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a scenario key (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--realizations", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--workers", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write metrics")
    _common(p)
    p.add_argument("--event-log", action="store_true", help="also write a per-frame event log")

    p = sub.add_parser("sweep", help="run a scenario over values of one key")
    _common(p)
    p.add_argument("--axis", required=True, help="scenario key to vary, e.g. traffic.K_m")
    p.add_argument("--values", required=True, help="comma-separated values")

    p = sub.add_parser("train-predictor", help="train the LSTM backlog predictor")
    _common(p)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--lr", type=float, default=5e-3)
    p.add_argument("--out", help="model file (default: predictor.model or <out-dir>/lstm.json)")

    p = sub.add_parser("validate", help="check a scenario without running it")
    _common(p)
    p.add_argument("--dump", action="store_true", help="print the resolved scenario")
    return parser


def _flat(args) -> dict[str, str]:
    overrides = dict(parse_override(s) for s in args.overrides)
    for flag, key in (("seed", "run.seed"), ("frames", "run.frames"),
                      ("realizations", "run.realizations"), ("out_dir", "out_dir"),
                      ("workers", "run.workers")):
        v = getattr(args, flag)
        if v is not None:
            overrides[key] = str(v)
    text = None
    source = "<config>"
    if args.scenario:
        source = args.scenario
        text = Path(args.scenario).read_text()
    return resolve(args.preset, text, overrides, source)


def manifest_text(flat: dict[str, str], extra: Optional[dict[str, str]] = None) -> str:
    lines = [
        "# hybridra run manifest",
        f"# hybridra {__version__}, numpy {np.__version__}, python {platform.python_version()}",
        dump_text(flat).rstrip("\n"),
    ]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {v}")
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def run_once(flat: dict[str, str], out: Path, event_log: bool = False) -> dict:
    scn = build(flat)
    series = run_simulation(scn)
    _write(out / "frames.csv", series.to_csv())
    _write(out / "aggregate.csv", series.aggregate_csv())
    _write(out / "summary.json", series.to_json(scn.window_start))
    _write(out / "manifest.txt", manifest_text(flat))
    if event_log:
        from .protocol import Simulator, realization_seeds

        buf = io.StringIO()
        sim = Simulator(scn, np.random.default_rng(realization_seeds(scn.seed, 1)[0]), event_log=buf)
        sim.run(scn.frames)
        _write(out / "events.log", buf.getvalue())
    return series.summary(scn.window_start)


def cmd_run(args) -> int:
    flat = _flat(args)
    scn = build(flat)
    out = Path(scn.out_dir) / scn.name
    summary = run_once(flat, out, args.event_log)
    for k in SUMMARY_METRICS:
        v = summary[k]["mean"]
        print(f"{k:>12s} {'n/a' if v is None else f'{v:.4f}'}")
    print(f"results in {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _flat(args)
    if args.axis not in base:
        raise ConfigValueError(args.axis, "unknown sweep axis")
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigValueError("--values", "no values given")
    scn = build(base)
    root = Path(scn.out_dir) / scn.name
    rows = []
    for v in values:
        flat = dict(base, **{args.axis: v})
        build(flat)
        summary = run_once(flat, root / f"{args.axis}={v}")
        rows.append([v] + [summary[k]["mean"] for k in SUMMARY_METRICS])
        print(f"{args.axis}={v}: eta_u={_f(summary['eta_u']['mean'])} "
              f"eta_m={_f(summary['eta_m']['mean'])} served_m={_f(summary['served_m']['mean'])}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([args.axis] + list(SUMMARY_METRICS))
    for r in rows:
        w.writerow([r[0]] + ["" if x is None else repr(round(x, 10)) for x in r[1:]])
    _write(root / "sweep.csv", buf.getvalue())
    _write(root / "manifest.txt", manifest_text(base, {"sweep": f"{args.axis} over {values}"}))
    print(f"results in {root}")
    return EXIT_OK


def _f(x) -> str:
    return "n/a" if x is None else f"{x:.4f}"


def cmd_train(args) -> int:
    from .training import build_dataset, lstm_mse, moving_average_mse, train_predictor

    flat = _flat(args)
    kind = flat["predictor"].partition(":")[0]
    if kind in ("oracle", "none"):
        raise ConfigValueError("predictor", f"'{kind}' predictor has nothing to train")
    # the model does not exist yet; build the scenario without requiring it
    scn = build(dict(flat, predictor="moving-average"))
    out = Path(args.out or flat["predictor"].partition(":")[2] or flat["predictor.model"]
               or Path(scn.out_dir) / "lstm.json")
    curve: list[tuple[int, float]] = []

    def on_epoch(epoch, loss):
        curve.append((epoch, loss))
        log.info("epoch %d loss %.6g", epoch, loss)

    pt = train_predictor(scn, args.epochs, args.samples, scn.seed, args.hidden, args.layers,
                         args.lr, on_epoch=on_epoch)
    out.parent.mkdir(parents=True, exist_ok=True)
    pt.model.save(out)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "loss"])
    w.writerow([0, repr(pt.result.loss_history[0])])
    for e, l in curve:
        w.writerow([e, repr(l)])
    _write(out.with_suffix(".curve.csv"), buf.getvalue())
    held_out = build_dataset(scn, max(200, args.samples // 4), scn.seed + 1)
    m = lstm_mse(pt.model, held_out)
    ma = moving_average_mse(held_out, scn.predictor.window)
    print(f"loss {pt.result.loss_history[0]:.4g} -> {min(pt.result.loss_history):.4g} "
          f"(best epoch {pt.result.best_epoch})")
    print(f"held-out normalized MSE  lstm u={m[0]:.3g} m={m[1]:.3g}  "
          f"moving-average u={ma[0]:.3g} m={ma[1]:.3g}")
    print(f"model written to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    flat = _flat(args)
    build(flat)
    if args.dump:
        sys.stdout.write(dump_text(flat))
    else:
        print("ok")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "train-predictor": cmd_train, "validate": cmd_validate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigSyntaxError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValueError as e:
        print(f"error: invalid value: {e}", file=sys.stderr)
        return EXIT_INVALID
    except TrainingDiverged as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

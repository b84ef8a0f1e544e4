import csv
import json
import subprocess
import sys

import pytest

from hybridra import cli
from hybridra.predictor import TrainingDiverged


def run(*argv):
    return cli.main([str(a) for a in argv])


def final_eta(path):
    doc = json.loads((path / "summary.json").read_text())
    return doc["metrics"]["eta_total"]["mean"]


def test_run_writes_results(tmp_path, capsys):
    assert run("run", "--preset", "table1-baseline", "--frames", 50, "--realizations", 2,
               "--out-dir", tmp_path) == 0
    out = tmp_path / "table1-baseline"
    for f in ("frames.csv", "aggregate.csv", "summary.json", "manifest.txt"):
        assert (out / f).is_file()
    manifest = (out / "manifest.txt").read_text()
    for line in ("traffic.K_u = 25", "traffic.K_m = 1000", "grid.F = 50", "grid.S = 10",
                 "run.seed = 1"):
        assert line in manifest
    rows = list(csv.reader((out / "frames.csv").open()))
    assert rows[0] == ["realization", "frame", "metric", "value"]
    assert "eta_total" in capsys.readouterr().out


def test_same_seed_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("run", "--preset", "table1-baseline", "--frames", 80, "--seed", 9,
                   "--out-dir", tmp_path / d) == 0
    # manifests differ only by out_dir
    for f in ("frames.csv", "aggregate.csv", "summary.json"):
        assert (tmp_path / "a/table1-baseline" / f).read_bytes() == \
               (tmp_path / "b/table1-baseline" / f).read_bytes()


def test_scenario_file_and_override(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("name = mine\ntraffic.K_m = 300\nrun.frames = 30\n")
    assert run("run", cfg, "--set", "traffic.p=0.01", "--out-dir", tmp_path) == 0
    manifest = (tmp_path / "mine/manifest.txt").read_text()
    assert "traffic.K_m = 300" in manifest and "traffic.p = 0.01" in manifest


def test_grant_free_overload_collapses(tmp_path):
    assert run("run", "--preset", "fig4a-fixed", "--set", "acb.mode=fixed:1.0",
               "--realizations", 2, "--out-dir", tmp_path) == 0
    assert final_eta(tmp_path / "fig4a-fixed") < 0.05


def test_sweep_acb_ordering(tmp_path):
    table = {}
    for mode in ("fixed:1.0", "optimal"):
        d = tmp_path / mode.replace(":", "_")
        assert run("sweep", "--preset", "fig4a-fixed", "--set", f"acb.mode={mode}",
                   "--axis", "traffic.K_m", "--values", "1000,2000,4000",
                   "--realizations", 2, "--out-dir", d) == 0
        rows = list(csv.DictReader((d / "fig4a-fixed/sweep.csv").open()))
        assert [r["traffic.K_m"] for r in rows] == ["1000", "2000", "4000"]
        assert (d / "fig4a-fixed/traffic.K_m=2000/frames.csv").is_file()
        table[mode] = {r["traffic.K_m"]: float(r["eta_total"]) for r in rows}
    assert table["optimal"]["4000"] >= table["fixed:1.0"]["4000"]


def test_single_point_sweep_matches_run(tmp_path):
    args = ("--preset", "table1-baseline", "--frames", 40)
    assert run("run", *args, "--set", "traffic.K_m=800", "--out-dir", tmp_path / "r") == 0
    assert run("sweep", *args, "--axis", "traffic.K_m", "--values", "800",
               "--out-dir", tmp_path / "s") == 0
    a = (tmp_path / "r/table1-baseline/frames.csv").read_bytes()
    b = (tmp_path / "s/table1-baseline/traffic.K_m=800/frames.csv").read_bytes()
    assert a == b


def test_parse_error_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("traffic.K_m = 3\nnot a pair\n")
    assert run("validate", cfg) == 2
    assert "bad.cfg:2:1" in capsys.readouterr().err
    assert run("validate", "--set", "no.such.key=1") == 2


def test_invalid_value_exit_3(capsys):
    assert run("validate", "--set", "traffic.p=3") == 3
    assert "traffic.p" in capsys.readouterr().err


def test_io_error_exit_4(tmp_path):
    assert run("validate", tmp_path / "missing.cfg") == 4
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("run", "--preset", "table1-baseline", "--frames", 5, "--out-dir", blocker) == 4


def test_validate_dump(capsys):
    assert run("validate", "--preset", "fig5-perfect", "--dump") == 0
    assert "traffic.urllc_ratio = 400" in capsys.readouterr().out


def test_train_predictor_smoke(tmp_path):
    model = tmp_path / "m/lstm.json"
    assert run("train-predictor", "--preset", "table1-baseline", "--epochs", 1,
               "--samples", 10, "--hidden", 3, "--out", model) == 0
    assert json.loads(model.read_text())["format"] == "hybridra-lstm"
    curve = list(csv.reader(model.with_suffix(".curve.csv").open()))
    assert curve[0] == ["epoch", "loss"] and len(curve) == 3
    # the trained model is usable by the simulator
    assert run("run", "--preset", "table1-baseline", "--frames", 30,
               "--set", f"predictor=lstm:{model}", "--out-dir", tmp_path) == 0


def test_train_predictor_rejects_oracle(capsys):
    assert run("train-predictor", "--preset", "fig3-cl", "--epochs", 1, "--samples", 5) == 3
    assert "nothing to train" in capsys.readouterr().err


def test_divergence_exit_5(monkeypatch, tmp_path, capsys):
    import hybridra.training as training

    def boom(*a, **kw):
        raise TrainingDiverged(7, float("nan"))

    monkeypatch.setattr(training, "train_predictor", boom)
    assert run("train-predictor", "--out", tmp_path / "x.json") == 5
    assert "epoch 7" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hybridra", "validate"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "ok"

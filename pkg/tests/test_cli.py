import csv
import json
from pathlib import Path

import pytest

from greenmpc.cli import build_parser, main
from greenmpc.recipe import LightingRecipe, write_recipe_csv

SMALL = """seed: 7
synthetic: {days: 14, train_days: 40}
plots: {sample_days: ["01-10"], profile_weeks: ["01-01"]}
forecaster: {price_layers: 1, solar_layers: 1, model_dim: 16, feedforward_dim: 32, max_epochs: 3}
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text(SMALL)
    return p


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parser_defaults():
    args = build_parser().parse_args(["optimize", "--mode", "persistence", "--seed", "3"])
    assert args.command == "optimize" and args.mode == "persistence" and args.seed == 3
    assert args.config is None and args.out is None


def test_simulate_baseline(cfg, tmp_path):
    out = tmp_path / "a"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    man = json.loads((out / "manifest_simulate.json").read_text())
    assert man["metrics"]["recipe"] == "baseline"
    assert man["metrics"]["recipe_dli"] == pytest.approx(15.0336, rel=1e-12)
    names = {f["path"] for f in man["files"]}
    assert names == {"energy.csv", "costs.csv"}
    assert len(rows(out / "energy.csv")) == 14 * 24


def test_simulate_is_byte_identical(cfg, tmp_path):
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    for f in ("energy.csv", "costs.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_simulate_with_recipe_file(tmp_path):
    r = LightingRecipe.constant(240.0, [6 <= h < 21 for h in range(24)])
    write_recipe_csv(r, tmp_path / "r.csv")
    p = tmp_path / "c.yaml"
    p.write_text("synthetic: {days: 2}\npaths: {recipe_csv: r.csv}\n")
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    man = json.loads((tmp_path / "o" / "manifest_simulate.json").read_text())
    assert man["metrics"]["recipe_dli"] == pytest.approx(12.96)


def test_config_errors(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.yaml")]) == 2
    p = tmp_path / "c.yaml"
    p.write_text("paths: {market_csv: gone.csv}\n")
    assert main(["simulate", "--config", str(p)]) == 2
    assert "market_csv" in capsys.readouterr().err
    p.write_text("colour: blue\n")
    assert main(["simulate", "--config", str(p)]) == 2


def test_data_error(tmp_path):
    (tmp_path / "m.csv").write_text("bad,header\n")
    p = tmp_path / "c.yaml"
    p.write_text("synthetic: {days: 1}\npaths: {market_csv: m.csv}\n")
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 3


def test_report_without_inputs_is_data_error(cfg, tmp_path):
    assert main(["report", "--config", str(cfg), "--out", str(tmp_path / "empty")]) == 3


def test_optimize_oracle_and_report(cfg, tmp_path):
    out = tmp_path / "opt"
    assert main(["optimize", "--config", str(cfg), "--out", str(out)]) == 0
    report = rows(out / "report.csv")
    assert report[-1]["month"] == "Annual"
    for r in report:
        assert float(r["energy_cost_optimized"]) <= float(r["energy_cost_baseline"])
        assert float(r["energy_kwh_optimized"]) <= float(r["energy_kwh_baseline"])
        base, opt = float(r["total_cost_baseline"]), float(r["total_cost_optimized"])
        assert float(r["cost_reduction_pct"]) == pytest.approx((base - opt) / base * 100, abs=0.01)
    recipes = sorted((out / "recipes").glob("*.csv"))
    assert len(recipes) == 14
    man = json.loads((out / "manifest_optimize.json").read_text())
    listed = {f["path"] for f in man["files"]}
    assert "report.json" in listed and any(p.endswith(".svg") for p in listed)
    svg = next(out.glob("plots/*.svg")).read_text()
    assert "<!-- data" in svg

    # the report command reproduces the optimize report from the energy files
    assert main(["report", "--config", str(cfg), "--out", str(out)]) == 0
    assert rows(out / "report.csv") == report


def test_optimize_reruns_identically(cfg, tmp_path):
    for d in ("a", "b"):
        assert main(["optimize", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    ma = json.loads((tmp_path / "a" / "manifest_optimize.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest_optimize.json").read_text())
    assert ma["files"] == mb["files"]
    assert ma["config_sha256"] == mb["config_sha256"]


def test_oracle_not_worse_than_persistence(cfg, tmp_path):
    totals = {}
    for mode in ("oracle", "persistence"):
        out = tmp_path / mode
        assert main(["optimize", "--config", str(cfg), "--mode", mode, "--out", str(out)]) == 0
        totals[mode] = float(rows(out / "report.csv")[-1]["total_cost_optimized"])
    assert totals["oracle"] <= totals["persistence"] * 1.005


def test_train_forecast_and_transformer_optimize(cfg, tmp_path):
    out = tmp_path / "t"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    ckpt = Path(cfg.parent / "checkpoints")
    assert (ckpt / "price.ckpt").is_file() and (ckpt / "solar.ckpt").is_file()
    metrics = rows(out / "metrics_price.csv")
    assert list(metrics[0]) == ["epoch", "train_mse", "val_rmse", "val_mae"]
    assert main(["forecast", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(rows(out / "forecast.csv")) == 14 * 24
    assert main(["optimize", "--config", str(cfg), "--mode", "transformer",
                 "--out", str(out)]) == 0
    assert (out / "report.csv").is_file()


def test_train_rerun_identical_metrics(cfg, tmp_path):
    for d in ("a", "b"):
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "metrics_solar.csv").read_bytes()
    assert a == (tmp_path / "b" / "metrics_solar.csv").read_bytes()

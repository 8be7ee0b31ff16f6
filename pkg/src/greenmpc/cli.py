"""Command-line entry point: ``greenmpc {simulate,optimize,train,forecast,report}``."""
import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import MODES, ConfigError, load_config
from .forecast import (CheckpointError, DivergenceError, RollingForecasts,
                       TrainConfig, fit_forecaster, load_checkpoint, price_feature_table,
                       rolling_forecasts, save_checkpoint, solar_feature_table)
from .mpc import MpcError
from .pipeline import OracleForecast, PersistenceForecast, RollingForecast, optimize_year
from .plots import plot_day_forecast, plot_energy_profile, plot_recipes
from .recipe import baseline_recipe, dli, read_recipe_csv, validate, write_recipe_csv
from .simulator import (SimulationError, read_weather_csv, simulate, solar_ppfd,
                        write_energy_csv)
from .synthetic import market_year, weather_year
from .tariff import (PriceSeries, TariffError, annual_report, ingest_market_csv, monthly_costs)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_SOLVER = 0, 2, 3, 4
COST_COLUMNS = ("month", "energy_kwh", "peak_kw", "energy_cost", "icra_cost", "peak_charge",
                "total")

log = logging.getLogger("greenmpc")


class DataError(Exception):
    pass


class Run:
    """Output directory bookkeeping: every written file goes into the manifest."""

    def __init__(self, cfg, command, out):
        self.cfg = cfg
        self.command = command
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.metrics = {}
        self.started = datetime.now(timezone.utc).isoformat(timespec="seconds")

    def path(self, name):
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(p)
        return p

    def manifest(self):
        entries = []
        for p in sorted(set(self.files)):
            if p.is_file():
                entries.append({"path": str(p.relative_to(self.out)),
                                "sha256": hashlib.sha256(p.read_bytes()).hexdigest()})
        doc = {
            "command": self.command, "code_version": __version__,
            "config_sha256": self.cfg.digest(), "seed": self.cfg.seed, "mode": self.cfg.mode,
            "started_at": self.started,
            "finished_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "metrics": self.metrics, "files": entries,
        }
        (self.out / f"manifest_{self.command}.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n")


def _weather(cfg, train=False):
    p = cfg.paths.train_weather_csv if train else cfg.paths.weather_csv
    if p is not None:
        return read_weather_csv(cfg.resolve(p))
    s = cfg.synthetic
    return weather_year(s.train_year if train else s.year, seed=cfg.seed + (1 if train else 0),
                        days=s.train_days if train else s.days)


def _market(cfg, weather, train=False):
    p = cfg.paths.train_market_csv if train else cfg.paths.market_csv
    if p is not None:
        return ingest_market_csv(cfg.resolve(p))
    s = cfg.synthetic
    m = market_year(s.train_year if train else s.year, seed=cfg.seed + (1 if train else 0),
                    days=s.train_days if train else s.days, weather=weather)
    return PriceSeries.from_market(m)


def _write_costs(path, costs):
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(COST_COLUMNS)
        for c in costs:
            wr.writerow([c.month, repr(c.energy_kwh), repr(c.peak_kw), repr(c.energy_cost),
                         repr(c.icra_cost), repr(c.peak_charge), repr(c.total)])


def _whole_days(weather):
    n = len(weather) // 24
    if n == 0:
        raise DataError("weather covers less than one day")
    return n


def command_simulate(cfg, run):
    weather = _weather(cfg)
    days = _whole_days(weather)
    if cfg.paths.recipe_csv is not None:
        recipe = read_recipe_csv(cfg.resolve(cfg.paths.recipe_csv))
        run.metrics["recipe"] = str(cfg.paths.recipe_csv)
    else:
        recipe = baseline_recipe()
        run.metrics["recipe"] = "baseline"
    run.metrics["recipe_dli"] = dli(recipe)
    sim = simulate(weather, recipe, cfg.greenhouse, hours=24 * days)
    write_energy_csv(sim, run.path("energy.csv"))
    market = _market(cfg, weather)
    costs = monthly_costs(sim.timestamps, sim.total_kwh, market, cfg.tariff)
    _write_costs(run.path("costs.csv"), costs)
    run.metrics.update(total_kwh=float(np.sum(sim.total_kwh)),
                       total_cost=float(sum(c.total for c in costs)),
                       shortfall_hours=int(sim.shortfall.sum()))


def _rolling_solar_ppfd(rf, greenhouse):
    k = float(solar_ppfd(1.0, greenhouse))
    return RollingForecasts(rf.pred * k, rf.fallback * k, rf.decay)


def _load_models(cfg):
    ck = cfg.resolve(cfg.paths.checkpoints)
    paths = {name: ck / f"{name}.ckpt" for name in ("price", "solar")}
    for name, p in paths.items():
        if not p.is_file():
            raise DataError(f"{p}: {name} checkpoint missing; run `greenmpc train` first")
    return {name: load_checkpoint(p) for name, p in paths.items()}


def _transformer_sets(cfg, weather, market):
    models = _load_models(cfg)
    fc = cfg.forecaster
    ptab = price_feature_table(market, weather, clean=False)
    stab = solar_feature_table(weather)
    pm, pn, _ = models["price"]
    sm, sn, _ = models["solar"]
    prs = rolling_forecasts(pm, pn, ptab, fc.decay)
    srs = rolling_forecasts(sm, sn, stab, fc.decay)
    return prs, srs


def _forecaster(cfg, weather, market, n):
    price = market.price[:n]
    solar = solar_ppfd(weather.ghi[:n], cfg.greenhouse)
    if cfg.mode == "oracle":
        return OracleForecast(price, solar)
    if cfg.mode == "persistence":
        return PersistenceForecast(price, solar)
    prs, srs = _transformer_sets(cfg, weather, market)
    return RollingForecast(prs, _rolling_solar_ppfd(srs, cfg.greenhouse))


def _pick_day(weather, mmdd, days):
    for d in range(days):
        if weather.timestamps[24 * d].strftime("%m-%d") == mmdd:
            return d
    return None


def command_optimize(cfg, run):
    weather = _weather(cfg)
    days = _whole_days(weather)
    market = _market(cfg, weather)
    n = 24 * days
    fc = _forecaster(cfg, weather, market, n)

    def progress(d, total, res):
        if (d + 1) % 30 == 0 or d + 1 == total:
            log.info("optimized %d/%d days", d + 1, total)

    yr = optimize_year(weather, market, cfg.greenhouse, cfg.tariff, cfg.bounds, cfg.weights,
                       forecaster=fc, days=days, progress=progress)
    write_energy_csv(yr.baseline, run.path("energy_baseline.csv"))
    write_energy_csv(yr.optimized, run.path("energy_optimized.csv"))
    yr.report.write_csv(run.path("report.csv"))
    yr.report.write_json(run.path("report.json"))
    check_bounds = replace(cfg.bounds, enforce_max_intervals=False)
    invalid = []
    with run.path("mpc_days.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(("date", "objective", "dli", "peak_ra", "nodes", "repairs", "dli_deficit"))
        for d, res in enumerate(yr.days):
            date = weather.timestamps[24 * d].date().isoformat()
            write_recipe_csv(res.recipe, run.path(f"recipes/{date}.csv"))
            if validate(res.recipe, check_bounds):
                invalid.append(date)
            wr.writerow((date, repr(res.objective), repr(dli(res.recipe)),
                         repr(res.final.peak_ra), sum(s.nodes for s in res.steps),
                         len(res.repairs), repr(res.dli_deficit)))
    _optimize_plots(cfg, run, weather, market, yr, days)
    a = yr.report.annual
    run.metrics.update(days=days, energy_reduction_pct=a["energy_reduction_pct"],
                       cost_reduction_pct=a["cost_reduction_pct"],
                       peak_reduction_pct=a["peak_reduction_pct"],
                       repaired_days=yr.repairs, invalid_recipes=invalid)


def _optimize_plots(cfg, run, weather, market, yr, days):
    hours = np.arange(24)
    solar = solar_ppfd(weather.ghi[:24 * days], cfg.greenhouse)
    base = baseline_recipe().artificial
    for mmdd in cfg.plots.sample_days:
        d = _pick_day(weather, mmdd, days)
        if d is None:
            continue
        sl = slice(24 * d, 24 * d + 24)
        tag = weather.timestamps[24 * d].date().isoformat()
        plot_day_forecast(run.path(f"plots/price_{tag}.svg"), hours, market.price[sl],
                          yr.forecast_price[sl], "price ($/kWh)", f"Price {tag}")
        plot_day_forecast(run.path(f"plots/solar_{tag}.svg"), hours, solar[sl],
                          yr.forecast_solar[sl], "solar PPFD", f"Solar {tag}")
        plot_recipes(run.path(f"plots/recipe_{tag}.svg"), hours, solar[sl],
                     yr.recipes[d].artificial, base, f"Lighting {tag}")
    for mmdd in cfg.plots.profile_weeks:
        d = _pick_day(weather, mmdd, days)
        if d is None:
            continue
        end = min(days, d + 14)
        sl = slice(24 * d, 24 * end)
        tag = weather.timestamps[24 * d].date().isoformat()
        plot_energy_profile(run.path(f"plots/energy_{tag}.svg"), np.arange(sl.stop - sl.start),
                            yr.baseline.total_kwh[sl], yr.optimized.total_kwh[sl],
                            f"Facility energy from {tag}")


def _model_cfg(fc, layers, dropout=None):
    return dict(layers=layers, heads=fc.heads, model_dim=fc.model_dim,
                feedforward_dim=fc.feedforward_dim,
                dropout=fc.dropout if dropout is None else dropout)


def command_train(cfg, run):
    fc = cfg.forecaster
    weather = _weather(cfg, train=True)
    market = _market(cfg, weather, train=True)
    tables = {
        "price": (price_feature_table(market, weather, q_low=fc.q_low, q_high=fc.q_high,
                                      k=fc.fence_k), fc.price_layers),
        "solar": (solar_feature_table(weather), fc.solar_layers),
    }
    tcfg = TrainConfig(lr=fc.lr, weight_decay=fc.weight_decay, batch_size=fc.batch_size,
                       max_epochs=fc.max_epochs, patience=fc.patience, seed=cfg.seed)
    ck = cfg.resolve(cfg.paths.checkpoints)
    ck.mkdir(parents=True, exist_ok=True)
    for name, (table, layers) in tables.items():
        rep = fit_forecaster(table, seed=cfg.seed, train_cfg=tcfg,
                             **_model_cfg(fc, layers))
        p = ck / f"{name}.ckpt"
        save_checkpoint(p, rep.model, rep.normalizer,
                        {"target": table.target, "best_epoch": rep.result.best_epoch})
        if p.resolve().is_relative_to(run.out.resolve()):
            run.files.append(p)
        rep.result.write_metrics_csv(run.path(f"metrics_{name}.csv"))
        run.metrics[name] = {"test_rmse": rep.test_rmse, "test_mae": rep.test_mae,
                             "persistence_rmse": rep.persistence_rmse,
                             "best_epoch": rep.result.best_epoch,
                             "removed_outliers": int(table.removed.sum()),
                             "checkpoint": str(p),
                             "checkpoint_sha256": hashlib.sha256(p.read_bytes()).hexdigest()}


def command_forecast(cfg, run):
    weather = _weather(cfg)
    days = _whole_days(weather)
    market = _market(cfg, weather)
    prs, srs = _transformer_sets(cfg, weather, market)
    n = 24 * days
    pf = np.concatenate([prs.combined_tail(24 * d, 24 * d + 24) for d in range(days)])
    sf = np.clip(np.concatenate([srs.combined_tail(24 * d, 24 * d + 24) for d in range(days)]),
                 0.0, None)
    with run.path("forecast.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(("timestamp", "price_actual", "price_forecast", "ghi_actual", "ghi_forecast"))
        for i in range(n):
            wr.writerow((weather.timestamps[i].isoformat(), repr(float(market.price[i])),
                         repr(float(pf[i])), repr(float(weather.ghi[i])), repr(float(sf[i]))))

    def rmse(a, b):
        return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))
    price = market.price[:n]
    ghi = weather.ghi[:n]
    run.metrics.update(
        price_rmse=rmse(pf, price), solar_rmse=rmse(sf, ghi),
        price_persistence_rmse=rmse(prs.fallback[24:n], price[24:]) if n > 24 else None,
        solar_persistence_rmse=rmse(srs.fallback[24:n], ghi[24:]) if n > 24 else None)


def _read_energy(path):
    if not path.is_file():
        raise DataError(f"{path}: energy CSV not found; run `greenmpc optimize` first")
    ts, total = [], []
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            ts.append(datetime.fromisoformat(row["timestamp"]))
            total.append(float(row["total_kwh"]))
    return ts, np.array(total)


def command_report(cfg, run, baseline=None, optimized=None):
    bts, be = _read_energy(Path(baseline) if baseline else run.out / "energy_baseline.csv")
    ots, oe = _read_energy(Path(optimized) if optimized else run.out / "energy_optimized.csv")
    if bts != ots:
        raise DataError("baseline and optimized energy files cover different hours")
    weather = _weather(cfg)
    market = _market(cfg, weather)
    rep = annual_report(monthly_costs(bts, be, market, cfg.tariff),
                        monthly_costs(ots, oe, market, cfg.tariff))
    rep.write_csv(run.path("report.csv"))
    rep.write_json(run.path("report.json"))
    for r in rep.rows:
        print(f"{r['month']:>7} energy {r['energy_kwh_baseline'] / 1e3:10.1f} -> "
              f"{r['energy_kwh_optimized'] / 1e3:10.1f} MWh  cost {r['total_cost_baseline']:12.0f}"
              f" -> {r['total_cost_optimized']:12.0f} $  ({r['cost_reduction_pct'] or 0:.2f}%)")
    a = rep.annual
    run.metrics.update(energy_reduction_pct=a["energy_reduction_pct"],
                       cost_reduction_pct=a["cost_reduction_pct"],
                       peak_reduction_pct=a["peak_reduction_pct"])


COMMANDS = {"simulate": command_simulate, "optimize": command_optimize, "train": command_train,
            "forecast": command_forecast, "report": command_report}


def build_parser():
    ap = argparse.ArgumentParser(prog="greenmpc", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--mode", choices=MODES, help="forecast source for optimize")
        p.add_argument("--out", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "report":
            p.add_argument("--baseline", help="baseline energy CSV")
            p.add_argument("--optimized", help="optimized energy CSV")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.mode is not None:
            cfg.mode = args.mode
        out = args.out or str(cfg.resolve(cfg.paths.out_dir))
        run = Run(cfg, args.command, out)
        if args.command == "report":
            command_report(cfg, run, args.baseline, args.optimized)
        else:
            COMMANDS[args.command](cfg, run)
        run.manifest()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, SimulationError, TariffError, CheckpointError, FileNotFoundError,
            ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (MpcError, DivergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

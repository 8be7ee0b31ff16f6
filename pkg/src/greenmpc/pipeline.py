"""Baseline vs optimized year: forecasts -> daily MPC -> simulation -> billing."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .mpc import MpcWeights, run_day
from .recipe import PhysiologyBounds, baseline_recipe
from .simulator import GreenhouseConfig, simulate, solar_ppfd
from .tariff import TariffConfig, annual_report, monthly_costs

log = logging.getLogger(__name__)

MODES = ("oracle", "persistence", "transformer")


class OracleForecast:
    """Forecasts equal to the actual series."""

    def __init__(self, price, solar):
        self.price = np.asarray(price, dtype=float)
        self.solar = np.asarray(solar, dtype=float)

    def day(self, d):
        sl = slice(24 * d, 24 * d + 24)
        p, s = self.price[sl], self.solar[sl]
        return (lambda step: p), (lambda step: s)


class PersistenceForecast:
    """Each hour is forecast as the value 24 h earlier (the first day repeats itself)."""

    def __init__(self, price, solar):
        self.price = np.asarray(price, dtype=float)
        self.solar = np.asarray(solar, dtype=float)

    def day(self, d):
        src = d - 1 if d > 0 else d
        sl = slice(24 * src, 24 * src + 24)
        p, s = self.price[sl].copy(), self.solar[sl].copy()
        return (lambda step: p), (lambda step: s)


class RollingForecast:
    """Step-dependent forecasts from precomputed rolling ensemble estimates.

    ``price_at(t)``/``solar_at(t)`` return the combined 24-h-ahead estimate
    available at absolute hour ``t`` for hours ``t .. day end``.
    """

    def __init__(self, price_sets, solar_sets):
        self.price_sets = price_sets
        self.solar_sets = solar_sets

    def day(self, d):
        def p(step):
            t = 24 * d + step - 1
            return self.price_sets.combined_tail(t, 24 * d + 24)

        def s(step):
            t = 24 * d + step - 1
            return np.clip(self.solar_sets.combined_tail(t, 24 * d + 24), 0.0, None)
        return p, s


@dataclass
class YearResult:
    baseline: object
    optimized: object
    days: list
    report: object
    baseline_costs: list
    optimized_costs: list
    recipes: list
    repairs: dict = field(default_factory=dict)
    forecast_price: np.ndarray = None
    forecast_solar: np.ndarray = None


def optimize_year(weather, prices, config=None, tariff=None, bounds=None, weights=None,
                  forecaster=None, days=None, progress=None):
    """Run baseline and MPC-optimized simulations over whole days of ``weather``.

    ``forecaster`` supplies ``day(d) -> (price_fn, solar_fn)``; default oracle.
    """
    config = config or GreenhouseConfig()
    tariff = tariff or TariffConfig()
    bounds = bounds or PhysiologyBounds()
    weights = weights or MpcWeights()
    n_days = len(weather) // 24 if days is None else int(days)
    n = 24 * n_days
    if len(prices) < n:
        raise ValueError(f"prices cover {len(prices)} h, need {n}")
    if prices.timestamps[0] != weather.timestamps[0]:
        raise ValueError("weather and prices must start at the same hour")
    price = prices.price[:n]
    solar = solar_ppfd(weather.ghi[:n], config)
    fc = forecaster or OracleForecast(price, solar)

    results, recipes, repairs = [], [], {}
    fp = np.zeros(n)
    fs = np.zeros(n)
    for d in range(n_days):
        sl = slice(24 * d, 24 * d + 24)
        pf, sf = fc.day(d)
        fp[sl] = np.asarray(pf(1))[-24:]
        fs[sl] = np.asarray(sf(1))[-24:]
        res = run_day(pf, sf, price[sl], solar[sl], bounds=bounds, weights=weights)
        if res.repairs:
            repairs[weather.timestamps[24 * d].date().isoformat()] = list(res.repairs)
        results.append(res)
        recipes.append(res.recipe)
        if progress:
            progress(d, n_days, res)

    base_sim = simulate(weather, baseline_recipe(), config, hours=n)
    opt_sim = simulate(weather, recipes, config, hours=n)
    ts = base_sim.timestamps
    base_costs = monthly_costs(ts, base_sim.total_kwh, prices, tariff)
    opt_costs = monthly_costs(ts, opt_sim.total_kwh, prices, tariff)
    report = annual_report(base_costs, opt_costs)
    return YearResult(base_sim, opt_sim, results, report, base_costs, opt_costs, recipes,
                      repairs, fp, fs)

import numpy as np

from greenmpc.pipeline import PersistenceForecast, optimize_year
from greenmpc.recipe import dli
from greenmpc.synthetic import market_year, weather_year
from greenmpc.tariff import PriceSeries


def test_week_oracle_run():
    wx = weather_year(days=7, seed=3)
    ps = PriceSeries.from_market(market_year(days=7, seed=3))
    yr = optimize_year(wx, ps)
    assert len(yr.recipes) == 7
    for r in yr.recipes:
        assert abs(dli(r) - 12.96) < 1e-6
    assert yr.optimized.energy["lighting"].sum() < yr.baseline.energy["lighting"].sum()
    assert yr.report.annual["cost_reduction_pct"] > 0


def test_persistence_forecaster_runs():
    wx = weather_year(days=3, seed=4)
    ps = PriceSeries.from_market(market_year(days=3, seed=4))
    pf = PersistenceForecast(ps.price[:72], np.zeros(72))
    p0, _ = pf.day(0)
    p1, _ = pf.day(1)
    assert np.array_equal(p0(1), ps.price[:24]) and np.array_equal(p1(5), ps.price[:24])
    yr = optimize_year(wx, ps, forecaster=PersistenceForecast(ps.price[:72],
                                                              np.zeros(72)))
    assert len(yr.days) == 3
    assert np.all(yr.optimized.total_kwh >= 0)

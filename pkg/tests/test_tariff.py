from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greenmpc.synthetic import market_year
from greenmpc.tariff import (DEFAULT_ICRA, MARKET_COLUMNS, AlignmentError, CostBreakdown,
                             MarketDataError, PriceSeries, TariffConfig, annual_report,
                             ingest_market_csv, monthly_cost, monthly_costs, reduction_pct,
                             write_market_csv)

from helpers import hourly

FLAT = TariffConfig(icra_rate=0.01, peak_demand_rate=10.0)


def prices(n, value=0.05, start=datetime(2024, 4, 1)):
    return PriceSeries(hourly(n, start), np.full(n, value))


def test_flat_month():
    ts = hourly(720, datetime(2024, 4, 1))
    c = monthly_cost(ts, np.full(720, 100.0), prices(720), FLAT)
    assert c.energy_cost == pytest.approx(3600.0)
    assert c.icra_cost == pytest.approx(720.0)
    assert c.peak_charge == pytest.approx(1000.0)
    assert c.total == pytest.approx(5320.0)
    assert c.peak_kw == 100.0 and c.energy_kwh == 72000.0
    assert c.month == "2024-04"


def test_zero_consumption():
    ts = hourly(48, datetime(2024, 4, 1))
    c = monthly_cost(ts, np.zeros(48), prices(48), FLAT)
    assert (c.energy_cost, c.icra_cost, c.peak_charge, c.total) == (0, 0, 0, 0)


def test_single_interval():
    ts = hourly(24, datetime(2024, 4, 1))
    e = np.zeros(24)
    e[7] = 50.0
    c = monthly_cost(ts, e, prices(24, 0.037), FLAT)
    assert c.energy_cost == pytest.approx(50 * 0.037)
    assert c.peak_charge == pytest.approx(500.0)


def test_negative_prices_allowed():
    ts = hourly(2, datetime(2024, 4, 1))
    c = monthly_cost(ts, np.array([10.0, 10.0]), prices(2, -0.01), TariffConfig(0.0, 0.0))
    assert c.energy_cost == pytest.approx(-0.2)


def test_misaligned_prices():
    ts = hourly(24, datetime(2024, 4, 2))
    with pytest.raises(AlignmentError):
        monthly_cost(ts, np.ones(24), prices(24), FLAT)
    with pytest.raises(AlignmentError):
        monthly_cost(hourly(24, datetime(2024, 4, 1)), np.ones(23), prices(24), FLAT)


def test_month_spanning_rejected():
    ts = hourly(48, datetime(2024, 4, 30))
    with pytest.raises(AlignmentError):
        monthly_cost(ts, np.ones(48), prices(48, start=datetime(2024, 4, 30)), FLAT)


def test_monthly_rate_table():
    t = TariffConfig()
    assert t.icra_for(1) == DEFAULT_ICRA[0] and t.icra_for(12) == DEFAULT_ICRA[11]
    with pytest.raises(ValueError):
        TariffConfig(icra_rate=(0.01, 0.02))
    with pytest.raises(ValueError):
        TariffConfig(icra_rate=-0.01)


def test_reduction_examples():
    assert round(reduction_pct(9374.3, 7483.9), 2) == 20.17
    assert round(reduction_pct(1521.9, 1203.5), 2) == 20.92
    assert reduction_pct(5.0, 5.0) == 0.0
    assert reduction_pct(0.0, 0.0) == 0.0


def _year_costs(scale=1.0, seed=3):
    m = market_year(seed=seed)
    ps = PriceSeries.from_market(m)
    rng = np.random.default_rng(seed)
    e = rng.uniform(500, 2000, len(ps)) * scale
    return ps, e, monthly_costs(ps.timestamps, e, ps, TariffConfig())


def test_annual_report_identity():
    _, _, months = _year_costs()
    rep = annual_report(months, months)
    assert len(rep.rows) == 13
    assert rep.rows[0]["month"] == "Jan" and rep.annual["month"] == "Annual"
    for r in rep.rows:
        assert r["energy_reduction_pct"] == 0.0 and r["cost_reduction_pct"] == 0.0


def test_annual_reconciliation_and_outputs(tmp_path):
    ps, e, months = _year_costs()
    assert len(months) == 12
    assert sum(m.energy_kwh for m in months) == pytest.approx(e.sum(), rel=1e-12)
    opt = [CostBreakdown(m.energy_cost * 0.8, m.icra_cost * 0.8, m.peak_charge * 0.8,
                         m.total * 0.8, m.peak_kw * 0.8, m.energy_kwh * 0.8, m.month)
           for m in months]
    rep = annual_report(months, opt)
    assert rep.annual["cost_reduction_pct"] == pytest.approx(20.0)
    assert rep.annual["peak_kw_baseline"] == max(m.peak_kw for m in months)
    rep.write_csv(tmp_path / "r.csv")
    rep.write_json(tmp_path / "r.json")
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 14
    assert '"cost_reduction_pct"' in (tmp_path / "r.json").read_text()


def test_totals_add_up():
    _, _, months = _year_costs()
    for m in months:
        assert m.total == pytest.approx(m.energy_cost + m.icra_cost + m.peak_charge, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0))
def test_cost_is_linear_in_energy(a):
    ts = hourly(72, datetime(2024, 4, 1))
    rng = np.random.default_rng(0)
    e = rng.uniform(0, 100, 72)
    p = PriceSeries(ts, rng.uniform(-0.02, 0.2, 72))
    c1 = monthly_cost(ts, e, p, FLAT)
    c2 = monthly_cost(ts, a * e, p, FLAT)
    assert c2.energy_cost == pytest.approx(a * c1.energy_cost, rel=1e-9, abs=1e-9)
    assert c2.icra_cost == pytest.approx(a * c1.icra_cost, rel=1e-9)
    assert c2.peak_charge == pytest.approx(a * c1.peak_charge, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.permutations(list(range(1, 24))))
def test_peak_charge_unchanged_by_shuffling(order):
    ts = hourly(24, datetime(2024, 4, 1))
    e = np.zeros(24)
    e[0] = 100.0
    e[1:] = np.linspace(1, 90, 23)
    shuffled = e.copy()
    shuffled[1:] = e[1:][np.array(order) - 1]
    p = prices(24)
    assert monthly_cost(ts, e, p, FLAT).peak_charge == monthly_cost(ts, shuffled, p, FLAT).peak_charge


# -- market ingest ----------------------------------------------------------

def _row(t, price):
    return f"{t.isoformat()},{price},15000,9000,2000,4000,1500,100,50,0"


def _write(path, rows):
    path.write_text(",".join(MARKET_COLUMNS) + "\n" + "\n".join(rows) + "\n")
    return path


def test_ingest_well_formed(tmp_path):
    ts = hourly(24)
    s = ingest_market_csv(_write(tmp_path / "m.csv", [_row(t, 0.03) for t in ts]))
    assert len(s) == 24 and not s.interpolated.any()
    assert s.generation["nuclear"][0] == 9000


def test_ingest_fills_one_missing_hour(tmp_path):
    ts = hourly(24)
    rows = [_row(t, 0.01 * i) for i, t in enumerate(ts) if i != 5]
    s = ingest_market_csv(_write(tmp_path / "m.csv", rows))
    assert len(s) == 24
    assert s.interpolated.tolist() == [i == 5 for i in range(24)]
    assert s.price[5] == pytest.approx(0.05)


def test_ingest_long_gap_fatal(tmp_path):
    ts = hourly(24)
    rows = [_row(t, 0.03) for i, t in enumerate(ts) if not 5 <= i <= 8]
    with pytest.raises(MarketDataError, match="gap of 4 h"):
        ingest_market_csv(_write(tmp_path / "m.csv", rows))


def test_ingest_non_monotone(tmp_path):
    ts = hourly(5)
    rows = [_row(t, 0.03) for t in (ts[0], ts[2], ts[1], ts[3])]
    with pytest.raises(MarketDataError, match=r"m.csv:4"):
        ingest_market_csv(_write(tmp_path / "m.csv", rows))


def test_ingest_malformed_line_number(tmp_path):
    ts = hourly(4)
    rows = [_row(t, 0.03) for t in ts]
    rows[2] = rows[2].replace("0.03", "abc")
    with pytest.raises(MarketDataError, match=r"m.csv:4"):
        ingest_market_csv(_write(tmp_path / "m.csv", rows))


def test_ingest_bad_header(tmp_path):
    (tmp_path / "m.csv").write_text("a,b\n1,2\n")
    with pytest.raises(MarketDataError):
        ingest_market_csv(tmp_path / "m.csv")


def test_market_csv_round_trip(tmp_path):
    ps = PriceSeries.from_market(market_year(days=3, seed=4))
    write_market_csv(ps, tmp_path / "m.csv")
    back = ingest_market_csv(tmp_path / "m.csv")
    assert np.array_equal(back.price, ps.price)
    assert np.array_equal(back.is_holiday, ps.is_holiday)

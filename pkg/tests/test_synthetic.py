from datetime import date

import numpy as np

from greenmpc.synthetic import clear_sky_ghi, holidays, market_year, two_tier_price, weather_year


def test_weather_year_shape_and_determinism():
    a = weather_year(seed=11)
    b = weather_year(seed=11)
    assert len(a) == 366 * 24  # 2024 is a leap year
    assert np.array_equal(a.ghi, b.ghi) and np.array_equal(a.t_out, b.t_out)
    assert not np.array_equal(a.ghi, weather_year(seed=12).ghi)
    assert np.all(a.ghi >= 0)
    assert a.timestamps[0].hour == 0


def test_ghi_zero_at_night_and_seasonal():
    w = weather_year(seed=1)
    hours = np.array([t.hour for t in w.timestamps])
    assert np.all(w.ghi[(hours < 4) | (hours > 21)] == 0)
    cs = clear_sky_ghi(w.timestamps)
    june = np.array([t.month == 6 for t in w.timestamps])
    dec = np.array([t.month == 12 for t in w.timestamps])
    assert cs[june].max() > cs[dec].max()


def test_holidays():
    h = holidays(2024)
    assert date(2024, 12, 25) in h and date(2024, 7, 1) in h


def test_two_tier_price():
    w = weather_year(days=2)
    p = two_tier_price(w.timestamps)
    assert p[3] == 0.02 and p[12] == 0.04 and p[23] == 0.02


def test_holiday_peak_hours_use_mid_price():
    m = market_year(days=2, seed=3, noise=0.0, spike_prob=0.0)
    # 2024-01-01 is a holiday; the next day is a regular Tuesday
    assert np.allclose(m.price[7:23], 0.03)
    assert np.allclose(m.price[24 + 7:24 + 23], 0.04)
    assert m.is_holiday[:24].all() and not m.is_holiday[24:].any()


def test_market_year_reproducible():
    a = market_year(days=30, seed=5)
    b = market_year(days=30, seed=5)
    assert np.array_equal(a.price, b.price)
    assert len(a.timestamps) == 720
    assert set(a.generation) == {"nuclear", "gas", "hydro", "wind", "solar", "biofuel"}

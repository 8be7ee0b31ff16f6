"""Seeded synthetic weather and market years so the pipeline runs without external data.

Weather: clear-sky irradiance for a mid-latitude site scaled by a persistent
daily cloud index, seasonal plus diurnal temperature with AR(1) noise.
Market: a two-tier price (peak twice off-peak) with random spikes and the
demand/generation features the price model consumes.
"""
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta

import numpy as np

from .simulator import WeatherSeries, relative_humidity, saturation_pressure

DEFAULT_SEED = 2024
LATITUDE = 43.65


def _hours(year, days=None):
    start = datetime(year, 1, 1)
    n_days = days if days is not None else (date(year + 1, 1, 1) - date(year, 1, 1)).days
    return [start + timedelta(hours=h) for h in range(24 * n_days)]


def clear_sky_ghi(timestamps, latitude=LATITUDE):
    """Clear-sky GHI (W m-2) from solar elevation, local solar time assumed."""
    doy = np.array([t.timetuple().tm_yday for t in timestamps], dtype=float)
    hour = np.array([t.hour + 0.5 for t in timestamps], dtype=float)  # mid-interval
    decl = np.radians(23.44) * np.sin(2 * np.pi * (284 + doy) / 365.0)
    ha = np.radians(15.0 * (hour - 12.0))
    lat = np.radians(latitude)
    sin_el = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(ha)
    sin_el = np.clip(sin_el, 0.0, None)
    return 1050.0 * sin_el ** 1.15


def _ar1(rng, n, phi, sigma):
    out = np.empty(n)
    x = 0.0
    e = rng.normal(0.0, sigma * math.sqrt(1 - phi * phi), n)
    for i in range(n):
        x = phi * x + e[i]
        out[i] = x
    return out


def weather_year(year=2024, seed=DEFAULT_SEED, days=None):
    """Hourly WeatherSeries for ``year`` (or its first ``days`` days)."""
    rng = np.random.default_rng(seed)
    ts = _hours(year, days)
    n = len(ts)
    n_days = n // 24
    doy = np.array([t.timetuple().tm_yday for t in ts], dtype=float)
    hour = np.array([t.hour for t in ts], dtype=float)

    cloud = np.clip(0.62 + _ar1(rng, n_days, 0.6, 0.25), 0.08, 1.0)
    kt = np.repeat(cloud, 24) * np.clip(1.0 + rng.normal(0.0, 0.08, n), 0.5, 1.3)
    ghi = np.clip(clear_sky_ghi(ts) * np.clip(kt, 0.0, 1.05), 0.0, None)

    seasonal = 8.0 - 14.0 * np.cos(2 * np.pi * (doy - 20.0) / 365.0)
    diurnal = 4.5 * np.cos(2 * np.pi * (hour - 15.0) / 24.0)
    t_out = seasonal + diurnal * (0.6 + 0.6 * np.repeat(cloud, 24)) + _ar1(rng, n, 0.97, 3.0)
    depression = 1.5 + 7.0 * np.repeat(cloud, 24) * (0.5 + 0.5 * np.cos(2 * np.pi * (hour - 15) / 24))
    dew = t_out - np.clip(depression + rng.normal(0.0, 0.8, n), 0.2, None)
    rh = np.array([min(100.0, relative_humidity(saturation_pressure(d), t))
                   for d, t in zip(dew, t_out)])
    wind = np.clip(4.0 + _ar1(rng, n, 0.9, 2.0), 0.0, None)
    slp = 101.5 + _ar1(rng, n, 0.98, 0.9)
    station = slp - 1.05
    wdir = np.mod(240.0 + np.cumsum(rng.normal(0.0, 12.0, n)), 360.0)
    return WeatherSeries(ts, ghi, t_out, dew, wind, station, slp, wdir, rh)


def _nth_weekday(year, month, weekday, nth):
    d = date(year, month, 1)
    d += timedelta(days=(weekday - d.weekday()) % 7)
    return d + timedelta(weeks=nth - 1)


def _last_weekday_before(year, month, day, weekday):
    d = date(year, month, day) - timedelta(days=1)
    while d.weekday() != weekday:
        d -= timedelta(days=1)
    return d


def holidays(year):
    """Fixed and weekday-rule statutory holidays (Good Friday omitted)."""
    return {
        date(year, 1, 1), _nth_weekday(year, 2, 0, 3), _last_weekday_before(year, 5, 25, 0),
        date(year, 7, 1), _nth_weekday(year, 8, 0, 1), _nth_weekday(year, 9, 0, 1),
        _nth_weekday(year, 10, 0, 2), date(year, 12, 25), date(year, 12, 26),
    }


@dataclass
class MarketYear:
    timestamps: list
    price: np.ndarray
    demand_mw: np.ndarray
    generation: dict
    is_holiday: np.ndarray


PEAK_HOURS = (7, 23)
GEN_FUELS = ("nuclear", "gas", "hydro", "wind", "solar", "biofuel")


def two_tier_price(timestamps, off_peak=0.02, ratio=2.0, peak_hours=PEAK_HOURS):
    """Deterministic two-tier price: ``ratio * off_peak`` inside peak hours."""
    h = np.array([t.hour for t in timestamps])
    return np.where((h >= peak_hours[0]) & (h < peak_hours[1]), off_peak * ratio, off_peak)


def market_year(year=2024, seed=DEFAULT_SEED, days=None, off_peak=0.02, ratio=2.0,
                spike_prob=0.01, noise=0.002, weather=None):
    """Two-tier price with noise and spikes, plus correlated market features."""
    rng = np.random.default_rng(seed + 1)
    ts = _hours(year, days)
    n = len(ts)
    hol = holidays(year)
    is_hol = np.array([t.date() in hol for t in ts])
    weekend = np.array([t.weekday() >= 5 for t in ts])
    base = two_tier_price(ts, off_peak, ratio)
    base = np.where((weekend | is_hol) & (base > off_peak), off_peak * (1 + ratio) / 2, base)
    price = base + rng.normal(0.0, noise, n)
    spikes = rng.random(n) < spike_prob
    price[spikes] += rng.uniform(0.05, 0.25, spikes.sum())
    dips = (rng.random(n) < spike_prob / 2) & (base == off_peak)
    price[dips] = -rng.uniform(0.0, 0.01, dips.sum())

    hour = np.array([t.hour for t in ts])
    doy = np.array([t.timetuple().tm_yday for t in ts])
    demand = (15000 + 2500 * np.cos(2 * np.pi * (doy - 20) / 365.0) ** 2
              + 2000 * np.sin(np.pi * np.clip(hour - 6, 0, 16) / 16.0)
              - 1200 * (weekend | is_hol) + _ar1(rng, n, 0.9, 400.0))
    sol_mw = 400.0 * clear_sky_ghi(ts) / 1050.0 if weather is None else 0.4 * weather.ghi[:n]
    gen = {
        "nuclear": np.full(n, 9500.0) + rng.normal(0, 50, n),
        "hydro": 3500 + 0.1 * (demand - 15000) + rng.normal(0, 100, n),
        "wind": np.clip(1500 + _ar1(rng, n, 0.95, 900.0), 0, None),
        "solar": sol_mw,
        "biofuel": np.full(n, 50.0) + rng.normal(0, 5, n),
    }
    gen["gas"] = np.clip(demand - sum(gen.values()), 0, None)
    gen = {k: gen[k] for k in GEN_FUELS}
    return MarketYear(ts, price, demand, gen, is_hol)

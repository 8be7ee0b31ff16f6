"""Feature tables, normalization and sliding windows for the forecasters."""
from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

from .cleaning import Q_HIGH, Q_LOW, FENCE_K, fill_gaps, iqr_clean

WINDOW = 24
HORIZON = 24
SPLIT = (0.7, 0.2, 0.1)

PRICE_FEATURES = ("dow_sin", "dow_cos", "hour_sin", "hour_cos", "year", "temperature",
                  "wind_speed", "season", "market_demand", "holiday", "gen_nuclear", "gen_gas",
                  "gen_hydro", "gen_wind", "gen_solar", "gen_biofuel", "price")
SOLAR_FEATURES = ("hour_sin", "hour_cos", "doy_sin", "doy_cos", "temperature", "dew_point",
                  "wind_speed", "station_pressure", "sea_level_pressure", "wind_dir_sin",
                  "wind_dir_cos", "rh", "ghi")


@dataclass
class FeatureTable:
    """Hourly feature columns; ``valid`` marks hours usable inside a window."""

    timestamps: list
    columns: dict
    target: str
    valid: np.ndarray = None
    removed: np.ndarray = None

    def __post_init__(self):
        n = len(self.timestamps)
        for k, v in self.columns.items():
            v = np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise ValueError(f"column {k} has {v.size} values for {n} hours")
            self.columns[k] = v
        if self.target not in self.columns:
            raise ValueError(f"target {self.target!r} is not a column")
        if self.valid is None:
            self.valid = np.ones(n, dtype=bool)
        if self.removed is None:
            self.removed = np.zeros(n, dtype=bool)

    def __len__(self):
        return len(self.timestamps)

    @property
    def names(self):
        return tuple(self.columns)

    def matrix(self):
        return np.column_stack([self.columns[k] for k in self.columns])

    def slice(self, start, stop):
        return FeatureTable(self.timestamps[start:stop],
                            {k: v[start:stop].copy() for k, v in self.columns.items()},
                            self.target, self.valid[start:stop].copy(),
                            self.removed[start:stop].copy())


def _time_columns(timestamps):
    hour = np.array([t.hour for t in timestamps], dtype=float)
    dow = np.array([t.weekday() for t in timestamps], dtype=float)
    doy = np.array([t.timetuple().tm_yday for t in timestamps], dtype=float)
    month = np.array([t.month for t in timestamps])
    return {
        "hour_sin": np.sin(2 * np.pi * hour / 24), "hour_cos": np.cos(2 * np.pi * hour / 24),
        "dow_sin": np.sin(2 * np.pi * dow / 7), "dow_cos": np.cos(2 * np.pi * dow / 7),
        "doy_sin": np.sin(2 * np.pi * doy / 365.25), "doy_cos": np.cos(2 * np.pi * doy / 365.25),
        "year": np.array([t.year for t in timestamps], dtype=float),
        "season": ((month % 12) // 3).astype(float),  # 0 winter .. 3 autumn
    }


def _gaps(timestamps):
    """True where the previous hour is missing (first hour excluded)."""
    out = np.zeros(len(timestamps), dtype=bool)
    for i in range(1, len(timestamps)):
        out[i] = timestamps[i] - timestamps[i - 1] != timedelta(hours=1)
    return out


def _cleaned_target(values, clean, q_low, q_high, k):
    if not clean:
        return np.asarray(values, dtype=float), np.zeros(len(values), dtype=bool)
    cleaned, removed = iqr_clean(values, q_low, q_high, k)
    return fill_gaps(cleaned), removed


def price_feature_table(prices, weather, clean=True, q_low=Q_LOW, q_high=Q_HIGH, k=FENCE_K):
    """Price model inputs; the lagged price itself is the last column."""
    n = len(prices)
    if len(weather) < n or weather.timestamps[0] != prices.timestamps[0]:
        raise ValueError("weather must cover the price timestamps")
    tc = _time_columns(prices.timestamps)
    target, removed = _cleaned_target(prices.price, clean, q_low, q_high, k)
    cols = {
        "dow_sin": tc["dow_sin"], "dow_cos": tc["dow_cos"], "hour_sin": tc["hour_sin"],
        "hour_cos": tc["hour_cos"], "year": tc["year"], "temperature": weather.t_out[:n],
        "wind_speed": weather.wind_speed[:n], "season": tc["season"],
        "market_demand": prices.demand_mw, "holiday": prices.is_holiday.astype(float),
    }
    for f in ("nuclear", "gas", "hydro", "wind", "solar", "biofuel"):
        cols["gen_" + f] = prices.generation[f]
    cols["price"] = target
    return FeatureTable(list(prices.timestamps), cols, "price", removed=removed)


def solar_feature_table(weather, clean=False, q_low=Q_LOW, q_high=Q_HIGH, k=FENCE_K):
    """Solar model inputs; GHI (W m-2) is the target and the last column."""
    tc = _time_columns(weather.timestamps)
    rad = np.radians(weather.wind_direction)
    target, removed = _cleaned_target(weather.ghi, clean, q_low, q_high, k)
    cols = {
        "hour_sin": tc["hour_sin"], "hour_cos": tc["hour_cos"], "doy_sin": tc["doy_sin"],
        "doy_cos": tc["doy_cos"], "temperature": weather.t_out, "dew_point": weather.dew_point,
        "wind_speed": weather.wind_speed, "station_pressure": weather.station_pressure,
        "sea_level_pressure": weather.sea_level_pressure, "wind_dir_sin": np.sin(rad),
        "wind_dir_cos": np.cos(rad), "rh": weather.rh_out, "ghi": target,
    }
    return FeatureTable(list(weather.timestamps), cols, "ghi", removed=removed)


def series_feature_table(timestamps, values, name="y"):
    """Minimal table for a single series: hour-of-day encoding plus the lagged value."""
    tc = _time_columns(timestamps)
    return FeatureTable(list(timestamps), {"hour_sin": tc["hour_sin"],
                                           "hour_cos": tc["hour_cos"], name: values}, name)


@dataclass
class Normalizer:
    """Per-column mean/std; zero spread maps to std 1."""

    names: tuple
    mean: np.ndarray
    std: np.ndarray
    target: str = ""

    @classmethod
    def fit(cls, table, rows=None):
        m = table.matrix()
        if rows is not None:
            m = m[rows]
        mean = m.mean(0)
        std = m.std(0)
        std = np.where(std > 1e-12, std, 1.0)
        return cls(table.names, mean, std, table.target)

    @property
    def target_index(self):
        return self.names.index(self.target)

    def normalize(self, matrix):
        return (np.asarray(matrix, dtype=float) - self.mean) / self.std

    def denormalize(self, matrix):
        return np.asarray(matrix, dtype=float) * self.std + self.mean

    def normalize_target(self, y):
        i = self.target_index
        return (np.asarray(y, dtype=float) - self.mean[i]) / self.std[i]

    def denormalize_target(self, y):
        i = self.target_index
        return np.asarray(y, dtype=float) * self.std[i] + self.mean[i]

    def to_dict(self):
        return {"names": list(self.names), "mean": self.mean.tolist(),
                "std": self.std.tolist(), "target": self.target}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["names"]), np.array(d["mean"]), np.array(d["std"]), d["target"])


def window_starts(table, window=WINDOW, horizon=HORIZON, lo=0, hi=None):
    """Issue hours ``s`` whose span ``[s - window + 1, s + horizon]`` is contiguous and valid.

    A window issued at hour ``s`` sees hours ``s-window+1 .. s`` and predicts
    ``s+1 .. s+horizon``; only spans inside ``[lo, hi)`` are returned. Missing
    timestamps, non-finite values and ``valid == False`` hours all break spans.
    """
    n = len(table)
    hi = n if hi is None else min(hi, n)
    bad = ~table.valid | ~np.all(np.isfinite(table.matrix()), axis=1)
    gap = _gaps(table.timestamps)
    cb = np.concatenate([[0], np.cumsum(bad)])
    cg = np.concatenate([[0], np.cumsum(gap)])
    s = np.arange(lo + window - 1, hi - horizon, dtype=np.int64)
    if s.size == 0:
        return s
    a, b = s - window + 1, s + horizon
    ok = (cb[b + 1] - cb[a] == 0) & (cg[b + 1] - cg[a + 1] == 0)
    return s[ok]


@dataclass
class WindowSet:
    X: np.ndarray
    Y: np.ndarray
    issue: np.ndarray


def build_windows(table, normalizer, starts, window=WINDOW, horizon=HORIZON):
    """Stack normalized input windows and normalized 24-h targets for ``starts``."""
    m = normalizer.normalize(table.matrix())
    tgt = normalizer.normalize_target(table.columns[table.target])
    starts = np.asarray(starts, dtype=np.int64)
    if starts.size == 0:
        return WindowSet(np.zeros((0, window, m.shape[1])), np.zeros((0, horizon)), starts)
    idx_in = starts[:, None] + np.arange(-window + 1, 1)[None, :]
    idx_out = starts[:, None] + np.arange(1, horizon + 1)[None, :]
    return WindowSet(m[idx_in], tgt[idx_out], starts)


@dataclass
class Splits:
    bounds: tuple
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    normalizer: Normalizer = field(default=None)


def chronological_split(table, fractions=SPLIT, window=WINDOW, horizon=HORIZON):
    """70/20/10 split on whole-day boundaries; no window crosses a boundary.

    The normalizer is fitted on the training hours only.
    """
    n_days = len(table) // 24
    if n_days < 3:
        raise ValueError("need at least three days of data to split")
    d1 = max(1, int(round(fractions[0] * n_days)))
    d2 = max(d1 + 1, int(round((fractions[0] + fractions[1]) * n_days)))
    d2 = min(d2, n_days - 1) if fractions[2] > 0 else min(d2, n_days)
    b1, b2, b3 = 24 * d1, 24 * d2, 24 * n_days
    norm = Normalizer.fit(table, np.arange(b1))
    return Splits((b1, b2, b3), window_starts(table, window, horizon, 0, b1),
                  window_starts(table, window, horizon, b1, b2),
                  window_starts(table, window, horizon, b2, b3), norm)

"""Combining the overlapping day-ahead forecasts of each hour, and the persistence baseline."""
from dataclasses import dataclass

import numpy as np

DEFAULT_DECAY = 0.15
MAX_AGE = 24


@dataclass(frozen=True)
class ForecastSet:
    """Predictions for one target hour and their issue ages in hours (1 = newest)."""

    values: tuple
    ages: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        a = tuple(int(x) for x in self.ages)
        if len(v) != len(a):
            raise ValueError("values and ages differ in length")
        if any(not 1 <= x <= MAX_AGE for x in a):
            raise ValueError(f"ages must lie in [1, {MAX_AGE}]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "ages", a)

    def __len__(self):
        return len(self.values)


def ensemble_weights(ages, decay=DEFAULT_DECAY):
    """Weights proportional to ``exp(decay * recency)``, normalized to sum to 1.

    Recency is ``-age``, so each hour newer multiplies the weight by ``e**decay``.
    """
    a = np.asarray(ages, dtype=float)
    if a.size == 0:
        raise ValueError("no predictions to weight")
    if decay < 0:
        raise ValueError("decay must be non-negative")
    z = -decay * a
    e = np.exp(z - z.max())
    return e / e.sum()


def ensemble_combine(forecasts, decay=DEFAULT_DECAY):
    if len(forecasts) == 0:
        raise ValueError("empty forecast set")
    w = ensemble_weights(forecasts.ages, decay)
    return float(np.dot(w, forecasts.values))


def persistence_baseline(history, horizon=24):
    """Repeat the last 24 hours of ``history``."""
    h = np.asarray(history, dtype=float)
    if h.size < 24:
        raise ValueError("persistence needs at least 24 hours of history")
    day = h[-24:]
    return np.resize(day, horizon)


class RollingForecasts:
    """Prediction matrix ``pred[s, j]``: issued after hour ``s`` for hour ``s + 1 + j``.

    Rows that could not be issued are NaN. ``fallback[h]`` is used for a hour
    with no issued prediction yet.
    """

    def __init__(self, pred, fallback, decay=DEFAULT_DECAY):
        self.pred = np.asarray(pred, dtype=float)
        self.fallback = np.asarray(fallback, dtype=float)
        self.decay = decay
        if self.pred.ndim != 2 or self.pred.shape[1] > MAX_AGE:
            raise ValueError("pred must be (hours, <=24)")
        if self.fallback.shape != (self.pred.shape[0],):
            raise ValueError("fallback must have one value per hour")

    def forecast_set(self, h, as_of):
        """Predictions for hour ``h`` issued at or before hour ``as_of``."""
        H = self.pred.shape[1]
        vals, ages = [], []
        for s in range(max(0, h - H), min(h - 1, as_of) + 1):
            v = self.pred[s, h - s - 1]
            if np.isfinite(v):
                vals.append(v)
                ages.append(h - s)
        return ForecastSet(vals, ages)

    def combined(self, h, as_of):
        fs = self.forecast_set(h, as_of)
        if len(fs) == 0:
            return float(self.fallback[h])
        return ensemble_combine(fs, self.decay)

    def combined_tail(self, t, end):
        """Combined forecasts for hours ``t .. end-1`` using issues up to hour ``t - 1``."""
        return np.array([self.combined(h, t - 1) for h in range(t, end)])

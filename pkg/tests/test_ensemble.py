import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greenmpc.forecast import (ForecastSet, RollingForecasts, ensemble_combine, ensemble_weights,
                               persistence_baseline)


def test_two_predictions_ln3():
    fs = ForecastSet(values=(10.0, 20.0), ages=(2, 1))
    assert ensemble_combine(fs, math.log(3)) == pytest.approx(17.5, rel=1e-12)


def test_zero_decay_is_mean():
    fs = ForecastSet(values=(1.0, 4.0, 10.0), ages=(24, 7, 3))
    assert ensemble_combine(fs, 0.0) == pytest.approx(5.0, rel=1e-12)


def test_large_decay_is_latest():
    fs = ForecastSet(values=(1.0, 4.0, 10.0), ages=(24, 7, 3))
    assert ensemble_combine(fs, 50.0) == pytest.approx(10.0, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 24), min_size=1, max_size=24, unique=True), st.floats(0, 5))
def test_weights_sum_to_one_and_favor_recent(ages, decay):
    w = ensemble_weights(ages, decay)
    assert abs(w.sum() - 1.0) <= 1e-12
    if decay > 0:
        order = np.argsort(ages)[::-1]  # oldest first
        assert np.all(np.diff(w[order]) >= 0)


def test_invalid_sets():
    with pytest.raises(ValueError):
        ForecastSet((1.0,), (0,))
    with pytest.raises(ValueError):
        ensemble_combine(ForecastSet((), ()))


def test_persistence_examples():
    day = np.sin(np.arange(24))
    hist = np.tile(day, 3)
    assert np.array_equal(persistence_baseline(hist[:48]), hist[48:])
    assert np.all(persistence_baseline(np.full(30, 7.0)) == 7.0)
    shifted = np.concatenate([day, day + 2.5])
    assert np.allclose(shifted[24:] - persistence_baseline(shifted[:24]), 2.5)
    with pytest.raises(ValueError):
        persistence_baseline(np.zeros(10))


def test_rolling_forecast_sets():
    n = 72
    pred = np.full((n, 24), np.nan)
    for s in range(23, n):
        pred[s] = s  # each issue predicts its own issue hour
    rf = RollingForecasts(pred, np.full(n, -1.0), decay=0.0)
    fs = rf.forecast_set(50, 49)
    assert sorted(fs.ages) == list(range(1, 25))
    assert rf.combined(50, 49) == pytest.approx(np.mean(np.arange(26, 50)))
    # nothing issued yet for hour 5: fallback
    assert rf.combined(5, 4) == -1.0
    tail = rf.combined_tail(40, 44)
    assert tail.shape == (4,)

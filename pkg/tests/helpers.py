"""Shared builders for the test suite."""
from datetime import datetime, timedelta

import numpy as np

from greenmpc.mpc import MpcProblem, MpcWeights, feasibility_check
from greenmpc.recipe import PhysiologyBounds
from greenmpc.simulator import WeatherSeries


def hourly(n, start=datetime(2024, 1, 1)):
    return [start + timedelta(hours=i) for i in range(n)]


def flat_weather(n, ghi=0.0, t_out=22.0, dew_point=10.0, start=datetime(2024, 1, 1)):
    return WeatherSeries(hourly(n, start), np.full(n, float(ghi)), np.full(n, float(t_out)),
                         np.full(n, float(dew_point)))


def random_problem(rng, min_free=2, max_free=8, max_prefix=3):
    """A feasible lighting program with 2..8 free hours and a random DLI target.

    Returns None when the draw admits no DLI range, or the drawn target sits
    in a gap between reachable light sums (caller redraws).
    """
    k = int(rng.integers(min_free, max_free + 1))
    n = k + int(rng.integers(0, max_prefix + 1))
    step = n - k + 1
    prices = rng.uniform(-0.02, 0.20, n)
    solar = np.where(rng.random(n) < 0.5, rng.uniform(0.0, 900.0, n), 0.0)
    cu = rng.integers(0, 2, step - 1)
    cx = np.where(cu == 1, rng.uniform(130.0, 880.0, step - 1), 0.0)
    weights = MpcWeights(1.0, float(rng.choice([0.0, 1e-4, 1e-3])),
                         float(rng.choice([0.0, 0.05])))
    p0 = MpcProblem(step, prices, solar, cu, cx, bounds=PhysiologyBounds(dli_target=1.0),
                    weights=weights)
    rep = feasibility_check(p0)
    if rep.bad_hours or not np.isfinite(rep.max_dli) or rep.max_dli <= max(rep.min_dli, 0.01):
        return None
    p = p0.with_dli_target(rng.uniform(max(rep.min_dli, 0.01), rep.max_dli))
    return p if feasibility_check(p).feasible else None


def random_problems(seed, count, **kw):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        p = random_problem(rng, **kw)
        if p is not None:
            out.append(p)
    return out

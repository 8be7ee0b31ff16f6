"""The eight acceptance criteria, each at its stated tolerance.

Each test records one PASS/FAIL line, shown in the pytest terminal summary.
"""
import math
import time
from datetime import datetime

import numpy as np
import pytest

from greenmpc.forecast import (AttentionModelConfig, ForecastSet, TrainConfig,
                               TransformerForecaster, ensemble_combine, ensemble_weights,
                               fit_forecaster, iqr_clean, iqr_fences, series_feature_table)
from greenmpc.mpc import brute_force_solve, run_day, solve, verify_solution
from greenmpc.pipeline import optimize_year
from greenmpc.recipe import PhysiologyBounds, baseline_recipe, dli, generate_trial_recipes
from greenmpc.simulator import (DeviceClass, EnvironmentState, GreenhouseConfig, LoadDispatch,
                                WeatherRecord, interval_energy, simulate, step_thermal)
from greenmpc.synthetic import market_year, weather_year
from greenmpc.tariff import PriceSeries

from acceptance_log import record
from helpers import hourly, random_problems

# figures reported for the original field data; printed for context only
REFERENCE_PCT = {"cost": 20.92, "energy": 20.17, "peak": 33.3}

VERIFIED = {"solutions": 0, "violations": []}


def _verify(problem, solution):
    VERIFIED["solutions"] += 1
    problems = verify_solution(problem, solution)
    if problems:
        VERIFIED["violations"].append(problems)
    return not problems


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# -- 1 ----------------------------------------------------------------------

def test_criterion_1_recipe_arithmetic():
    d = dli(baseline_recipe())
    trials = {t.tdld: t.ppfd for t in generate_trial_recipes(PhysiologyBounds(), [12, 15, 9])}
    errs = [rel(d, 15.0336), rel(trials[12], 300), rel(trials[15], 240), rel(trials[9], 400)]
    ok = max(errs) <= 1e-9 and round(d, 2) == 15.03
    record(1, "recipe arithmetic", ok,
           f"baseline DLI {d:.10g}; trial PPFD {trials[12]:.10g}/{trials[15]:.10g}/"
           f"{trials[9]:.10g}; max rel err {max(errs):.1e} (tol 1e-9)")
    assert ok


# -- 2 and 3 ----------------------------------------------------------------

def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    problems = random_problems(2024, 500)
    worst = 0.0
    for p in problems:
        s = solve(p)
        b = brute_force_solve(p)
        worst = max(worst, abs(s.objective - b.objective) / max(1.0, abs(b.objective)))
        _verify(p, s)
        _verify(p, b)
    elapsed = time.perf_counter() - t0
    free = [p.n_free for p in problems]
    ok = worst <= 1e-6 and elapsed < 120.0
    record(2, "MPC oracle equivalence", ok,
           f"{len(problems)} instances, {min(free)}-{max(free)} free hours, worst rel gap "
           f"{worst:.1e} (tol 1e-6), {elapsed:.1f} s (limit 120 s)")
    assert ok


# -- 4 ----------------------------------------------------------------------

def test_criterion_4_receding_consistency():
    t0 = time.perf_counter()
    h = np.arange(24)
    rng = np.random.default_rng(4)
    worst_x = worst_obj = 0.0
    same_u = True
    days = 0
    for peak in (0.0, 120.0, 180.0, 400.0, 900.0, 1300.0):
        for _ in range(2):
            price = np.where((h >= 7) & (h < 23), 0.04, 0.02) + rng.normal(0, 0.003, 24)
            solar = np.clip(peak * np.sin(np.pi * (h - 5.5) / 14), 0, None) * rng.uniform(0.6, 1, 24)
            res = run_day(price, solar, price, solar)
            days += 1
            same_u &= bool(np.array_equal(res.plan.u, np.array(res.schedule.u)))
            worst_x = max(worst_x, float(np.max(np.abs(res.plan.x - np.array(res.schedule.x)))))
            worst_obj = max(worst_obj, abs(res.final.objective - res.plan.objective)
                            / max(1.0, abs(res.plan.objective)))
            _verify(res.final_problem, res.final)
    elapsed = time.perf_counter() - t0
    ok = same_u and worst_obj <= 1e-6 and worst_x <= 1e-6
    record(4, "receding-horizon consistency", ok,
           f"{days} oracle days, committed u == step-1 plan: {same_u}, max |dx| {worst_x:.1e}, "
           f"objective rel diff {worst_obj:.1e} (tol 1e-6), {elapsed:.1f} s")
    assert ok


# -- 5 ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def synthetic_year():
    t0 = time.perf_counter()
    wx = weather_year()
    ps = PriceSeries.from_market(market_year(weather=wx))
    yr = optimize_year(wx, ps)
    return yr, time.perf_counter() - t0


def test_criterion_5_cost_dominance(synthetic_year):
    yr, elapsed = synthetic_year
    rows = yr.report.rows[:-1]
    a = yr.report.annual
    cost_ok = a["total_cost_optimized"] <= a["total_cost_baseline"] and a["cost_reduction_pct"] > 0
    energy_months = sum(r["energy_kwh_optimized"] <= r["energy_kwh_baseline"] for r in rows)
    peak_months = sum(r["peak_kw_optimized"] <= r["peak_kw_baseline"] for r in rows)
    ok = cost_ok and energy_months == 12 and peak_months >= 10 and elapsed < 600
    record(5, "cost dominance (synthetic year)", ok,
           f"cost -{a['cost_reduction_pct']:.2f}% (field data: -{REFERENCE_PCT['cost']}%), "
           f"energy -{a['energy_reduction_pct']:.2f}% ({REFERENCE_PCT['energy']}%), "
           f"annual peak -{a['peak_reduction_pct']:.2f}% ({REFERENCE_PCT['peak']}%); "
           f"energy lower in {energy_months}/12 months, peak lower in {peak_months}/12 "
           f"(need >= 10); {elapsed:.0f} s (limit 600 s)")
    assert ok


def test_criterion_3_constraint_satisfaction(synthetic_year):
    yr, _ = synthetic_year
    deficits = 0
    for res in yr.days:
        _verify(res.final_problem, res.final)
        if res.dli_deficit > 0:
            deficits += 1
            assert res.repairs, "DLI deficit without a logged repair"
        else:
            assert abs(res.final.dli - 12.96) <= 1e-6
    n, bad = VERIFIED["solutions"], len(VERIFIED["violations"])
    ok = n > 0 and bad == 0
    record(3, "constraint satisfaction", ok,
           f"{n} solutions checked by the independent verifier, {bad} with violations; "
           f"{deficits} logged DLI deficits")
    assert ok, VERIFIED["violations"][:3]


# -- 6 ----------------------------------------------------------------------

def test_criterion_6_forecaster():
    t0 = time.perf_counter()
    cfg = AttentionModelConfig(n_features=3, layers=2, heads=2, model_dim=8, feedforward_dim=12,
                               dropout=0.0, window=5, horizon=4)
    m = TransformerForecaster(cfg, seed=1)
    rng = np.random.default_rng(0)
    X, Y = rng.normal(size=(3, 5, 3)), rng.normal(size=(3, 4))
    _, grads = m.loss_and_grad(X, Y)
    worst, zero_err = 0.0, 0.0
    h = 1e-6
    for name, p in m.params.items():
        fd = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            lp, _ = m.loss_and_grad(X, Y)
            p[i] = old - h
            lm, _ = m.loss_and_grad(X, Y)
            p[i] = old
            fd[i] = (lp - lm) / (2 * h)
        err = np.linalg.norm(fd - grads[name])
        scale = max(np.linalg.norm(fd), np.linalg.norm(grads[name]))
        if scale < 1e-8:  # key biases: softmax is shift invariant, true gradient is 0
            zero_err = max(zero_err, err)
        else:
            worst = max(worst, err / scale)
    grad_ok = worst <= 1e-4 and zero_err < 1e-8

    ts = hourly(24 * 60, datetime(2023, 1, 1))
    noise = np.random.default_rng(0).normal(0, 0.5, len(ts))
    y = 10 + 3 * np.sin(2 * np.pi * np.arange(len(ts)) / 24) + noise
    rep = fit_forecaster(series_feature_table(ts, y), train_cfg=TrainConfig(max_epochs=30, seed=0))
    beats = rep.test_rmse < rep.persistence_rmse

    ages = np.arange(1, 25)
    sums = max(abs(ensemble_weights(ages, lam).sum() - 1) for lam in (0.0, 0.15, 1.0, 10.0))
    vals = np.linspace(3.0, 7.0, 24)
    fs = ForecastSet(vals, ages)
    mean_err = abs(ensemble_combine(fs, 0.0) - vals.mean())
    latest_err = abs(ensemble_combine(fs, 60.0) - vals[0])  # age 1 is the latest issue
    ens_ok = sums <= 1e-6 and mean_err <= 1e-6 and latest_err <= 1e-6
    elapsed = time.perf_counter() - t0
    ok = grad_ok and beats and ens_ok and elapsed < 300
    record(6, "forecaster correctness", ok,
           f"grad check worst rel err {worst:.1e} (tol 1e-4), zero-gradient tensors abs err "
           f"{zero_err:.0e}; sinusoid test RMSE "
           f"{rep.test_rmse:.3f} vs persistence {rep.persistence_rmse:.3f}; weights sum err "
           f"{sums:.0e}, mean err {mean_err:.0e}, latest err {latest_err:.0e}; {elapsed:.0f} s")
    assert ok


# -- 7 ----------------------------------------------------------------------

def test_criterion_7_iqr_cleaning():
    v = np.append(np.linspace(0.0, 100.0, 101), 1000.0)
    lo, hi = iqr_fences(np.linspace(0.0, 100.0, 101))
    _, removed = iqr_clean(v)
    idx = np.nonzero(removed)[0].tolist()
    ok = idx == [101] and math.isclose(lo, -95.0) and math.isclose(hi, 185.0)
    record(7, "IQR cleaning", ok,
           f"fences on 0..100: [{lo:g}, {hi:g}]; removed indices {idx} (expected [101])")
    assert ok


# -- 8 ----------------------------------------------------------------------

def test_criterion_8_simulator_sanity(synthetic_year):
    cfg = GreenhouseConfig()
    wx = WeatherRecord(datetime(2024, 1, 1), 0.0, 21.7, 5.0)
    state = EnvironmentState(t_in=21.7)
    for _ in range(1000):
        t, disp = step_thermal(state, wx, cfg, (20.0, 24.0), dt_hours=1 / 6)
        state = EnvironmentState(t, state.rh_in, state.co2)
    steady = state.t_in == 21.7 and disp.q_heater == 0.0 and disp.q_chil == 0.0

    yr, _ = synthetic_year
    base = simulate(weather_year(), baseline_recipe())
    unflagged = 0
    flagged = 0
    for sim in (base, yr.optimized):
        out = (sim.t_in < sim.temp_lo - 1e-6) | (sim.t_in > sim.temp_hi + 1e-6)
        unflagged += int(np.sum(out & ~sim.shortfall))
        flagged += int(np.sum(out & sim.shortfall))

    fixtures = [
        (GreenhouseConfig(device_inventory=(DeviceClass("led", 2, 0.6),)),
         LoadDispatch({"led": 1.0}), 1.2),
        (GreenhouseConfig(), LoadDispatch({d.name: 0.0 for d in cfg.device_inventory}), 0.0),
        (GreenhouseConfig(device_inventory=(DeviceClass("chiller", 1, 6.6),
                                            DeviceClass("heater", 1, 3.3))),
         LoadDispatch({"chiller": 0.5, "heater": 0.0}), 3.3),
    ]
    energy_err = max(abs(interval_energy(d, c, 1.0) - want) for c, d, want in fixtures)
    ok = steady and unflagged == 0 and energy_err <= 1e-12
    record(8, "simulator sanity", ok,
           f"zero-driver steady state exact: {steady}; out-of-band hours over baseline and "
           f"optimized years: {flagged} flagged shortfall, {unflagged} unflagged; fixture "
           f"energy max err {energy_err:.0e}")
    assert ok

import numpy as np
import pytest

from greenmpc.mpc import MpcWeights, assemble_problem, run_day, verify_solution, write_diagnostics_csv
from greenmpc.mpc.bnb import objective_value
from greenmpc.recipe import PhysiologyBounds, baseline_recipe, dli, validate
from greenmpc.synthetic import two_tier_price

from helpers import hourly

H = np.arange(24)


def day(seed, peak):
    rng = np.random.default_rng(seed)
    price = np.where((H >= 7) & (H < 23), 0.04, 0.02) + rng.normal(0, 0.003, 24)
    solar = np.clip(peak * np.sin(np.pi * (H - 5.5) / 14), 0, None) * rng.uniform(0.7, 1.0, 24)
    return price, solar


@pytest.mark.parametrize("seed,peak", [(0, 0.0), (1, 150.0), (2, 400.0), (3, 900.0)])
def test_oracle_day_matches_step_one_plan(seed, peak):
    price, solar = day(seed, peak)
    res = run_day(price, solar, price, solar)
    assert res.repairs == []
    assert np.array_equal(res.plan.u, np.array(res.schedule.u))
    assert np.allclose(res.plan.x, np.array(res.schedule.x), rtol=0, atol=1e-6)
    assert res.final.objective == pytest.approx(res.plan.objective, rel=1e-6)
    final = assemble_problem(25, price, solar, [], [], res.schedule.u, res.schedule.x)
    assert verify_solution(final, res.final) == []
    assert validate(res.recipe, PhysiologyBounds()) == []
    assert len(res.steps) == 24


def test_committed_hours_never_change():
    price, solar = day(5, 300.0)
    rng = np.random.default_rng(0)
    noisy_p = lambda step: price + rng.normal(0, 0.01, 24)  # noqa: E731
    res = run_day(noisy_p, solar, price, solar)
    # commitment order: each step appended exactly one hour
    assert [s.step for s in res.steps] == list(range(1, 25))
    assert np.array_equal(res.final.u, np.array(res.schedule.u))
    assert np.array_equal(res.final.x, np.array(res.schedule.x))


def test_cheaper_than_baseline_on_two_tier_tariff():
    price = two_tier_price(hourly(24, hourly(25)[24]))  # a regular Tuesday
    solar = np.zeros(24)
    bounds = PhysiologyBounds(dli_target=dli(baseline_recipe()))
    res = run_day(price, solar, price, solar, bounds=bounds, weights=MpcWeights(1.0, 0.0, 0.0))
    base = baseline_recipe().artificial
    assert np.sum(price * res.recipe.artificial) <= np.sum(price * base) + 1e-9


def test_optimum_not_above_baseline_objective():
    price, solar = day(7, 0.0)
    bounds = PhysiologyBounds(dli_target=dli(baseline_recipe()))
    res = run_day(price, solar, price, solar, bounds=bounds)
    final = assemble_problem(25, price, solar, [], [], res.schedule.u, res.schedule.x,
                             bounds=bounds)
    base = baseline_recipe().artificial
    assert res.final.objective <= objective_value(final, (base > 0).astype(int), base) + 1e-9


def test_forecast_miss_triggers_deficit_repair():
    price, _ = day(8, 0.0)
    # forecast promises strong sun all day, reality is dark: the lights were
    # planned off and the target becomes unreachable late in the day
    sunny = np.full(24, 700.0)
    res = run_day(price, sunny, price, np.zeros(24))
    assert res.repairs
    assert res.dli_deficit >= 0.0
    assert res.recipe.values.max() <= 880.0 + 1e-6


def test_unreachable_small_remainder_is_rounded_up():
    # a dark day and a target of 100 umol h: one lit hour must give at least 130
    price, _ = day(10, 0.0)
    bounds = PhysiologyBounds(dli_target=100 * 3.6e-3)
    res = run_day(price, np.zeros(24), price, np.zeros(24), bounds=bounds)
    assert res.repairs and "gap" in res.repairs[0]
    assert res.recipe.artificial.sum() == pytest.approx(130.0)
    assert res.dli_deficit == 0.0


def test_diagnostics_csv(tmp_path):
    price, solar = day(9, 200.0)
    res = run_day(price, solar, price, solar)
    write_diagnostics_csv(res.steps, tmp_path / "d.csv")
    rows = (tmp_path / "d.csv").read_text().splitlines()
    assert len(rows) == 25

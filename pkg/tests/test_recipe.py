import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greenmpc.recipe import (LightingRecipe, PhysiologyBounds, baseline_recipe, dli,
                             generate_trial_recipes, read_recipe_csv, tdld, validate, value_at,
                             write_recipe_csv)

BOUNDS = PhysiologyBounds()


def block(ppfd, hours, start=6):
    mask = np.zeros(24, dtype=bool)
    mask[(start + np.arange(hours)) % 24] = True
    return LightingRecipe.constant(ppfd, mask)


def test_baseline_dli_and_tdld():
    r = baseline_recipe()
    assert dli(r) == pytest.approx(15.0336, rel=1e-12)
    assert round(dli(r), 2) == 15.03
    assert tdld(r) == 12


def test_zero_recipe():
    r = LightingRecipe(np.zeros(24))
    assert dli(r) == 0.0
    assert tdld(r) == 0


def test_fifteen_hours_at_240():
    assert dli(block(240, 15)) == pytest.approx(12.96, rel=1e-12)
    assert tdld(block(400, 9)) == 9


def test_value_at_right_open():
    r = baseline_recipe()
    assert value_at(r, 6.5) == 348
    assert value_at(r, 3.0) == 0
    assert value_at(r, 6.0) == 348  # boundary belongs to the next interval
    assert value_at(r, 18.0) == 0
    assert value_at(r, 17.999) == 348
    with pytest.raises(ValueError):
        value_at(r, 24.0)
    with pytest.raises(ValueError):
        value_at(r, -0.5)


def test_value_at_half_hour_grid():
    r = LightingRecipe(np.arange(48, dtype=float), interval_hours=0.5)
    assert value_at(r, 1.0) == 2.0
    assert value_at(r, 23.75) == 47.0


def test_validate_trial_recipe_ok():
    assert validate(block(300, 12), BOUNDS) == []


def test_validate_low_ppfd_index():
    vals = np.where(np.arange(24) < 12, 300.0, 0.0)
    vals[4] = 100.0
    problems = validate(LightingRecipe(vals), BOUNDS)
    ranges = [v for v in problems if v.constraint == "ppfd_range"]
    assert [v.index for v in ranges] == [4]


def test_validate_dark_recipe_dli():
    problems = validate(LightingRecipe(np.zeros(24)), BOUNDS)
    assert [v.constraint for v in problems] == ["dli"]


def test_validate_above_max():
    vals = np.zeros(24)
    vals[0] = 900.0
    assert "ppfd_range" in {v.constraint for v in validate(LightingRecipe(vals), BOUNDS)}


def test_run_lengths_only_when_enforced():
    r = block(150, 24)
    assert validate(r, BOUNDS) == []
    strict = PhysiologyBounds(light_interval_max=16, enforce_max_intervals=True)
    assert [v.constraint for v in validate(r, strict)] == ["light_run"]


def test_dark_run_wraps_midnight():
    # lit 10:00-16:00, so the dark run 16:00 -> 10:00 spans 18 h across midnight
    r = block(540, 6, start=10)
    bounds = PhysiologyBounds(dark_interval_max=17, enforce_max_intervals=True)
    runs = [v for v in validate(r, bounds) if v.constraint == "dark_run"]
    assert len(runs) == 1 and runs[0].index == 16


def test_trial_recipes():
    out = generate_trial_recipes(BOUNDS, [12, 15, 9, 24, 2])
    ppfd = {t.tdld: t.ppfd for t in out}
    assert ppfd[12] == pytest.approx(300, rel=1e-12)
    assert ppfd[15] == pytest.approx(240, rel=1e-12)
    assert ppfd[9] == pytest.approx(400, rel=1e-12)
    assert ppfd[24] == pytest.approx(150, rel=1e-12)
    bad = out[-1]
    assert not bad.ok and "1800" in bad.error
    for t in out[:-1]:
        assert t.ok and validate(t.recipe, BOUNDS) == []
        assert tdld(t.recipe) == t.tdld


def test_trial_pattern_mismatch_is_reported():
    mask = np.zeros(24, dtype=bool)
    mask[:10] = True
    out = generate_trial_recipes(BOUNDS, [9], patterns={9: mask})
    assert not out[0].ok


def test_recipe_rejects_bad_shapes():
    with pytest.raises(ValueError):
        LightingRecipe(np.zeros(23))
    with pytest.raises(ValueError):
        LightingRecipe(np.full(24, -1.0))
    with pytest.raises(ValueError):
        LightingRecipe(np.zeros(24), np.zeros(12))


def test_recipe_is_immutable():
    r = baseline_recipe()
    with pytest.raises(ValueError):
        r.artificial[0] = 1.0


def test_csv_round_trip(tmp_path):
    r = LightingRecipe(np.linspace(0, 500, 24), np.linspace(300, 0, 24))
    p = tmp_path / "r.csv"
    write_recipe_csv(r, p)
    back = read_recipe_csv(p)
    assert np.array_equal(back.artificial, r.artificial)
    assert np.array_equal(back.solar, r.solar)
    assert p.read_text().splitlines()[0] == "hour_index,ppfd_total,ppfd_artificial,ppfd_solar"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 880), min_size=24, max_size=24), st.floats(0, 5))
def test_dli_is_linear(vals, a):
    r = LightingRecipe(vals)
    assert dli(r.scaled(a)) == pytest.approx(a * dli(r), rel=1e-12, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1000), min_size=24, max_size=24),
       st.floats(1, 200), st.floats(0, 200), st.floats(0, 200))
def test_widening_bounds_never_adds_violations(vals, lo, shrink, grow):
    narrow = PhysiologyBounds(ppfd_min=lo + shrink, ppfd_max=lo + shrink + 600)
    wide = PhysiologyBounds(ppfd_min=lo, ppfd_max=lo + shrink + 600 + grow)
    r = LightingRecipe(vals)
    key = lambda v: (v.constraint, v.index)  # noqa: E731
    assert {key(v) for v in validate(r, wide)} <= {key(v) for v in validate(r, narrow)}


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 24))
def test_trial_round_trip(t):
    b = PhysiologyBounds(ppfd_min=50.0)
    out = generate_trial_recipes(b, [t])[0]
    if out.ok:
        assert dli(out.recipe) == pytest.approx(b.dli_target, rel=1e-9)
        assert tdld(out.recipe) <= 24

"""24-hour lighting recipes: DLI/TDLD arithmetic, physiology checks, trial design.

A recipe is a piecewise-constant PPFD trajectory over ``N`` equal intervals
covering one day. Interval ``n`` spans ``[n*I, (n+1)*I)`` hours.
"""
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# mol per (umol m-2 s-1 * h)
DLI_PER_UMOL_HOUR = 3600e-6
DLI_TOL = 1e-6
LIT_THRESHOLD = 1e-9
HOURS_PER_DAY = 24.0

CSV_COLUMNS = ("hour_index", "ppfd_total", "ppfd_artificial", "ppfd_solar")


def _frozen(values):
    arr = np.array(values, dtype=np.float64).ravel()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class LightingRecipe:
    """Artificial and solar PPFD samples (umol m-2 s-1) on a daily grid."""

    artificial: np.ndarray
    solar: np.ndarray = None
    interval_hours: float = 1.0

    def __post_init__(self):
        art = np.array(self.artificial, dtype=np.float64).ravel()
        sol = np.zeros_like(art) if self.solar is None else np.array(self.solar, dtype=np.float64).ravel()
        if art.shape != sol.shape:
            raise ValueError("artificial and solar must have the same length")
        if self.interval_hours <= 0:
            raise ValueError("interval_hours must be positive")
        if abs(art.size * self.interval_hours - HOURS_PER_DAY) > 1e-9:
            raise ValueError(
                f"{art.size} intervals of {self.interval_hours} h do not cover 24 h")
        for name, arr in (("artificial", art), ("solar", sol)):
            if np.any(~np.isfinite(arr)) or np.any(arr < -1e-9):
                raise ValueError(f"{name} PPFD must be finite and non-negative")
        object.__setattr__(self, "artificial", _frozen(np.maximum(art, 0.0)))
        object.__setattr__(self, "solar", _frozen(np.maximum(sol, 0.0)))
        object.__setattr__(self, "interval_hours", float(self.interval_hours))

    @property
    def values(self):
        """Total PPFD ``artificial + solar`` per interval."""
        return self.artificial + self.solar

    @property
    def n_intervals(self):
        return self.artificial.size

    def scaled(self, factor):
        if factor < 0:
            raise ValueError("factor must be non-negative")
        return LightingRecipe(self.artificial * factor, self.solar * factor, self.interval_hours)

    @classmethod
    def constant(cls, ppfd, on_mask, interval_hours=1.0):
        mask = np.asarray(on_mask, dtype=bool)
        return cls(np.where(mask, float(ppfd), 0.0), interval_hours=interval_hours)


@dataclass(frozen=True)
class PhysiologyBounds:
    """Plant limits on light intensity, daily integral and light/dark runs.

    Interval bounds are in hours. Defaults are the lettuce trial settings:
    PPFD 130-880, DLI 12.96, light runs 1-24 h, dark runs 1-18 h.
    """

    ppfd_min: float = 130.0
    ppfd_max: float = 880.0
    dli_target: float = 12.96
    light_interval_min: float = 1.0
    light_interval_max: float = 24.0
    dark_interval_min: float = 1.0
    dark_interval_max: float = 18.0
    enforce_max_intervals: bool = False

    def __post_init__(self):
        if not 0 < self.ppfd_min < self.ppfd_max:
            raise ValueError("require 0 < ppfd_min < ppfd_max")
        if self.dli_target <= 0:
            raise ValueError("dli_target must be positive")
        if self.light_interval_min > self.light_interval_max:
            raise ValueError("light_interval_min exceeds light_interval_max")
        if self.dark_interval_min > self.dark_interval_max:
            raise ValueError("dark_interval_min exceeds dark_interval_max")

    @property
    def min_interval(self):
        return max(self.light_interval_min, self.dark_interval_min)

    def required_ppfd(self, tdld_hours):
        """Constant PPFD that meets ``dli_target`` over ``tdld_hours`` of light."""
        return self.dli_target / (DLI_PER_UMOL_HOUR * tdld_hours)


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: int
    detail: str


def dli(recipe):
    """Daily light integral in mol m-2 day-1."""
    return float(np.sum(recipe.values) * DLI_PER_UMOL_HOUR * recipe.interval_hours)


def tdld(recipe):
    """Total daily light duration in hours."""
    return recipe.interval_hours * int(np.count_nonzero(recipe.values > LIT_THRESHOLD))


def value_at(recipe, t):
    """PPFD at time ``t`` hours; intervals are right-open."""
    if not 0.0 <= t < HOURS_PER_DAY:
        raise ValueError(f"t={t} outside [0, 24)")
    idx = min(int(np.floor(t / recipe.interval_hours)), recipe.n_intervals - 1)
    return float(recipe.values[idx])


def _cyclic_runs(flags):
    """Return ``(start, length, value)`` for maximal runs, joining across midnight."""
    n = flags.size
    if np.all(flags == flags[0]):
        return [(0, n, bool(flags[0]))]
    # rotate so index 0 starts a run
    first = int(np.nonzero(flags != flags[-1])[0][0])
    rolled = np.roll(flags, -first)
    runs = []
    start = 0
    for i in range(1, n + 1):
        if i == n or rolled[i] != rolled[start]:
            runs.append(((start + first) % n, i - start, bool(rolled[start])))
            start = i
    return runs


def validate(recipe, bounds, dli_tol=DLI_TOL):
    """List every physiology violation of ``recipe``; empty means valid."""
    out = []
    vals = recipe.values
    for n, r in enumerate(vals):
        if r > bounds.ppfd_max + 1e-9:
            out.append(Violation("ppfd_range", n, f"PPFD {r:.6g} above max {bounds.ppfd_max:g}"))
        elif r > LIT_THRESHOLD and r < bounds.ppfd_min - 1e-9:
            out.append(Violation("ppfd_range", n, f"PPFD {r:.6g} below min {bounds.ppfd_min:g}"))
    d = dli(recipe)
    if abs(d - bounds.dli_target) > dli_tol:
        out.append(Violation("dli", -1, f"DLI {d:.9g} != target {bounds.dli_target:g}"))
    if recipe.interval_hours < bounds.min_interval - 1e-12:
        out.append(Violation("interval_length", -1,
                             f"interval {recipe.interval_hours:g} h shorter than {bounds.min_interval:g} h"))
    if bounds.enforce_max_intervals:
        for start, length, lit in _cyclic_runs(vals > LIT_THRESHOLD):
            hours = length * recipe.interval_hours
            if lit and hours > bounds.light_interval_max + 1e-9:
                out.append(Violation("light_run", start,
                                     f"{hours:g} h lit run exceeds {bounds.light_interval_max:g} h"))
            if not lit and hours > bounds.dark_interval_max + 1e-9:
                out.append(Violation("dark_run", start,
                                     f"{hours:g} h dark run exceeds {bounds.dark_interval_max:g} h"))
    return out


@dataclass(frozen=True)
class TrialRecipe:
    """Outcome of designing one trial; ``recipe`` is None when infeasible."""

    tdld: float
    ppfd: float
    recipe: LightingRecipe = None
    error: str = None

    @property
    def ok(self):
        return self.recipe is not None


def default_pattern(tdld_hours, interval_hours=1.0, start_hour=6.0):
    """Contiguous block of light beginning at ``start_hour`` (wrapping midnight)."""
    n = int(round(HOURS_PER_DAY / interval_hours))
    k = int(round(tdld_hours / interval_hours))
    first = int(round(start_hour / interval_hours))
    mask = np.zeros(n, dtype=bool)
    mask[(first + np.arange(k)) % n] = True
    return mask


def generate_trial_recipes(bounds, tdld_choices, patterns=None, interval_hours=1.0):
    """Design constant-PPFD trial recipes holding ``bounds.dli_target``.

    ``patterns`` maps a TDLD (hours) to an on/off mask; missing entries use a
    contiguous block starting at 06:00.
    """
    patterns = patterns or {}
    out = []
    for t in tdld_choices:
        ppfd = bounds.required_ppfd(t) if t > 0 else np.inf
        if not bounds.ppfd_min <= ppfd <= bounds.ppfd_max:
            out.append(TrialRecipe(t, ppfd, None,
                                   f"TDLD {t:g} h needs PPFD {ppfd:.6g}, outside "
                                   f"[{bounds.ppfd_min:g}, {bounds.ppfd_max:g}]"))
            continue
        mask = patterns.get(t)
        if mask is None:
            mask = default_pattern(t, interval_hours)
        mask = np.asarray(mask, dtype=bool)
        if abs(mask.sum() * interval_hours - t) > 1e-9:
            out.append(TrialRecipe(t, ppfd, None,
                                   f"pattern has {mask.sum() * interval_hours:g} lit hours, expected {t:g}"))
            continue
        recipe = LightingRecipe.constant(ppfd, mask, interval_hours)
        problems = validate(recipe, bounds)
        if problems:
            out.append(TrialRecipe(t, ppfd, None, "; ".join(v.detail for v in problems)))
            continue
        out.append(TrialRecipe(t, ppfd, recipe))
    return out


BASELINE_PPFD = 348.0
BASELINE_START = 6
BASELINE_END = 18


def baseline_recipe(ppfd=BASELINE_PPFD, start=BASELINE_START, end=BASELINE_END):
    """Fixed-intensity reference recipe, lights on ``[start, end)``."""
    mask = np.zeros(24, dtype=bool)
    mask[start:end] = True
    return LightingRecipe.constant(ppfd, mask)


def write_recipe_csv(recipe, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for n in range(recipe.n_intervals):
            w.writerow([n, repr(float(recipe.values[n])), repr(float(recipe.artificial[n])),
                        repr(float(recipe.solar[n]))])


def read_recipe_csv(path, interval_hours=None):
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or tuple(rows[0].keys()) != CSV_COLUMNS:
        raise ValueError(f"{path}: expected columns {', '.join(CSV_COLUMNS)}")
    rows.sort(key=lambda r: int(r["hour_index"]))
    art = [float(r["ppfd_artificial"]) for r in rows]
    sol = [float(r["ppfd_solar"]) for r in rows]
    for i, r in enumerate(rows):
        if abs(float(r["ppfd_total"]) - art[i] - sol[i]) > 1e-6:
            raise ValueError(f"{path}: row {i + 2} total != artificial + solar")
    ih = interval_hours if interval_hours is not None else HOURS_PER_DAY / len(rows)
    return LightingRecipe(art, sol, ih)

"""Lighting-program instances at one receding-horizon step."""
from dataclasses import dataclass, field, replace

import numpy as np

from ..recipe import DLI_PER_UMOL_HOUR, PhysiologyBounds
from .qp import MODE_OFF, MODE_ON, MODE_RELAXED, FEAS_TOL, hour_ranges

SUN_THRESHOLD = 1.0


class MpcError(Exception):
    pass


class MpcInfeasibleError(MpcError):
    def __init__(self, report):
        super().__init__(report.describe())
        self.report = report


@dataclass(frozen=True)
class MpcWeights:
    """Objective weights: price cost, smoothness (squared PPFD), peak PPFD."""

    alpha: float = 1.0
    beta: float = 1e-4
    gamma: float = 0.05

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("MPC weights must be non-negative")


@dataclass(frozen=True)
class MpcProblem:
    """Program at step ``step`` (1-based); hours before it are committed.

    ``prices`` ($/kWh) and ``solar`` (available solar PPFD) already splice
    actuals for past hours with forecasts for the rest. ``step = N + 1``
    leaves only the shading to choose. ``floor_exempt`` lists 0-based hours
    where the sunlit floor ``r >= L v`` is waived (repair of committed hours
    whose actual sun came in too weak).
    """

    step: int
    prices: np.ndarray
    solar: np.ndarray
    committed_u: np.ndarray
    committed_x: np.ndarray
    bounds: PhysiologyBounds = field(default_factory=PhysiologyBounds)
    weights: MpcWeights = field(default_factory=MpcWeights)
    sun_threshold: float = SUN_THRESHOLD
    solar_floor: bool = True
    dli_target: float = None
    floor_exempt: tuple = ()

    def __post_init__(self):
        p = np.array(self.prices, dtype=float).ravel()
        y = np.array(self.solar, dtype=float).ravel()
        cu = np.array(self.committed_u, dtype=np.int64).ravel()
        cx = np.array(self.committed_x, dtype=float).ravel()
        if p.shape != y.shape:
            raise ValueError("prices and solar must have equal length")
        if not 1 <= self.step <= p.size + 1:
            raise ValueError(f"step {self.step} outside 1..{p.size + 1}")
        if cu.size != self.step - 1 or cx.size != self.step - 1:
            raise ValueError("committed prefix must cover hours before the step")
        if np.any(~np.isfinite(p)) or np.any(~np.isfinite(y)):
            raise ValueError("prices and solar must be finite")
        if np.any((cu != 0) & (cu != 1)):
            raise ValueError("committed u must be binary")
        for name, arr in (("prices", p), ("solar", y), ("committed_u", cu), ("committed_x", cx)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.dli_target is None:
            object.__setattr__(self, "dli_target", self.bounds.dli_target)
        object.__setattr__(self, "floor_exempt",
                           tuple(sorted(int(n) for n in set(self.floor_exempt))))

    @property
    def n_intervals(self):
        return self.prices.size

    @property
    def n_free(self):
        return self.n_intervals - self.step + 1

    @property
    def sunlit(self):
        """Sunlight indicator; weather data, not a decision."""
        return (self.solar > self.sun_threshold).astype(np.int64)

    @property
    def floor(self):
        """Per-hour lower bound on total PPFD from the sunlit floor."""
        if not self.solar_floor:
            return np.zeros(self.n_intervals)
        f = self.bounds.ppfd_min * self.sunlit.astype(float)
        f[list(self.floor_exempt)] = 0.0
        return f

    @property
    def committed_ra(self):
        return self.committed_u * self.committed_x

    @property
    def light_sum_target(self):
        """Required sum of hourly PPFD (umol m-2 s-1 h)."""
        return self.dli_target / DLI_PER_UMOL_HOUR

    def with_dli_target(self, dli_target):
        return replace(self, dli_target=float(dli_target))

    def with_floor_exempt(self, hours):
        return replace(self, floor_exempt=tuple(self.floor_exempt) + tuple(hours))

    def to_dict(self):
        return {
            "step": self.step,
            "prices": self.prices.tolist(),
            "solar": self.solar.tolist(),
            "committed_u": self.committed_u.tolist(),
            "committed_x": self.committed_x.tolist(),
            "bounds": {k: getattr(self.bounds, k) for k in self.bounds.__dataclass_fields__},
            "weights": {"alpha": self.weights.alpha, "beta": self.weights.beta,
                        "gamma": self.weights.gamma},
            "sun_threshold": self.sun_threshold,
            "solar_floor": self.solar_floor,
            "dli_target": self.dli_target,
            "floor_exempt": list(self.floor_exempt),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(step=d["step"], prices=d["prices"], solar=d["solar"],
                   committed_u=d["committed_u"], committed_x=d["committed_x"],
                   bounds=PhysiologyBounds(**d["bounds"]), weights=MpcWeights(**d["weights"]),
                   sun_threshold=d.get("sun_threshold", SUN_THRESHOLD),
                   solar_floor=d.get("solar_floor", True), dli_target=d.get("dli_target"),
                   floor_exempt=tuple(d.get("floor_exempt", ())))


@dataclass
class NodeData:
    """Hourly arrays fed to the node QP for one on/off assignment."""

    mode: np.ndarray
    q: np.ndarray
    s_hi: np.ndarray
    r_lo: np.ndarray
    r_hi: np.ndarray
    total: float
    m_lo: float
    const: float


def node_data(problem, ustate):
    """Build QP inputs; ``ustate`` over free hours holds -1 (relaxed), 0 or 1."""
    b = problem.bounds
    w = problem.weights
    N = problem.n_intervals
    k0 = problem.step - 1
    ustate = np.asarray(ustate, dtype=np.int64)
    mode = np.full(N, MODE_OFF, dtype=np.int64)
    mode[k0:] = np.where(ustate < 0, MODE_RELAXED, np.where(ustate > 0, MODE_ON, MODE_OFF))
    c = np.zeros(N)
    c[:k0] = problem.committed_ra
    v = problem.sunlit
    s_hi = np.where(v > 0, problem.solar, 0.0)
    floor = problem.floor
    q = np.zeros(N)
    q[k0:] = w.alpha * problem.prices[k0:]
    pc = problem.prices[:k0]
    ca = c[:k0]
    const = float(np.sum(w.alpha * pc * ca + w.beta * ca * ca))
    r_lo = floor - c
    r_hi = b.ppfd_max - c
    total = problem.light_sum_target - float(np.sum(c))
    m_lo = max(0.0, float(np.max(ca, initial=0.0)))
    # any lit hour puts the peak at L or more; so does a target that dark
    # hours alone cannot reach
    if np.any(mode == MODE_ON):
        m_lo = max(m_lo, b.ppfd_min)
    else:
        dark = np.where(mode == MODE_RELAXED, MODE_OFF, mode)
        lo, hi = hour_ranges(dark, s_hi, r_lo, r_hi, b.ppfd_min, b.ppfd_max)
        if np.any(lo > hi + FEAS_TOL) or np.sum(hi) < total - FEAS_TOL * max(1.0, abs(total)):
            if np.any(mode == MODE_RELAXED):
                m_lo = max(m_lo, b.ppfd_min)
    return NodeData(mode=mode, q=q, s_hi=s_hi, r_lo=r_lo, r_hi=r_hi, total=total,
                    m_lo=m_lo, const=const)


def forced_state(problem):
    """Free-hour states implied by single-hour feasibility: -1 open, 0 off, 1 on."""
    k0 = problem.step - 1
    nd = node_data(problem, -np.ones(problem.n_free, dtype=np.int64))
    b = problem.bounds
    lo0, hi0 = hour_ranges(np.full(nd.mode.size, MODE_OFF), nd.s_hi, nd.r_lo, nd.r_hi,
                           b.ppfd_min, b.ppfd_max)
    lo1, hi1 = hour_ranges(np.full(nd.mode.size, MODE_ON), nd.s_hi, nd.r_lo, nd.r_hi,
                           b.ppfd_min, b.ppfd_max)
    off_ok = (lo0 <= hi0 + FEAS_TOL)[k0:]
    on_ok = (lo1 <= hi1 + FEAS_TOL)[k0:]
    state = -np.ones(problem.n_free, dtype=np.int64)
    state[off_ok & ~on_ok] = 0
    state[on_ok & ~off_ok] = 1
    return state


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    max_dli: float
    min_dli: float
    target_dli: float
    bad_hours: tuple = ()
    gap: tuple = ()

    @property
    def deficit(self):
        """DLI shortfall when even full power cannot reach the target."""
        return max(0.0, self.target_dli - self.max_dli)

    @property
    def excess(self):
        """DLI forced above the target by committed light and the solar floor."""
        return max(0.0, self.min_dli - self.target_dli)

    def describe(self):
        if self.feasible:
            return "feasible"
        parts = []
        if self.bad_hours:
            parts.append(f"no admissible PPFD in hours {list(self.bad_hours)} (PPFD range / solar floor)")
        if self.deficit > 0:
            parts.append(f"DLI target {self.target_dli:.6g} exceeds achievable {self.max_dli:.6g} "
                         f"(deficit {self.deficit:.6g}; PPFD max / DLI equality)")
        if self.excess > 0:
            parts.append(f"forced DLI {self.min_dli:.6g} exceeds target {self.target_dli:.6g} "
                         f"(excess {self.excess:.6g}; solar floor / DLI equality)")
        if self.gap:
            parts.append(f"DLI target {self.target_dli:.6g} falls between achievable DLIs "
                         f"{self.gap[0]:.6g} and {self.gap[1]:.6g} (PPFD min on lit hours / "
                         f"DLI equality)")
        return "infeasible: " + "; ".join(parts)


def feasibility_of(problem, nd):
    """Feasibility of the node described by ``nd`` (relaxed hours use their hull)."""
    lo, hi = hour_ranges(nd.mode, nd.s_hi, nd.r_lo, nd.r_hi, problem.bounds.ppfd_min,
                         problem.bounds.ppfd_max)
    bad = tuple(int(n) + 1 for n in np.nonzero(lo > hi + FEAS_TOL)[0])
    committed = float(np.sum(problem.committed_ra))
    if bad:
        lo_sum, hi_sum = np.inf, -np.inf
    else:
        lo_sum, hi_sum = float(np.sum(lo)), float(np.sum(hi))
    max_dli = (hi_sum + committed) * DLI_PER_UMOL_HOUR
    min_dli = (lo_sum + committed) * DLI_PER_UMOL_HOUR
    tol = FEAS_TOL * max(1.0, abs(nd.total))
    ok = not bad and lo_sum <= nd.total + tol and nd.total <= hi_sum + tol
    return FeasibilityReport(ok, max_dli, min_dli, problem.dli_target, bad)


def _merge_intervals(intervals, tol):
    intervals.sort()
    out = [list(intervals[0])]
    for a, b in intervals[1:]:
        if a <= out[-1][1] + tol:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return out


def achievable_totals(problem):
    """Merged intervals of hourly light sums (umol m-2 s-1 h) reachable by on/off choices.

    Committed light is included. Lit hours need at least PPFD min, so the set
    can have gaps that the relaxed hull hides (two dark hours reach 0 or
    >= 130, nothing in between). Empty when some hour admits no PPFD at all.
    """
    b = problem.bounds
    N = problem.n_intervals
    k0 = problem.step - 1
    nd = node_data(problem, -np.ones(problem.n_free, dtype=np.int64))
    off_lo, off_hi = hour_ranges(np.full(N, MODE_OFF), nd.s_hi, nd.r_lo, nd.r_hi,
                                 b.ppfd_min, b.ppfd_max)
    on_lo, on_hi = hour_ranges(np.full(N, MODE_ON), nd.s_hi, nd.r_lo, nd.r_hi,
                               b.ppfd_min, b.ppfd_max)
    tol = FEAS_TOL * max(1.0, problem.light_sum_target)
    acc = [[float(np.sum(problem.committed_ra))] * 2]
    for n in range(N):
        opts = []
        if off_lo[n] <= off_hi[n] + FEAS_TOL:
            opts.append((off_lo[n], max(off_lo[n], off_hi[n])))
        if n >= k0 and on_lo[n] <= on_hi[n] + FEAS_TOL:
            opts.append((on_lo[n], max(on_lo[n], on_hi[n])))
        if not opts:
            return []
        acc = _merge_intervals([(a + lo, c + hi) for a, c in acc for lo, hi in opts], tol)
    return [(float(a), float(c)) for a, c in acc]


def feasibility_check(problem):
    """Check the program admits a solution for some on/off choice of the free hours.

    The relaxed hull gives the deficit/excess diagnosis; a target inside the
    hull but between two achievable light sums is reported as a gap.
    """
    nd = node_data(problem, -np.ones(problem.n_free, dtype=np.int64))
    report = feasibility_of(problem, nd)
    if not report.feasible:
        return report
    target = problem.light_sum_target
    tol = FEAS_TOL * max(1.0, target)
    spans = achievable_totals(problem)
    if any(a - tol <= target <= c + tol for a, c in spans):
        return report
    below = max((c for a, c in spans if c < target), default=None)
    above = min(a for a, c in spans if a > target)
    lo = below * DLI_PER_UMOL_HOUR if below is not None else report.min_dli
    return replace(report, feasible=False, gap=(lo, above * DLI_PER_UMOL_HOUR))


def pattern_feasible(problem, pattern):
    nd = node_data(problem, pattern)
    return feasibility_of(problem, nd).feasible, nd


def assemble_problem(step, actual_prices, actual_solar, price_forecast, solar_forecast,
                     committed_u, committed_x, bounds=None, weights=None, horizon=24,
                     **kwargs):
    """Splice actuals (hours before ``step``) with forecasts (the rest).

    Forecast vectors may span the full horizon or only hours ``step..horizon``.
    """
    k0 = step - 1
    ap = np.asarray(actual_prices, dtype=float).ravel()
    ay = np.asarray(actual_solar, dtype=float).ravel()
    if ap.size < k0 or ay.size < k0:
        raise MpcError(f"actuals cover {min(ap.size, ay.size)} hours, step {step} needs {k0}")

    def tail(f, name):
        f = np.asarray(f, dtype=float).ravel()
        if f.size == horizon:
            f = f[k0:]
        elif f.size != horizon - k0:
            raise MpcError(f"{name} forecast has {f.size} values; expected {horizon} "
                           f"or {horizon - k0}")
        if np.any(~np.isfinite(f)):
            raise MpcError(f"missing {name} forecast values from step {step}")
        return f

    prices = np.concatenate([ap[:k0], tail(price_forecast, "price")])
    solar = np.concatenate([ay[:k0], tail(solar_forecast, "solar")])
    return MpcProblem(step=step, prices=prices, solar=solar,
                      committed_u=np.asarray(committed_u)[:k0],
                      committed_x=np.asarray(committed_x)[:k0],
                      bounds=bounds or PhysiologyBounds(), weights=weights or MpcWeights(),
                      **kwargs)

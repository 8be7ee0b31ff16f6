"""Hour-by-hour receding-horizon loop: assemble, solve, commit one hour, repeat."""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..recipe import DLI_PER_UMOL_HOUR, LightingRecipe, PhysiologyBounds
from .bnb import NODE_LIMIT, solve
from .problem import MpcError, MpcWeights, assemble_problem, feasibility_check

log = logging.getLogger(__name__)

DIAG_COLUMNS = ("step", "objective", "gap", "nodes", "dli_committed", "peak_ra")


class CommitError(MpcError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Committed ``(u, x)`` per hour, in order. Never rewritten."""

    horizon: int = 24
    u: tuple = ()
    x: tuple = ()

    @property
    def n_committed(self):
        return len(self.u)

    @property
    def complete(self):
        return self.n_committed == self.horizon

    @property
    def r_a(self):
        return np.array(self.u, dtype=float) * np.array(self.x, dtype=float)


def commit(solution, step, schedule):
    """Append hour ``step`` of ``solution`` to ``schedule``; returns a new Schedule."""
    if step <= schedule.n_committed:
        raise CommitError(f"hour {step} is already committed")
    if step != schedule.n_committed + 1:
        raise CommitError(f"cannot commit hour {step}; next open hour is {schedule.n_committed + 1}")
    if step > schedule.horizon:
        raise CommitError(f"hour {step} outside horizon {schedule.horizon}")
    if solution.step != step:
        raise CommitError(f"solution was solved at step {solution.step}, not {step}")
    n = step - 1
    u = int(solution.u[n])
    x = float(solution.x[n]) if u else 0.0
    return Schedule(schedule.horizon, schedule.u + (u,), schedule.x + (x,))


@dataclass
class StepDiagnostics:
    step: int
    objective: float
    gap: float
    nodes: int
    dli_committed: float
    peak_ra: float
    price_error: float = 0.0
    solar_error: float = 0.0
    qp_solves: int = 0
    status: str = "optimal"

    def row(self):
        return [self.step, repr(self.objective), repr(self.gap), self.nodes,
                repr(self.dli_committed), repr(self.peak_ra)]


@dataclass
class DayResult:
    schedule: Schedule
    recipe: LightingRecipe
    steps: list
    plan: object = None
    final: object = None
    repairs: list = field(default_factory=list)
    dli_deficit: float = 0.0
    final_problem: object = None

    @property
    def objective(self):
        return self.final.objective


def write_diagnostics_csv(steps, path):
    with Path(path).open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(DIAG_COLUMNS)
        for s in steps:
            wr.writerow(s.row())


def _repair(problem, repairs):
    """Make ``problem`` solvable by the documented relaxations, logging each."""
    report = feasibility_check(problem)
    if report.feasible:
        return problem
    k0 = problem.step - 1
    bad = [n - 1 for n in report.bad_hours if n - 1 < k0]
    if bad:
        # a committed dark hour whose actual sun fell short of the floor
        msg = f"step {problem.step}: sunlit floor waived in committed hours {[n + 1 for n in bad]}"
        log.warning(msg)
        repairs.append(msg)
        problem = problem.with_floor_exempt(bad)
        report = feasibility_check(problem)
        if report.feasible:
            return problem
    if report.bad_hours:
        raise MpcError(f"step {problem.step}: {report.describe()}")
    if report.deficit > 0:
        target = report.max_dli
        msg = (f"step {problem.step}: DLI target {problem.dli_target:.6g} unreachable, "
               f"relaxed to {target:.6g} (deficit {report.deficit:.6g})")
    elif report.excess > 0:
        target = report.min_dli
        msg = (f"step {problem.step}: forced DLI {target:.6g} exceeds target "
               f"{problem.dli_target:.6g} (excess {report.excess:.6g})")
    else:
        # target between achievable sums: round up to the nearest reachable DLI
        target = report.gap[1]
        msg = (f"step {problem.step}: DLI target {problem.dli_target:.6g} falls in a gap of "
               f"reachable DLIs, raised to {target:.6g}")
    log.warning(msg)
    repairs.append(msg)
    return problem.with_dli_target(target)


def _as_provider(fc):
    if callable(fc):
        return fc
    arr = np.asarray(fc, dtype=float)
    return lambda step: arr


def run_day(price_forecasts, solar_forecasts, actual_prices, actual_solar, bounds=None,
            weights=None, horizon=24, node_limit=NODE_LIMIT, **problem_kwargs):
    """Generate one day's lighting schedule by receding-horizon MPC.

    ``price_forecasts``/``solar_forecasts`` are either fixed arrays or callables
    ``step -> array`` (full horizon or hours ``step..horizon``). Actual values
    for hour ``n`` are revealed once step ``n + 1`` begins. After the last
    commit the shading is re-solved on the actual solar, which yields the
    delivered recipe.
    """
    bounds = bounds or PhysiologyBounds()
    weights = weights or MpcWeights()
    ap = np.asarray(actual_prices, dtype=float)
    ay = np.asarray(actual_solar, dtype=float)
    if ap.size != horizon or ay.size != horizon:
        raise MpcError(f"actuals must cover {horizon} hours")
    pf = _as_provider(price_forecasts)
    sf = _as_provider(solar_forecasts)
    sched = Schedule(horizon)
    steps = []
    repairs = []
    plan = None
    exempt = ()
    target = bounds.dli_target
    for i in range(1, horizon + 1):
        pfc = np.asarray(pf(i), dtype=float)
        sfc = np.asarray(sf(i), dtype=float)
        prob = assemble_problem(i, ap[:i - 1], ay[:i - 1], pfc, sfc, np.array(sched.u, dtype=np.int64),
                                np.array(sched.x), bounds=bounds, weights=weights,
                                horizon=horizon, floor_exempt=exempt, dli_target=target,
                                **problem_kwargs)
        prob = _repair(prob, repairs)
        exempt = prob.floor_exempt
        sol = solve(prob, node_limit=node_limit)
        if i == 1:
            plan = sol
        sched = commit(sol, i, sched)
        k = i - 1
        f_p = pfc[k] if pfc.size == horizon else pfc[0]
        f_s = sfc[k] if sfc.size == horizon else sfc[0]
        steps.append(StepDiagnostics(
            step=i, objective=sol.objective, gap=sol.gap, nodes=sol.nodes,
            dli_committed=float(np.sum(sched.r_a) * DLI_PER_UMOL_HOUR), peak_ra=sol.peak_ra,
            price_error=float(f_p - ap[k]), solar_error=float(f_s - ay[k]),
            qp_solves=sol.qp_solves, status=sol.status))

    final_prob = assemble_problem(horizon + 1, ap, ay, np.empty(0), np.empty(0),
                                  np.array(sched.u, dtype=np.int64), np.array(sched.x),
                                  bounds=bounds, weights=weights, horizon=horizon,
                                  floor_exempt=exempt, dli_target=target, **problem_kwargs)
    final_prob = _repair(final_prob, repairs)
    final = solve(final_prob, node_limit=node_limit)
    recipe = LightingRecipe(final.r_a, final.r_s, 24.0 / horizon)
    deficit = max(0.0, bounds.dli_target - final_prob.dli_target)
    return DayResult(schedule=sched, recipe=recipe, steps=steps, plan=plan, final=final,
                     repairs=repairs, dli_deficit=deficit, final_problem=final_prob)

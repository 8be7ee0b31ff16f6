"""Solver-independent check of a lighting solution against its program.

Works from the raw problem vectors only (no node data, no QP layout) so it can
police the branch-and-bound output.
"""
from dataclasses import dataclass

import numpy as np

from ..recipe import DLI_PER_UMOL_HOUR, DLI_TOL

PPFD_TOL = 1e-6


@dataclass(frozen=True)
class ConstraintViolation:
    constraint: str
    index: int
    detail: str


def verify_solution(problem, solution, dli_tol=DLI_TOL, ppfd_tol=PPFD_TOL):
    """List violated constraints; empty means the solution is admissible.

    Checked: committed prefix is bit-identical, ``u`` binary, lit hours at or
    above PPFD min, sun indicator matches the weather, shading in [0, 1],
    ``r = x u + Y v w``, ``r <= PPFD max``, sunlit floor and the DLI equality.
    """
    out = []
    N = problem.n_intervals
    k0 = problem.step - 1
    b = problem.bounds
    u = np.asarray(solution.u)
    x = np.asarray(solution.x, dtype=float)
    v = np.asarray(solution.v)
    w = np.asarray(solution.w, dtype=float)
    Y = np.asarray(problem.solar, dtype=float)

    for name, arr in (("u", u), ("x", x), ("v", v), ("w", w)):
        if arr.shape != (N,):
            return [ConstraintViolation("shape", -1, f"{name} has shape {arr.shape}, want ({N},)")]

    if not (np.array_equal(u[:k0], problem.committed_u)
            and np.array_equal(x[:k0], problem.committed_x)):
        bad = int(np.nonzero((u[:k0] != problem.committed_u) | (x[:k0] != problem.committed_x))[0][0])
        out.append(ConstraintViolation("committed", bad, "committed hour was rewritten"))

    for n in range(N):
        if u[n] not in (0, 1):
            out.append(ConstraintViolation("u_binary", n, f"u={u[n]!r}"))
        if n >= k0 and u[n] == 1 and x[n] < b.ppfd_min - ppfd_tol:
            out.append(ConstraintViolation("x_min", n, f"lit at x={x[n]:.9g} < {b.ppfd_min:g}"))
        sun = 1 if Y[n] > problem.sun_threshold else 0
        if v[n] != sun:
            out.append(ConstraintViolation("v_weather", n, f"v={v[n]} but Y={Y[n]:.6g}"))
        if not -1e-12 <= w[n] <= 1.0 + 1e-12:
            out.append(ConstraintViolation("w_range", n, f"w={w[n]:.9g}"))

    ra = x * u
    rs = Y * v * w
    r = ra + rs
    for n in range(N):
        if r[n] > b.ppfd_max + ppfd_tol:
            out.append(ConstraintViolation("r_max", n, f"r={r[n]:.9g} > {b.ppfd_max:g}"))
        floor_on = problem.solar_floor and n not in problem.floor_exempt
        if floor_on and r[n] < b.ppfd_min * v[n] - ppfd_tol:
            out.append(ConstraintViolation("sun_floor", n, f"r={r[n]:.9g} < {b.ppfd_min:g} while sunlit"))

    d = float(np.sum(r) * DLI_PER_UMOL_HOUR)
    if abs(d - problem.dli_target) > dli_tol:
        out.append(ConstraintViolation("dli", -1, f"DLI {d:.9g} != target {problem.dli_target:.9g}"))
    return out

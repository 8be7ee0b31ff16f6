"""Branch-and-bound over the on/off indicators, plus an exhaustive oracle.

Ties (objectives within ``TIE_RTOL``) are broken toward the lexicographically
earliest lights-on pattern: compare ``1 - u`` hour by hour, smaller wins.
"""
import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from ..recipe import DLI_PER_UMOL_HOUR
from .problem import (MpcError, MpcInfeasibleError, feasibility_check, feasibility_of,
                      forced_state, node_data, pattern_feasible)
from .qp import polish_hourly_qp, solve_hourly_qp

NODE_LIMIT = 100_000
TIE_RTOL = 1e-9
GAP_RTOL = 1e-6
BRUTE_FORCE_MAX_FREE = 10


@dataclass
class MpcSolution:
    """Full-horizon decision vectors and derived recipe components."""

    u: np.ndarray
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    solar: np.ndarray
    objective: float
    status: str = "optimal"
    gap: float = 0.0
    nodes: int = 0
    qp_solves: int = 0
    step: int = 1
    extras: dict = field(default_factory=dict)

    @property
    def r_a(self):
        return self.x * self.u

    @property
    def r_s(self):
        return self.solar * self.v * self.w

    @property
    def r(self):
        return self.r_a + self.r_s

    @property
    def dli(self):
        return float(np.sum(self.r) * DLI_PER_UMOL_HOUR)

    @property
    def peak_ra(self):
        return float(np.max(self.r_a, initial=0.0))

    def to_dict(self):
        return {"u": self.u.tolist(), "x": self.x.tolist(), "v": self.v.tolist(),
                "w": self.w.tolist(), "r_a": self.r_a.tolist(), "r_s": self.r_s.tolist(),
                "r": self.r.tolist(), "objective": self.objective, "status": self.status,
                "gap": self.gap, "nodes": self.nodes, "step": self.step, "dli": self.dli}


def objective_value(problem, u, x):
    """Evaluate the lighting objective for full-horizon ``u`` and ``x``."""
    w = problem.weights
    ra = np.asarray(u) * np.asarray(x)
    return float(w.alpha * np.sum(problem.prices * ra) + w.beta * np.sum(ra * ra)
                 + w.gamma * np.max(ra, initial=0.0))


def _lex_key(pattern):
    return tuple(1 - int(p) for p in pattern)


def _lower_key(ustate):
    # best key any completion of a partial assignment could reach
    return tuple(0 if s < 0 else 1 - int(s) for s in ustate)


class _Evaluator:
    """Solves node QPs and caches leaf results by pattern."""

    def __init__(self, problem):
        self.problem = problem
        self.leaves = {}
        self.qp_solves = 0

    def relax(self, ustate):
        nd = node_data(self.problem, ustate)
        if not feasibility_of(self.problem, nd).feasible:
            return None
        res = self._qp(nd)
        return res.objective + nd.const, res

    def leaf(self, pattern):
        key = bytes(np.asarray(pattern, dtype=np.int8))
        if key in self.leaves:
            return self.leaves[key]
        ok, nd = pattern_feasible(self.problem, pattern)
        out = None
        if ok:
            res = self._qp(nd)
            out = (res.objective + nd.const, res)
        self.leaves[key] = out
        return out

    def polish(self, pattern, res):
        nd = node_data(self.problem, pattern)
        b = self.problem.bounds
        w = self.problem.weights
        out = polish_hourly_qp(nd.mode, nd.q, nd.s_hi, nd.r_lo, nd.r_hi, res, beta=w.beta,
                               gamma=w.gamma, ppfd_min=b.ppfd_min, ppfd_max=b.ppfd_max,
                               total=nd.total, m_lo=nd.m_lo)
        return out, out.objective + nd.const

    def _qp(self, nd):
        b = self.problem.bounds
        w = self.problem.weights
        self.qp_solves += 1
        res = solve_hourly_qp(nd.mode, nd.q, nd.s_hi, nd.r_lo, nd.r_hi, beta=w.beta,
                              gamma=w.gamma, ppfd_min=b.ppfd_min, ppfd_max=b.ppfd_max,
                              total=nd.total, m_lo=nd.m_lo)
        if not res.converged:
            raise MpcError("node QP did not reach KKT tolerance")
        return res


def _build_solution(problem, pattern, res, objective, **kw):
    k0 = problem.step - 1
    N = problem.n_intervals
    u = np.zeros(N, dtype=np.int64)
    u[:k0] = problem.committed_u
    u[k0:] = pattern
    x = np.zeros(N)
    x[:k0] = problem.committed_x
    x[k0:] = np.where(u[k0:] > 0, res.z[k0:], 0.0)
    v = problem.sunlit
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(v > 0, res.s / np.where(v > 0, problem.solar, 1.0), 0.0)
    w = np.clip(w, 0.0, 1.0)
    return MpcSolution(u=u, x=x, v=v, w=w, solar=problem.solar.copy(), objective=objective,
                       step=problem.step, **kw)


def _better(obj, key, best_obj, best_key):
    if best_obj is None:
        return True
    tol = TIE_RTOL * max(1.0, abs(best_obj))
    if obj < best_obj - tol:
        return True
    return obj <= best_obj + tol and key < best_key


def brute_force_solve(problem):
    """Enumerate every on/off pattern of the free hours (at most 10)."""
    k = problem.n_free
    if k > BRUTE_FORCE_MAX_FREE:
        raise ValueError(f"{k} free hours exceeds the brute-force limit of {BRUTE_FORCE_MAX_FREE}")
    ev = _Evaluator(problem)
    best = None
    for pattern in itertools.product((1, 0), repeat=k):
        out = ev.leaf(pattern)
        if out is None:
            continue
        obj, res = out
        key = _lex_key(pattern)
        if best is None or _better(obj, key, best[0], best[1]):
            best = (obj, key, pattern, res)
    if best is None:
        raise MpcInfeasibleError(feasibility_check(problem))
    obj, _, pattern, res = best
    res, obj = ev.polish(pattern, res)
    return _build_solution(problem, np.array(pattern), res, obj,
                           nodes=2 ** k, qp_solves=ev.qp_solves)


def solve(problem, node_limit=NODE_LIMIT):
    """Best-first branch-and-bound on the continuous relaxation ``0 <= u <= 1``.

    Branches on free hours in time order. Returns status ``"optimal"`` or
    ``"node_limit"`` (best incumbent, with its relative gap).
    """
    report = feasibility_check(problem)
    if not report.feasible:
        raise MpcInfeasibleError(report)
    k = problem.n_free
    ev = _Evaluator(problem)
    root_state = forced_state(problem)
    root = ev.relax(root_state)
    if root is None:
        raise MpcInfeasibleError(report)

    inc_obj = None
    inc_key = None
    inc = None

    def offer(pattern):
        nonlocal inc_obj, inc_key, inc
        out = ev.leaf(pattern)
        if out is None:
            return
        obj, res = out
        key = _lex_key(pattern)
        if _better(obj, key, inc_obj, inc_key):
            inc_obj, inc_key, inc = obj, key, (np.array(pattern), res)

    def prunable(bound, ustate):
        if inc_obj is None:
            return False
        tol = TIE_RTOL * max(1.0, abs(inc_obj))
        if bound > inc_obj + tol:
            return True
        return bound >= inc_obj - tol and _lower_key(ustate) >= inc_key

    def rounded(ustate, res):
        k0 = problem.step - 1
        frac = res.u[k0:]
        return np.where(ustate < 0, (frac > 0.5).astype(np.int64), ustate)

    counter = itertools.count()
    heap = [(root[0], _lower_key(root_state), next(counter), root_state, root[1])]
    offer(rounded(root_state, root[1]))
    nodes = 1
    status = "optimal"
    while heap:
        bound, _, _, ustate, res = heapq.heappop(heap)
        if prunable(bound, ustate):
            continue
        free = np.nonzero(ustate < 0)[0]
        if free.size == 0:
            offer(ustate)
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, (bound, _lower_key(ustate), next(counter), ustate, res))
            status = "node_limit"
            break
        j = free[0]
        for val in (1, 0):
            child = ustate.copy()
            child[j] = val
            nodes += 1
            if np.all(child >= 0):
                offer(child)
                continue
            out = ev.relax(child)
            if out is None:
                continue
            cb, cres = out
            if prunable(cb, child):
                continue
            offer(rounded(child, cres))
            if not prunable(cb, child):
                heapq.heappush(heap, (cb, _lower_key(child), next(counter), child, cres))

    if inc is None:
        if status == "node_limit":
            raise MpcError("node limit reached before any feasible schedule was found")
        raise MpcInfeasibleError(report)
    gap = 0.0
    if status != "optimal" and heap:
        lb = min(h[0] for h in heap)
        gap = max(0.0, (inc_obj - lb) / max(1.0, abs(inc_obj)))
    pattern, res = inc
    res, inc_obj = ev.polish(pattern, res)
    return _build_solution(problem, pattern, res, inc_obj, status=status, gap=gap,
                           nodes=nodes, qp_solves=ev.qp_solves)

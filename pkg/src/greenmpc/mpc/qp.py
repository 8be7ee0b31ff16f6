"""Hour-structured convex QP used at every branch-and-bound node.

For a fixed assignment of the on/off indicators the lighting program is the
convex QP::

    min  sum_n f_n(z_n)  +  gamma m
    s.t. L <= z_n <= Pmax             (lit hours, f = q z + beta z^2)
         0 <= z_n <= Pmax             (relaxed hours, f = q z + beta max(L z, z^2))
         0 <= s_n <= s_hi_n
         r_lo_n <= z_n + s_n <= r_hi_n
         z_n <= m,  m_lo <= m <= Pmax
         sum_n z_n + s_n = total

It is solved by a primal-dual interior-point method whose Newton systems are
reduced hour by hour to a 2x2 Schur complement, so one iteration costs
O(hours). Kernels live in ``_qp_numba`` (jitted) and ``_qp_numpy``
(vectorised); :data:`greenmpc._accel.USE_NUMBA` picks one.
"""
from dataclasses import dataclass

import numpy as np

from .. import _accel
from ._qp_common import MODE_OFF, MODE_ON, MODE_RELAXED, build_layout
from . import _qp_numpy

if _accel.USE_NUMBA:
    from . import _qp_numba as _kernel
else:
    _kernel = _qp_numpy

KKT_TOL = 1e-10
MAX_ITER = 80
FEAS_TOL = 1e-7

__all__ = ["MODE_OFF", "MODE_ON", "MODE_RELAXED", "QPResult", "hour_ranges",
           "solve_hourly_qp"]


@dataclass
class QPResult:
    """Node solution; for relaxed hours ``u = min(1, z / L)``."""

    z: np.ndarray
    s: np.ndarray
    u: np.ndarray
    m: float
    objective: float
    converged: bool
    iterations: int


def hour_ranges(mode, s_hi, r_lo, r_hi, ppfd_min, ppfd_max):
    """Per-hour interval of achievable ``z + s`` (convex hull for relaxed hours).

    Returns ``(lo, hi)``; an hour is infeasible where ``lo > hi``.
    """
    mode = np.asarray(mode)
    s_hi = np.asarray(s_hi, dtype=float)
    r_lo = np.asarray(r_lo, dtype=float)
    r_hi = np.asarray(r_hi, dtype=float)
    off_lo = np.maximum(0.0, r_lo)
    off_hi = np.minimum(s_hi, r_hi)
    on_lo = np.maximum(ppfd_min, r_lo)
    on_hi = np.minimum(ppfd_max + s_hi, r_hi)
    off_ok = off_lo <= off_hi + FEAS_TOL
    on_ok = on_lo <= on_hi + FEAS_TOL
    rel_lo = np.where(off_ok & on_ok, np.minimum(off_lo, on_lo), np.where(off_ok, off_lo, on_lo))
    rel_hi = np.where(off_ok & on_ok, np.maximum(off_hi, on_hi), np.where(off_ok, off_hi, on_hi))
    rel_bad = ~(off_ok | on_ok)
    rel_lo = np.where(rel_bad, np.inf, rel_lo)
    rel_hi = np.where(rel_bad, -np.inf, rel_hi)
    lo = np.select([mode == MODE_OFF, mode == MODE_ON], [off_lo, on_lo], rel_lo)
    hi = np.select([mode == MODE_OFF, mode == MODE_ON], [off_hi, on_hi], rel_hi)
    return lo, hi


def solve_hourly_qp(mode, q, s_hi, r_lo, r_hi, *, beta, gamma, ppfd_min, ppfd_max,
                    total, m_lo=0.0, kernel=None):
    """Solve one node QP; the caller guarantees feasibility (see :func:`hour_ranges`).

    ``kernel`` overrides the module chosen by the environment flag (used by the
    parity tests and the benchmark).
    """
    mode = np.ascontiguousarray(mode, dtype=np.int64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    s_hi = np.ascontiguousarray(s_hi, dtype=np.float64)
    r_lo = np.ascontiguousarray(r_lo, dtype=np.float64)
    r_hi = np.ascontiguousarray(r_hi, dtype=np.float64)
    k = _kernel if kernel is None else kernel
    if k is _qp_numpy:
        layout, scale = build_layout(mode, q, s_hi, r_lo, r_hi, beta, gamma, ppfd_min,
                                     ppfd_max, total, m_lo)
        x, m, obj, status, iters = k.ip_solve(*layout, KKT_TOL, MAX_ITER)
        P = float(ppfd_max)
        z = np.select([mode == MODE_ON, mode == MODE_RELAXED],
                      [x[:, 0] * P, x[:, 0] * P], 0.0)
        s = np.where(s_hi > 0.0, x[:, 1] * P, 0.0)
        L = float(ppfd_min) / P
        u = np.select([mode == MODE_ON, mode == MODE_RELAXED],
                      [1.0, np.minimum(1.0, x[:, 0] / L)], 0.0)
        m = m * P
        obj = obj * scale
    else:
        z, s, u, m, obj, status, iters = k.build_and_solve(
            mode, q, s_hi, r_lo, r_hi, float(beta), float(gamma), float(ppfd_min),
            float(ppfd_max), float(total), float(m_lo), KKT_TOL, MAX_ITER)
    return QPResult(z=z, s=s, u=u, m=float(m), objective=float(obj),
                    converged=status == 0, iterations=int(iters))


POLISH_ACTIVE_TOL = 1e-6


def polish_hourly_qp(mode, q, s_hi, r_lo, r_hi, res, *, beta, gamma, ppfd_min, ppfd_max,
                     total, m_lo=0.0):
    """Snap an interior-point solution onto its active constraints.

    Rows with scaled slack below ``POLISH_ACTIVE_TOL`` are treated as equalities
    and the equality-constrained KKT system is solved for the least-norm step.
    Near degenerate vertices (a bound active with a vanishing multiplier) the
    interior point only approaches the bound like ``sqrt(mu)``; the polish
    removes that residue. The polished point is kept only if it is feasible and
    does not raise the objective, otherwise ``res`` is returned unchanged.
    """
    mode = np.asarray(mode, dtype=np.int64)
    layout, scale = build_layout(mode, q, s_hi, r_lo, r_hi, beta, gamma, ppfd_min, ppfd_max,
                                 total, m_lo)
    act, Hd, c, aeq, Gl, hl, mask, ccoef, cm, m_lo_s, m_hi, S, use_eq, _, _ = layout
    H = mode.size
    P = float(ppfd_max)
    L = float(ppfd_min) / P
    n = 3 * H + 1
    x = np.zeros((H, 3))
    x[:, 0] = np.where(mode >= MODE_ON, res.z / P, 0.0)
    x[:, 1] = np.where(np.asarray(s_hi) > 0.0, res.s / P, 0.0)
    x[:, 2] = np.where(act[:, 2] > 0.0, np.maximum(0.0, x[:, 0] - L), 0.0)
    X = np.append(x.ravel(), res.m / P)

    rows, rhs = [], []
    for h in range(H):
        for r in range(Gl.shape[1]):
            if mask[h, r] > 0.0:
                g = np.zeros(n)
                g[3 * h:3 * h + 3] = Gl[h, r]
                rows.append(g)
                rhs.append(hl[h, r])
        if np.any(ccoef[h] > 0.0):
            g = np.zeros(n)
            g[3 * h:3 * h + 3] = ccoef[h]
            g[-1] = -1.0
            rows.append(g)
            rhs.append(0.0)
    g = np.zeros(n)
    g[-1] = -1.0
    rows.append(g)
    rhs.append(-m_lo_s)
    g = np.zeros(n)
    g[-1] = 1.0
    rows.append(g)
    rhs.append(m_hi)
    G = np.array(rows)
    hv = np.array(rhs)
    slack = hv - G @ X
    active = slack <= POLISH_ACTIVE_TOL

    eq = [G[active]]
    eb = [hv[active]]
    if use_eq:
        eq.append(np.append(aeq.ravel(), 0.0)[None, :])
        eb.append(np.array([S]))
    fixed = np.nonzero(np.append(act.ravel(), 1.0) <= 0.0)[0]
    if fixed.size:
        Z = np.zeros((fixed.size, n))
        Z[np.arange(fixed.size), fixed] = 1.0
        eq.append(Z)
        eb.append(np.zeros(fixed.size))
    A = np.vstack(eq)
    b = np.concatenate(eb)
    Hm = np.diag(np.append(Hd.ravel(), 0.0))
    cv = np.append(c.ravel(), cm)
    k = A.shape[0]
    K = np.block([[Hm, A.T], [A, np.zeros((k, k))]])
    r = np.concatenate([-(Hm @ X + cv), b - A @ X])
    step = np.linalg.lstsq(K, r, rcond=None)[0]
    Xn = X + step[:n]

    tol = 1e-12
    if np.any(G @ Xn - hv > tol * (1.0 + np.abs(hv))):
        return res
    if np.max(np.abs(A @ Xn - b), initial=0.0) > tol * (1.0 + np.max(np.abs(b), initial=0.0)):
        return res
    obj_old = 0.5 * X @ Hm @ X + cv @ X
    obj_new = 0.5 * Xn @ Hm @ Xn + cv @ Xn
    if obj_new > obj_old + tol * max(1.0, abs(obj_old)):
        return res
    xn = Xn[:-1].reshape(H, 3)
    z = np.where(mode >= MODE_ON, xn[:, 0] * P, 0.0)
    s = np.where(np.asarray(s_hi) > 0.0, xn[:, 1] * P, 0.0)
    return QPResult(z=z, s=s, u=res.u.copy(), m=float(Xn[-1] * P),
                    objective=float(obj_new * scale), converged=res.converged,
                    iterations=res.iterations)

"""Layout shared by the numba and numpy interior-point kernels.

The lighting QP decomposes by hour. Every hour owns up to three local
variables in fixed slots:

* lit hour:     ``(z, s, -)`` with ``L <= z <= Pmax``
* relaxed hour: ``(z, s, e)`` with ``0 <= z <= Pmax`` and excess
  ``max(0, z - L) <= e <= Pmax - L``
* dark hour:    ``(-, s, -)``

``s`` is usable solar PPFD after shading. Pricing a relaxed hour as
``(q + beta L) z + beta L e + beta e^2`` gives, after minimising over ``e``,
the convex envelope ``q z + beta max(L z, z^2)`` of the per-hour cost over
``z in {0} U [L, Pmax]``: the tightest relaxation of the on/off choice. ``e``
is dropped when ``beta = 0``. A global ``m`` is the epigraph of ``max z``. Each hour has eight
local inequality slots plus one coupling row ``z - m <= 0``; inactive slots
are masked out. One equality row ties the daily light sum.
"""
import numpy as np

N_SLOTS = 8

MODE_OFF = 0
MODE_ON = 1
MODE_RELAXED = 2


def build_layout(mode, q, s_hi, r_lo, r_hi, beta, gamma, ppfd_min, ppfd_max, total, m_lo):
    """Scale the hourly data by ``ppfd_max`` and fill the slot arrays.

    Returns the positional argument tuple for ``ip_solve`` and the objective
    scale that maps the kernel objective back to user units.
    """
    mode = np.asarray(mode, dtype=np.int64)
    q = np.asarray(q, dtype=np.float64)
    H = mode.shape[0]
    P = float(ppfd_max)
    Lu = float(ppfd_min)
    L = Lu / P
    s_hi = np.asarray(s_hi, dtype=np.float64) / P
    r_lo = np.asarray(r_lo, dtype=np.float64) / P
    r_hi = np.asarray(r_hi, dtype=np.float64) / P

    on = mode == MODE_ON
    rel = mode == MODE_RELAXED
    zact = (on | rel).astype(np.float64)
    sact = (s_hi > 0.0).astype(np.float64)
    eact = (rel & (beta > 0.0)).astype(np.float64)

    c0 = np.where(on, q * P, np.where(rel, (q + beta * Lu) * P, 0.0))
    c2 = eact * beta * Lu * P
    hz = 2.0 * beta * P * P
    cm = gamma * P
    scale = max(float(np.max(np.abs(c0), initial=0.0)), float(np.max(np.abs(c2), initial=0.0)),
                hz, abs(cm))
    if scale <= 0.0:
        scale = 1.0

    act = np.stack([zact, sact, eact], axis=1)
    Hd = np.zeros((H, 3))
    Hd[:, 0] = np.where(on, hz, 0.0) / scale
    Hd[:, 2] = eact * hz / scale
    c = np.zeros((H, 3))
    c[:, 0] = c0 / scale
    c[:, 2] = c2 / scale
    aeq = np.stack([zact, sact, np.zeros(H)], axis=1)
    ccoef = np.stack([zact, np.zeros(H), np.zeros(H)], axis=1)

    Gl = np.zeros((H, N_SLOTS, 3))
    hl = np.zeros((H, N_SLOTS))
    mask = np.zeros((H, N_SLOTS))
    # z >= L (lit) | z >= 0 (relaxed)
    Gl[:, 0, 0] = -zact
    hl[:, 0] = np.where(on, -L, 0.0)
    mask[:, 0] = zact
    # z <= 1
    Gl[:, 1, 0] = zact
    hl[:, 1] = 1.0
    mask[:, 1] = zact
    # e >= 0, z - e <= L
    Gl[:, 2, 2] = -eact
    Gl[:, 3, 0] = eact
    Gl[:, 3, 2] = -eact
    hl[:, 3] = L * eact
    mask[:, 2] = eact
    mask[:, 3] = eact
    # 0 <= s <= s_hi
    Gl[:, 4, 1] = -sact
    Gl[:, 5, 1] = sact
    hl[:, 5] = s_hi * sact
    mask[:, 4] = sact
    mask[:, 5] = sact
    # r_lo <= z + s <= r_hi
    any_var = np.maximum(zact, sact)
    Gl[:, 6, :] = aeq
    hl[:, 6] = r_hi * any_var
    mask[:, 6] = any_var
    lo_on = any_var * (r_lo > 0.0)
    Gl[:, 7, :] = -aeq * lo_on[:, None]
    hl[:, 7] = -r_lo * lo_on
    mask[:, 7] = lo_on
    # masked rows are the trivially slack 0 <= 1
    hl = np.where(mask > 0.0, hl, 1.0)

    x0 = np.zeros((H, 3))
    x0[:, 0] = np.where(on, 0.5 * (L + 1.0), np.where(rel, 0.25 * (L + 1.0), 0.0))
    x0[:, 1] = 0.5 * s_hi * sact
    x0[:, 2] = 0.5 * (1.0 - L) * eact
    m_lo_s = float(m_lo) / P
    m0 = 0.5 * (m_lo_s + 1.0)
    use_eq = bool(np.any(aeq > 0.0))

    layout = (act, Hd, c, aeq, Gl, hl, mask, ccoef, cm / scale, m_lo_s, 1.0,
              float(total) / P, use_eq, x0, m0)
    return layout, scale

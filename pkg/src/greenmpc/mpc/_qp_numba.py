"""Loop-form Mehrotra predictor-corrector, compiled with numba.

Same algorithm and arguments as ``_qp_numpy.ip_solve``; the per-hour 3x3
blocks are factorised with a pivoted LU.
"""
import numpy as np

from .._accel import njit

STEP_FRACTION = 0.99
# on numerical breakdown, accept the iterate if it meets this multiple of tol
LOOSE_FACTOR = 100.0


@njit
def _lu3(K, LU, piv):
    # partial-pivot LU of a 3x3 block; blocks can reach condition ~1e16 near
    # the optimum, where an unpivoted Cholesky loses the small pivots
    for i in range(3):
        piv[i] = i
        for j in range(3):
            LU[i, j] = K[i, j]
    for k in range(3):
        p = k
        best = abs(LU[k, k])
        for i in range(k + 1, 3):
            if abs(LU[i, k]) > best:
                best = abs(LU[i, k])
                p = i
        if p != k:
            for j in range(3):
                t = LU[k, j]
                LU[k, j] = LU[p, j]
                LU[p, j] = t
            t2 = piv[k]
            piv[k] = piv[p]
            piv[p] = t2
        if LU[k, k] == 0.0:
            LU[k, k] = 1e-300
        for i in range(k + 1, 3):
            LU[i, k] /= LU[k, k]
            for j in range(k + 1, 3):
                LU[i, j] -= LU[i, k] * LU[k, j]


@njit
def _lu3_solve(LU, piv, b, out):
    y0 = b[piv[0]]
    y1 = b[piv[1]] - LU[1, 0] * y0
    y2 = b[piv[2]] - LU[2, 0] * y0 - LU[2, 1] * y1
    out[2] = y2 / LU[2, 2]
    out[1] = (y1 - LU[1, 2] * out[2]) / LU[1, 1]
    out[0] = (y0 - LU[0, 1] * out[1] - LU[0, 2] * out[2]) / LU[0, 0]


@njit
def _step(v, dv, valid):
    a = 1.0
    for i in range(v.size):
        if valid.flat[i] > 0.0 and dv.flat[i] < 0.0:
            t = -v.flat[i] / dv.flat[i]
            if t < a:
                a = t
    return a


@njit
def _newton(Gl, mask, hasz, ccoef, act, aeq, sl, lam, slc, lamc, slm, lamm, rg, rgc, rgm,
            rd, rdm, rp, use_eq, Lfac, piv, P1, P2, kz, M11, M12, M22, rc, rcc, rcm,
            dx, ds, dsc, dsm, dl, dlc, dlm):
    H, R, _ = Gl.shape
    rhs = np.empty(3)
    p = np.empty(3)
    sum_kp = 0.0
    sum_ap = 0.0
    rhs_m = -rdm
    for h in range(H):
        for k in range(3):
            rhs[k] = -rd[h, k]
        for r in range(R):
            if mask[h, r] > 0.0:
                t = (rc[h, r] + lam[h, r] * rg[h, r]) / sl[h, r]
                for k in range(3):
                    rhs[k] -= Gl[h, r, k] * t
        if hasz[h] > 0.0:
            tc = (rcc[h] + lamc[h] * rgc[h]) / slc[h]
            for k in range(3):
                rhs[k] -= tc * ccoef[h, k]
            rhs_m += tc
        for k in range(3):
            if act[h, k] <= 0.0:
                rhs[k] = 0.0
        _lu3_solve(Lfac[h], piv[h], rhs, p)
        for k in range(3):
            dx[h, k] = p[k]
            sum_ap += aeq[h, k] * p[k]
        for k in range(3):
            sum_kp += kz[h] * ccoef[h, k] * p[k]
    tm0 = (rcm[0] + lamm[0] * rgm[0]) / slm[0]
    tm1 = (rcm[1] + lamm[1] * rgm[1]) / slm[1]
    rhs_m += tm0 - tm1
    r1 = rhs_m - sum_kp
    r2 = -rp - sum_ap
    if use_eq:
        det = M11 * M22 - M12 * M12
        dm = (r1 * M22 - M12 * r2) / det
        dy = (M11 * r2 - M12 * r1) / det
    else:
        dm = r1 / M11
        dy = 0.0
    for h in range(H):
        for k in range(3):
            if act[h, k] > 0.0:
                dx[h, k] = dx[h, k] - P1[h, k] * dm - P2[h, k] * dy
            else:
                dx[h, k] = 0.0
        for r in range(R):
            if mask[h, r] > 0.0:
                g = 0.0
                for k in range(3):
                    g += Gl[h, r, k] * dx[h, k]
                ds[h, r] = -rg[h, r] - g
                dl[h, r] = (rc[h, r] - lam[h, r] * ds[h, r]) / sl[h, r]
            else:
                ds[h, r] = 0.0
                dl[h, r] = 0.0
        if hasz[h] > 0.0:
            cdx = 0.0
            for k in range(3):
                cdx += ccoef[h, k] * dx[h, k]
            dsc[h] = -rgc[h] - (cdx - dm)
            dlc[h] = (rcc[h] - lamc[h] * dsc[h]) / slc[h]
        else:
            dsc[h] = 0.0
            dlc[h] = 0.0
    dsm[0] = -rgm[0] + dm
    dsm[1] = -rgm[1] - dm
    dlm[0] = (rcm[0] - lamm[0] * dsm[0]) / slm[0]
    dlm[1] = (rcm[1] - lamm[1] * dsm[1]) / slm[1]
    return dm, dy


@njit
def ip_solve(act, Hd, c, aeq, Gl, hl, mask, ccoef, c_m, m_lo, m_hi, S, use_eq,
             x0, m0, tol, max_iter):
    H, R, _ = Gl.shape
    hasz = np.zeros(H)
    for h in range(H):
        for k in range(3):
            if ccoef[h, k] > 0.0:
                hasz[h] = 1.0
    x = x0.copy()
    m = m0
    y = 0.0
    sl = np.ones((H, R))
    lam = np.zeros((H, R))
    slc = np.ones(H)
    lamc = np.zeros(H)
    slm = np.empty(2)
    lamm = np.ones(2)
    nrow = 2.0
    for h in range(H):
        for r in range(R):
            if mask[h, r] > 0.0:
                g = 0.0
                for k in range(3):
                    g += Gl[h, r, k] * x[h, k]
                sl[h, r] = max(hl[h, r] - g, 1.0)
                lam[h, r] = 1.0
                nrow += 1.0
        if hasz[h] > 0.0:
            cx = 0.0
            for k in range(3):
                cx += ccoef[h, k] * x[h, k]
            slc[h] = max(m - cx, 1.0)
            lamc[h] = 1.0
            nrow += 1.0
    slm[0] = max(m - m_lo, 1.0)
    slm[1] = max(m_hi - m, 1.0)

    cnorm = 1.0 + abs(c_m)
    for h in range(H):
        for k in range(3):
            cnorm = max(cnorm, 1.0 + abs(c[h, k]))
    bnorm = 1.0 + max(abs(S), max(abs(m_lo), abs(m_hi)))
    for h in range(H):
        for r in range(R):
            bnorm = max(bnorm, 1.0 + abs(hl[h, r]))

    rg = np.zeros((H, R))
    rgc = np.zeros(H)
    rgm = np.zeros(2)
    rd = np.zeros((H, 3))
    Lfac = np.zeros((H, 3, 3))
    piv = np.zeros((H, 3), dtype=np.int64)
    K = np.zeros((3, 3))
    P1 = np.zeros((H, 3))
    P2 = np.zeros((H, 3))
    kz = np.zeros(H)
    col = np.zeros(3)
    out = np.zeros(3)
    rc = np.zeros((H, R))
    rcc = np.zeros(H)
    rcm = np.zeros(2)
    adx = np.zeros((H, 3))
    ads = np.zeros((H, R))
    adsc = np.zeros(H)
    adsm = np.zeros(2)
    adl = np.zeros((H, R))
    adlc = np.zeros(H)
    adlm = np.zeros(2)
    dx = np.zeros((H, 3))
    ds = np.zeros((H, R))
    dsc = np.zeros(H)
    dsm = np.zeros(2)
    dl = np.zeros((H, R))
    dlc = np.zeros(H)
    dlm = np.zeros(2)
    vmask = np.ones(2)

    status = 1
    it = 0
    while it < max_iter:
        # residuals
        pres = 0.0
        dres = 0.0
        comp = 0.0
        rp = 0.0
        rdm = c_m - lamm[0] + lamm[1]
        for h in range(H):
            for k in range(3):
                rd[h, k] = Hd[h, k] * x[h, k] + c[h, k] + aeq[h, k] * y
            for r in range(R):
                if mask[h, r] > 0.0:
                    g = 0.0
                    for k in range(3):
                        g += Gl[h, r, k] * x[h, k]
                        rd[h, k] += Gl[h, r, k] * lam[h, r]
                    rg[h, r] = g + sl[h, r] - hl[h, r]
                    pres = max(pres, abs(rg[h, r]))
                    comp += sl[h, r] * lam[h, r]
                else:
                    rg[h, r] = 0.0
            if hasz[h] > 0.0:
                cx = 0.0
                for k in range(3):
                    rd[h, k] += lamc[h] * ccoef[h, k]
                    cx += ccoef[h, k] * x[h, k]
                rdm -= lamc[h]
                rgc[h] = cx - m + slc[h]
                pres = max(pres, abs(rgc[h]))
                comp += slc[h] * lamc[h]
            else:
                rgc[h] = 0.0
            for k in range(3):
                if act[h, k] <= 0.0:
                    rd[h, k] = 0.0
                dres = max(dres, abs(rd[h, k]))
                rp += aeq[h, k] * x[h, k]
        rp = rp - S if use_eq else 0.0
        rgm[0] = -m + slm[0] + m_lo
        rgm[1] = m + slm[1] - m_hi
        pres = max(pres, max(abs(rp), max(abs(rgm[0]), abs(rgm[1]))))
        dres = max(dres, abs(rdm))
        comp += slm[0] * lamm[0] + slm[1] * lamm[1]
        mu = comp / nrow
        if pres <= tol * bnorm and dres <= tol * cnorm and comp <= tol * cnorm:
            status = 0
            break
        lt = LOOSE_FACTOR * tol
        loose = pres <= lt * bnorm and dres <= lt * cnorm and comp <= lt * cnorm
        if not comp > 1e-300 or not np.isfinite(comp):
            status = 0 if loose else 2
            break

        # factorise per-hour blocks and the Schur complement
        Kmm = lamm[0] / slm[0] + lamm[1] / slm[1]
        M11 = 0.0
        M12 = 0.0
        M22 = 0.0
        for h in range(H):
            for a in range(3):
                for b in range(3):
                    K[a, b] = 0.0
                K[a, a] = Hd[h, a]
            for r in range(R):
                if mask[h, r] > 0.0:
                    d = lam[h, r] / sl[h, r]
                    for a in range(3):
                        ga = Gl[h, r, a]
                        if ga != 0.0:
                            for b in range(3):
                                K[a, b] += d * ga * Gl[h, r, b]
            if hasz[h] > 0.0:
                dc = lamc[h] / slc[h]
                for a in range(3):
                    for b in range(3):
                        K[a, b] += dc * ccoef[h, a] * ccoef[h, b]
                kz[h] = -dc
                Kmm += dc
            else:
                kz[h] = 0.0
            for a in range(3):
                if act[h, a] <= 0.0:
                    for b in range(3):
                        K[a, b] = 0.0
                        K[b, a] = 0.0
                    K[a, a] = 1.0
            Lh = Lfac[h]
            ph = piv[h]
            _lu3(K, Lh, ph)
            for a in range(3):
                col[a] = kz[h] * ccoef[h, a]
            _lu3_solve(Lh, ph, col, out)
            for a in range(3):
                P1[h, a] = out[a] if act[h, a] > 0.0 else 0.0
            for a in range(3):
                col[a] = aeq[h, a]
            _lu3_solve(Lh, ph, col, out)
            for a in range(3):
                P2[h, a] = out[a] if act[h, a] > 0.0 else 0.0
            for a in range(3):
                M11 -= kz[h] * ccoef[h, a] * P1[h, a]
                M12 -= kz[h] * ccoef[h, a] * P2[h, a]
            for a in range(3):
                M22 -= aeq[h, a] * P2[h, a]
        M11 += Kmm
        if use_eq:
            if M11 * M22 - M12 * M12 == 0.0:
                status = 0 if loose else 2
                break
        elif M11 == 0.0:
            status = 0 if loose else 2
            break

        # predictor
        for h in range(H):
            for r in range(R):
                rc[h, r] = -sl[h, r] * lam[h, r] if mask[h, r] > 0.0 else 0.0
            rcc[h] = -slc[h] * lamc[h] if hasz[h] > 0.0 else 0.0
        rcm[0] = -slm[0] * lamm[0]
        rcm[1] = -slm[1] * lamm[1]
        _newton(Gl, mask, hasz, ccoef, act, aeq, sl, lam, slc, lamc, slm, lamm, rg, rgc, rgm,
                rd, rdm, rp, use_eq, Lfac, piv, P1, P2, kz, M11, M12, M22, rc, rcc, rcm,
                adx, ads, adsc, adsm, adl, adlc, adlm)
        a_aff = min(_step(sl, ads, mask), _step(slc, adsc, hasz), _step(slm, adsm, vmask),
                    _step(lam, adl, mask), _step(lamc, adlc, hasz), _step(lamm, adlm, vmask))
        comp_aff = 0.0
        for h in range(H):
            for r in range(R):
                if mask[h, r] > 0.0:
                    comp_aff += (sl[h, r] + a_aff * ads[h, r]) * (lam[h, r] + a_aff * adl[h, r])
            if hasz[h] > 0.0:
                comp_aff += (slc[h] + a_aff * adsc[h]) * (lamc[h] + a_aff * adlc[h])
        for j in range(2):
            comp_aff += (slm[j] + a_aff * adsm[j]) * (lamm[j] + a_aff * adlm[j])
        sigma = (comp_aff / comp) ** 3
        smu = sigma * mu

        # corrector
        for h in range(H):
            for r in range(R):
                if mask[h, r] > 0.0:
                    rc[h, r] = -sl[h, r] * lam[h, r] - ads[h, r] * adl[h, r] + smu
            if hasz[h] > 0.0:
                rcc[h] = -slc[h] * lamc[h] - adsc[h] * adlc[h] + smu
        for j in range(2):
            rcm[j] = -slm[j] * lamm[j] - adsm[j] * adlm[j] + smu
        dm, dy = _newton(Gl, mask, hasz, ccoef, act, aeq, sl, lam, slc, lamc, slm, lamm, rg, rgc,
                         rgm, rd, rdm, rp, use_eq, Lfac, piv, P1, P2, kz, M11, M12, M22, rc,
                         rcc, rcm, dx, ds, dsc, dsm, dl, dlc, dlm)
        a = min(_step(sl, ds, mask), _step(slc, dsc, hasz), _step(slm, dsm, vmask),
                _step(lam, dl, mask), _step(lamc, dlc, hasz), _step(lamm, dlm, vmask))
        a = min(1.0, STEP_FRACTION * a)
        if a < 1e-14 or not np.isfinite(dm):
            status = 0 if loose else 2
            break

        for h in range(H):
            for k in range(3):
                x[h, k] += a * dx[h, k]
            for r in range(R):
                if mask[h, r] > 0.0:
                    sl[h, r] += a * ds[h, r]
                    lam[h, r] += a * dl[h, r]
            if hasz[h] > 0.0:
                slc[h] += a * dsc[h]
                lamc[h] += a * dlc[h]
        for j in range(2):
            slm[j] += a * dsm[j]
            lamm[j] += a * dlm[j]
        m += a * dm
        y += a * dy
        it += 1

    obj = c_m * m
    for h in range(H):
        for k in range(3):
            obj += 0.5 * Hd[h, k] * x[h, k] * x[h, k] + c[h, k] * x[h, k]
    return x, m, obj, status, it


@njit
def build_and_solve(mode, q, s_hi, r_lo, r_hi, beta, gamma, ppfd_min, ppfd_max, total,
                    m_lo, tol, max_iter):
    """Loop form of ``_qp_common.build_layout`` fused with :func:`ip_solve`."""
    H = mode.shape[0]
    P = ppfd_max
    Lu = ppfd_min
    L = Lu / P
    hz = 2.0 * beta * P * P
    cm = gamma * P
    scale = max(hz, abs(cm))
    for h in range(H):
        if mode[h] == 1:
            scale = max(scale, abs(q[h] * P))
        elif mode[h] == 2:
            scale = max(scale, abs((q[h] + beta * Lu) * P), beta * Lu * P)
    if scale <= 0.0:
        scale = 1.0
    act = np.zeros((H, 3))
    Hd = np.zeros((H, 3))
    c = np.zeros((H, 3))
    aeq = np.zeros((H, 3))
    ccoef = np.zeros((H, 3))
    Gl = np.zeros((H, 8, 3))
    hl = np.ones((H, 8))
    mask = np.zeros((H, 8))
    x0 = np.zeros((H, 3))
    use_eq = False
    for h in range(H):
        on = mode[h] == 1
        rel = mode[h] == 2
        zact = mode[h] >= 1
        sh = s_hi[h] / P
        sact = s_hi[h] > 0.0
        if zact:
            act[h, 0] = 1.0
            aeq[h, 0] = 1.0
            ccoef[h, 0] = 1.0
            use_eq = True
            mask[h, 0] = 1.0
            mask[h, 1] = 1.0
            Gl[h, 0, 0] = -1.0
            Gl[h, 1, 0] = 1.0
            hl[h, 1] = 1.0
            if on:
                Hd[h, 0] = hz / scale
                c[h, 0] = q[h] * P / scale
                hl[h, 0] = -L
                x0[h, 0] = 0.5 * (L + 1.0)
            else:
                c[h, 0] = (q[h] + beta * Lu) * P / scale
                hl[h, 0] = 0.0
                x0[h, 0] = 0.25 * (L + 1.0)
        if rel and beta > 0.0:
            act[h, 2] = 1.0
            Hd[h, 2] = hz / scale
            c[h, 2] = beta * Lu * P / scale
            mask[h, 2] = 1.0
            mask[h, 3] = 1.0
            Gl[h, 2, 2] = -1.0
            Gl[h, 3, 0] = 1.0
            Gl[h, 3, 2] = -1.0
            hl[h, 2] = 0.0
            hl[h, 3] = L
            x0[h, 2] = 0.5 * (1.0 - L)
        if sact:
            act[h, 1] = 1.0
            aeq[h, 1] = 1.0
            use_eq = True
            mask[h, 4] = 1.0
            mask[h, 5] = 1.0
            Gl[h, 4, 1] = -1.0
            Gl[h, 5, 1] = 1.0
            hl[h, 4] = 0.0
            hl[h, 5] = sh
            x0[h, 1] = 0.5 * sh
        if zact or sact:
            mask[h, 6] = 1.0
            for k in range(3):
                Gl[h, 6, k] = aeq[h, k]
            hl[h, 6] = r_hi[h] / P
            if r_lo[h] > 0.0:
                mask[h, 7] = 1.0
                for k in range(3):
                    Gl[h, 7, k] = -aeq[h, k]
                hl[h, 7] = -r_lo[h] / P
    m_lo_s = m_lo / P
    x, m, obj, status, it = ip_solve(act, Hd, c, aeq, Gl, hl, mask, ccoef, cm / scale,
                                     m_lo_s, 1.0, total / P, use_eq, x0,
                                     0.5 * (m_lo_s + 1.0), tol, max_iter)
    z = np.zeros(H)
    s = np.zeros(H)
    u = np.zeros(H)
    for h in range(H):
        if mode[h] == 1:
            z[h] = x[h, 0] * P
            u[h] = 1.0
        elif mode[h] == 2:
            z[h] = x[h, 0] * P
            u[h] = min(1.0, x[h, 0] / L)
        if s_hi[h] > 0.0:
            s[h] = x[h, 1] * P
    return z, s, u, m * P, obj * scale, status, it

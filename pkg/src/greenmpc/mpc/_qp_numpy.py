"""Vectorised numpy Mehrotra predictor-corrector for the hourly lighting QP."""
import numpy as np

STEP_FRACTION = 0.99
# on numerical breakdown, accept the iterate if it meets this multiple of tol
LOOSE_FACTOR = 100.0


def _max_step(v, dv, valid):
    neg = (dv < 0.0) & valid
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def ip_solve(act, Hd, c, aeq, Gl, hl, mask, ccoef, c_m, m_lo, m_hi, S, use_eq,
             x0, m0, tol, max_iter):
    H = Gl.shape[0]
    inactive = act <= 0.0
    x = x0.copy()
    m = m0
    y = 0.0
    valid = mask > 0.0
    zmask = np.any(ccoef > 0.0, axis=1)
    hasz = zmask.astype(np.float64)

    sl = np.where(valid, np.maximum(hl - np.einsum("hrk,hk->hr", Gl, x), 1.0), 1.0)
    lam = np.where(valid, 1.0, 0.0)
    slc = np.where(zmask, np.maximum(m - np.sum(ccoef * x, axis=1), 1.0), 1.0)
    lamc = np.where(zmask, 1.0, 0.0)
    slm = np.maximum(np.array([m - m_lo, m_hi - m]), 1.0)
    lamm = np.ones(2)
    nrow = valid.sum() + zmask.sum() + 2.0
    cnorm = 1.0 + max(float(np.max(np.abs(c), initial=0.0)), abs(c_m))
    bnorm = 1.0 + max(abs(S), float(np.max(np.abs(hl), initial=0.0)), abs(m_lo), abs(m_hi))

    status = 1
    it = 0
    for it in range(max_iter):
        Gx = np.einsum("hrk,hk->hr", Gl, x)
        rg = (Gx + sl - hl) * mask
        rgc = (np.sum(ccoef * x, axis=1) - m + slc) * hasz
        rgm = np.array([-m + slm[0] + m_lo, m + slm[1] - m_hi])
        rd = Hd * x + c + aeq * y + np.einsum("hrk,hr->hk", Gl, lam * mask)
        rd += (lamc * hasz)[:, None] * ccoef
        rd[inactive] = 0.0
        rdm = c_m - np.sum(lamc * hasz) - lamm[0] + lamm[1]
        rp = float(np.sum(aeq * x) - S) if use_eq else 0.0

        comp = np.sum(sl * lam * mask) + np.sum(slc * lamc * hasz) + np.sum(slm * lamm)
        mu = comp / nrow
        pres = max(abs(rp), float(np.max(np.abs(rg), initial=0.0)),
                   float(np.max(np.abs(rgc), initial=0.0)), float(np.max(np.abs(rgm))))
        dres = max(float(np.max(np.abs(rd), initial=0.0)), abs(rdm))
        if pres <= tol * bnorm and dres <= tol * cnorm and comp <= tol * cnorm:
            status = 0
            break
        lt = LOOSE_FACTOR * tol
        loose = pres <= lt * bnorm and dres <= lt * cnorm and comp <= lt * cnorm
        if not comp > 1e-300 or not np.isfinite(comp):
            status = 0 if loose else 2
            break

        D = np.where(valid, lam / sl, 0.0)
        Dc = np.where(zmask, lamc / slc, 0.0)
        Dm = lamm / slm
        K = np.einsum("hrk,hr,hrl->hkl", Gl, D, Gl)
        K += Dc[:, None, None] * ccoef[:, :, None] * ccoef[:, None, :]
        K += Hd[:, :, None] * np.eye(3)[None]
        K[inactive] = 0.0
        K.transpose(0, 2, 1)[inactive] = 0.0
        hi_, ki_ = np.nonzero(inactive)
        K[hi_, ki_, ki_] = 1.0
        Kmm = float(np.sum(Dm))

        kvec = np.zeros((H, 3))
        kvec = -Dc[:, None] * ccoef
        Kmm += float(np.sum(Dc))
        try:
            both = np.linalg.solve(K, np.stack([kvec, aeq], axis=2))
        except np.linalg.LinAlgError:
            status = 0 if loose else 2
            break
        P1 = both[:, :, 0]
        P2 = both[:, :, 1]
        M11 = Kmm - np.sum(kvec * P1)
        M12 = -np.sum(kvec * P2)
        M22 = -np.sum(aeq * P2)
        if (M11 * M22 - M12 * M12 == 0.0) if use_eq else M11 == 0.0:
            status = 0 if loose else 2
            break

        def newton(rc, rcc, rcm):
            t = np.where(valid, (rc + lam * rg) / sl, 0.0)
            tc = np.where(zmask, (rcc + lamc * rgc) / slc, 0.0)
            tm = (rcm + lamm * rgm) / slm
            rhs = -rd - np.einsum("hrk,hr->hk", Gl, t)
            rhs -= tc[:, None] * ccoef
            rhs[inactive] = 0.0
            rhs_m = -rdm + np.sum(tc) + tm[0] - tm[1]
            rhs_y = -rp
            p = np.linalg.solve(K, rhs[:, :, None])[:, :, 0]
            r1 = rhs_m - np.sum(kvec * p)
            r2 = rhs_y - np.sum(aeq * p)
            if use_eq:
                det = M11 * M22 - M12 * M12
                dm = (r1 * M22 - M12 * r2) / det
                dy = (M11 * r2 - M12 * r1) / det
            else:
                dm = r1 / M11
                dy = 0.0
            dx = p - P1 * dm - P2 * dy
            dx[inactive] = 0.0
            ds = -rg - np.einsum("hrk,hk->hr", Gl, dx) * mask
            dsc = (-rgc - (np.sum(ccoef * dx, axis=1) - dm)) * hasz
            dsm = np.array([-rgm[0] + dm, -rgm[1] - dm])
            dl = np.where(valid, (rc - lam * ds) / sl, 0.0)
            dlc = np.where(zmask, (rcc - lamc * dsc) / slc, 0.0)
            dlm = (rcm - lamm * dsm) / slm
            return dx, dm, dy, ds, dsc, dsm, dl, dlc, dlm

        def step_len(ds, dsc, dsm, dl, dlc, dlm):
            a = min(_max_step(sl, ds, valid), _max_step(slc, dsc, zmask),
                    _max_step(slm, dsm, np.ones(2, dtype=bool)),
                    _max_step(lam, dl, valid), _max_step(lamc, dlc, zmask),
                    _max_step(lamm, dlm, np.ones(2, dtype=bool)))
            return a

        rc = -sl * lam * mask
        rcc = -slc * lamc * hasz
        rcm = -slm * lamm
        aff = newton(rc, rcc, rcm)
        a_aff = step_len(*aff[3:])
        comp_aff = (np.sum((sl + a_aff * aff[3]) * (lam + a_aff * aff[6]) * mask)
                    + np.sum((slc + a_aff * aff[4]) * (lamc + a_aff * aff[7]) * hasz)
                    + np.sum((slm + a_aff * aff[5]) * (lamm + a_aff * aff[8])))
        sigma = (comp_aff / comp) ** 3
        smu = sigma * mu
        rc = (-sl * lam - aff[3] * aff[6] + smu) * mask
        rcc = (-slc * lamc - aff[4] * aff[7] + smu) * hasz
        rcm = -slm * lamm - aff[5] * aff[8] + smu
        dx, dm, dy, ds, dsc, dsm, dl, dlc, dlm = newton(rc, rcc, rcm)
        a = min(1.0, STEP_FRACTION * step_len(ds, dsc, dsm, dl, dlc, dlm))
        if a < 1e-14 or not np.isfinite(dm):
            status = 0 if loose else 2
            break

        x = x + a * dx
        m = m + a * dm
        y = y + a * dy
        sl = np.where(valid, sl + a * ds, 1.0)
        lam = lam + a * dl
        slc = np.where(zmask, slc + a * dsc, 1.0)
        lamc = lamc + a * dlc
        slm = slm + a * dsm
        lamm = lamm + a * dlm
    else:
        it = max_iter

    obj = 0.5 * np.sum(Hd * x * x) + np.sum(c * x) + c_m * m
    return x, m, float(obj), status, it

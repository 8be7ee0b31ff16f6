"""Quantile-fence outlier removal and gap filling."""
import numpy as np

Q_LOW = 10.0
Q_HIGH = 80.0
FENCE_K = 1.5


def iqr_fences(values, q_low=Q_LOW, q_high=Q_HIGH, k=FENCE_K):
    """Return ``(lower, upper)`` with ``IQR = Q(q_high) - Q(q_low)``."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    q1, q3 = np.percentile(v, [q_low, q_high])
    iqr = q3 - q1
    return q1 - k * iqr, q3 + k * iqr


def iqr_clean(values, q_low=Q_LOW, q_high=Q_HIGH, k=FENCE_K):
    """Drop values outside the quantile fences.

    Fences are recomputed on the surviving values until nothing more falls
    outside, so cleaning a cleaned series is a no-op. Returns
    ``(cleaned, removed)``: ``cleaned`` has NaN at removed positions (it stays
    aligned with its timestamps) and ``removed`` is the boolean mask. A
    constant series has zero spread and loses nothing.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 10:
        raise ValueError("iqr_clean needs a 1-D series of at least 10 values")
    out = v.copy()
    removed = np.zeros(v.size, dtype=bool)
    while True:
        keep = np.isfinite(out)
        if keep.sum() < 2:
            break
        lo, hi = iqr_fences(out[keep], q_low, q_high, k)
        if hi == lo:
            break
        new = keep & ((out < lo) | (out > hi))
        if not new.any():
            break
        removed |= new
        out[new] = np.nan
    return out, removed


def fill_gaps(values):
    """Linear interpolation over NaN runs; edges take the nearest finite value."""
    v = np.asarray(values, dtype=float).copy()
    bad = ~np.isfinite(v)
    if not bad.any():
        return v
    if bad.all():
        raise ValueError("series has no finite values")
    idx = np.arange(v.size)
    v[bad] = np.interp(idx[bad], idx[~bad], v[~bad])
    return v

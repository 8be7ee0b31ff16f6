"""Numba dispatch for the hot kernels.

Set ``GREENMPC_DISABLE_NUMBA=1`` to run the pure-numpy fallback path instead
of the jitted kernels. The flag is read once at import time.
"""
import os

_FLAG = os.environ.get("GREENMPC_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` in nopython mode with an on-disk cache.

    Falls back to the plain Python function when numba is unavailable; callers
    that care about speed dispatch on :data:`USE_NUMBA` instead.
    """
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)

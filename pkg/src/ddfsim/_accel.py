"""Acceleration switch for the hot kernels.

Kernels are compiled with numba unless the environment variable DDFSIM_NO_NUMBA
is set to a non-empty value or numba is not importable; then the fallback
implementations run as-is.  Both paths share signatures and semantics, so the
flag only trades speed.
"""

import os

NUMBA_DISABLED = bool(os.environ.get("DDFSIM_NO_NUMBA", ""))

try:
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not NUMBA_DISABLED


def maybe_jit(func):
    """Compile func with numba when the jit path is active, else return it unchanged."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def force_jit(func):
    """Compile func with numba regardless of the env flag (benchmark use). Requires numba."""
    if not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    return numba.njit(cache=True)(func)

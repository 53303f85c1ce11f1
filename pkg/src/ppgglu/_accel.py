"""Numba switch.

Hot kernels are written twice: a numba ``@njit`` version and a pure-numpy
version. ``PPGGLU_DISABLE_NUMBA=1`` (read once, at import) forces the numpy
path; a missing numba install does the same.
"""
import os

_DISABLED = os.environ.get("PPGGLU_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by PPGGLU_DISABLE_NUMBA")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend():
    return "numba" if HAVE_NUMBA else "numpy"

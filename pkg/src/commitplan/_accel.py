"""Numba switch.

Kernels are compiled with ``numba.njit`` unless numba is missing or the
environment variable ``COMMITPLAN_DISABLE_NUMBA`` is set to a truthy value,
in which case the pure-numpy implementations are used instead.
"""
import os

_FLAG = os.environ.get("COMMITPLAN_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if not HAS_NUMBA:
        return fn
    return numba.njit(cache=False, nogil=True)(fn)

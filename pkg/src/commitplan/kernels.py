"""Hot numeric kernels.

Each kernel has a loop implementation compiled by numba and a vectorised
numpy implementation. The public function dispatches on
:data:`commitplan._accel.USE_NUMBA`; pass ``use_numba=`` to force a path
(tests compare both, ``benchmarks/bench_kernels.py`` times them).

All kernels return plain sums without the time step; callers multiply by
``dt`` themselves.
"""
import numpy as np

from . import _accel
from ._accel import njit

_SWEEP_CHUNK = 1 << 22  # max cells per broadcast block in the numpy sweep


def _pick(use_numba):
    return _accel.USE_NUMBA if use_numba is None else (use_numba and _accel.HAS_NUMBA)


# --- hinge areas at a single level -------------------------------------------

@njit
def _hinge_nb(values, c):
    over = 0.0
    under = 0.0
    for i in range(values.shape[0]):
        d = values[i] - c
        if d > 0.0:
            over += d
        else:
            under -= d
    return over, under


def _hinge_np(values, c):
    d = values - c
    return float(np.sum(d[d > 0.0])), float(-np.sum(d[d < 0.0]))


def hinge_areas(values, c, use_numba=None):
    """Return ``(sum (v - c)+, sum (c - v)+)``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if _pick(use_numba):
        over, under = _hinge_nb(values, float(c))
        return float(over), float(under)
    return _hinge_np(values, float(c))


# --- hinge areas at many levels ----------------------------------------------

@njit
def _sweep_nb(values, levels):
    m = levels.shape[0]
    over = np.zeros(m)
    under = np.zeros(m)
    for j in range(m):
        c = levels[j]
        o = 0.0
        u = 0.0
        for i in range(values.shape[0]):
            d = values[i] - c
            if d > 0.0:
                o += d
            else:
                u -= d
        over[j] = o
        under[j] = u
    return over, under


def _sweep_np(values, levels):
    m = levels.shape[0]
    over = np.empty(m)
    under = np.empty(m)
    step = max(1, _SWEEP_CHUNK // max(1, values.shape[0]))
    for lo in range(0, m, step):
        d = values[None, :] - levels[lo:lo + step, None]
        over[lo:lo + step] = np.where(d > 0.0, d, 0.0).sum(axis=1)
        under[lo:lo + step] = np.where(d < 0.0, -d, 0.0).sum(axis=1)
    return over, under


def sweep_hinge_areas(values, levels, use_numba=None):
    """Vectorised :func:`hinge_areas` over an array of levels."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    levels = np.ascontiguousarray(levels, dtype=np.float64)
    if _pick(use_numba):
        return _sweep_nb(values, levels)
    return _sweep_np(values, levels)


# --- hinge areas against a time-varying level ---------------------------------

@njit
def _varying_nb(values, levels):
    over = 0.0
    under = 0.0
    for i in range(values.shape[0]):
        d = values[i] - levels[i]
        if d > 0.0:
            over += d
        else:
            under -= d
    return over, under


def _varying_np(values, levels):
    return _hinge_np(values - levels, 0.0)


def varying_hinge_areas(values, levels, use_numba=None):
    """Hinge areas where sample ``i`` is compared with ``levels[i]``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    levels = np.ascontiguousarray(levels, dtype=np.float64)
    if values.shape != levels.shape:
        raise ValueError("values and levels must have the same shape")
    if _pick(use_numba):
        over, under = _varying_nb(values, levels)
        return float(over), float(under)
    return _varying_np(values, levels)


# --- resize hold -------------------------------------------------------------

@njit
def _hold_nb(desired, min_gap):
    n = desired.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    current = desired[0]
    last = 0
    for t in range(n):
        if desired[t] != current and t - last >= min_gap:
            current = desired[t]
            last = t
        out[t] = current
    return out


def _hold_np(desired, min_gap):
    # The hold is inherently sequential; this path is the same loop in CPython.
    n = desired.shape[0]
    out = np.empty(n)
    if n == 0:
        return out
    current = desired[0]
    last = 0
    for t in range(n):
        if desired[t] != current and t - last >= min_gap:
            current = desired[t]
            last = t
        out[t] = current
    return out


def hold_resizes(desired, min_gap, use_numba=None):
    """Follow ``desired`` but change value at most once every ``min_gap`` steps.

    The first sample counts as a change, so the earliest resize happens at
    index ``min_gap``.
    """
    desired = np.ascontiguousarray(desired, dtype=np.float64)
    min_gap = int(min_gap)
    if min_gap < 1:
        raise ValueError("min_gap must be >= 1")
    if _pick(use_numba):
        return _hold_nb(desired, min_gap)
    return _hold_np(desired, min_gap)


# --- look-ahead quantile -----------------------------------------------------

@njit
def _ahead_quantile_nb(values, width, k):
    # Walk backwards keeping values[t:t+width] sorted: insert the entering
    # sample and drop the leaving one, O(width) per step.
    n = values.shape[0]
    out = np.empty(n)
    win = np.empty(width)
    size = 0
    for t in range(n - 1, -1, -1):
        if t + width < n:
            gone = values[t + width]
            j = 0
            while win[j] != gone:
                j += 1
            for i in range(j, size - 1):
                win[i] = win[i + 1]
            size -= 1
        v = values[t]
        j = size
        while j > 0 and win[j - 1] > v:
            win[j] = win[j - 1]
            j -= 1
        win[j] = v
        size += 1
        out[t] = win[min(k, size - 1)]
    return out


def _ahead_quantile_np(values, width, k):
    n = values.shape[0]
    padded = np.concatenate([values, np.full(width - 1, np.nan)])
    win = np.lib.stride_tricks.sliding_window_view(padded, width)[:n]
    # Trailing windows are short; NaN sorts last so the count of finite
    # entries bounds the index.
    srt = np.sort(win, axis=1)
    counts = np.minimum(width, n - np.arange(n))
    idx = np.minimum(k, counts - 1)
    return srt[np.arange(n), idx]


def ahead_quantile(values, width, k, use_numba=None):
    """Order statistic ``k`` (0-based) of ``values[t:t+width]`` for every ``t``."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    width = int(width)
    k = int(k)
    if width < 1 or k < 0 or k >= width:
        raise ValueError("need width >= 1 and 0 <= k < width")
    if values.shape[0] == 0:
        return np.empty(0)
    if _pick(use_numba):
        return _ahead_quantile_nb(values, width, k)
    return _ahead_quantile_np(values, width, k)

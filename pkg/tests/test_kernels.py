import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from commitplan import kernels
from commitplan._accel import HAS_NUMBA

from oracles import hinge_cost

finite = st.floats(0, 1e4, allow_nan=False, allow_infinity=False)
demand = arrays(np.float64, st.integers(1, 80), elements=finite)
needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")


@given(demand, finite)
def test_hinge_matches_loop(vals, c):
    over, under = kernels.hinge_areas(vals, c, use_numba=False)
    assert np.isclose(hinge_cost(vals, c, 1.0, 0.0), over, rtol=1e-12, atol=1e-9)
    assert np.isclose(hinge_cost(vals, c, 0.0, 1.0), under, rtol=1e-12, atol=1e-9)


@needs_numba
@given(demand, arrays(np.float64, st.integers(1, 30), elements=finite))
def test_sweep_parity(vals, levels):
    a = kernels.sweep_hinge_areas(vals, levels, use_numba=True)
    b = kernels.sweep_hinge_areas(vals, levels, use_numba=False)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-10, atol=1e-8)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-10, atol=1e-8)


@needs_numba
@given(demand)
def test_hinge_and_varying_parity(vals):
    c = float(np.median(vals))
    assert np.allclose(kernels.hinge_areas(vals, c, use_numba=True), kernels.hinge_areas(vals, c, use_numba=False))
    lv = vals[::-1].copy()
    assert np.allclose(
        kernels.varying_hinge_areas(vals, lv, use_numba=True),
        kernels.varying_hinge_areas(vals, lv, use_numba=False),
    )


def _hold_reference(desired, gap):
    out = np.empty_like(desired)
    last, cur = 0, desired[0]
    for i, d in enumerate(desired):
        if d != cur and i - last >= gap:
            cur, last = d, i
        out[i] = cur
    return out


@pytest.mark.parametrize("use_numba", [False, pytest.param(True, marks=needs_numba)])
@given(arrays(np.float64, st.integers(1, 60), elements=st.integers(0, 5).map(float)), st.integers(1, 7))
def test_hold_resizes(use_numba, desired, gap):
    got = kernels.hold_resizes(desired, gap, use_numba=use_numba)
    np.testing.assert_array_equal(got, _hold_reference(desired, gap))
    changes = np.flatnonzero(np.diff(got) != 0) + 1
    assert np.all(np.diff(np.concatenate([[0], changes])) >= gap)


@pytest.mark.parametrize("use_numba", [False, pytest.param(True, marks=needs_numba)])
@given(arrays(np.float64, st.integers(1, 40), elements=finite), st.integers(1, 6), st.data())
def test_ahead_quantile(use_numba, vals, width, data):
    k = data.draw(st.integers(0, width - 1))
    got = kernels.ahead_quantile(vals, width, k, use_numba=use_numba)
    for t in range(vals.shape[0]):
        win = np.sort(vals[t:t + width])
        assert got[t] == win[min(k, win.shape[0] - 1)]

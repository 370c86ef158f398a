from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from commitplan.errors import AlignmentMismatch, ConfigError, InsufficientHistory
from commitplan.freepool import (
    PoolPenalties,
    PoolPolicy,
    backtest_pool,
    compare_policies,
    net_demand,
    optimal_static_pool,
    oracle_pool,
    pool_cost,
    predict_pool,
)
from commitplan.series import MINUTE, DemandSeries
from commitplan.synthetic import spiky_pool_trace

from conftest import MONDAY
from oracles import exhaustive_static_pool

PEN = PoolPenalties(1.0, 3.0)


def minutes(vals):
    return DemandSeries(MONDAY, MINUTE, np.asarray(vals, float))


def test_cost_trivial():
    d = minutes([5, 10])
    assert pool_cost(d, oracle_pool(d), PEN).total == 0.0
    flat = PoolPolicy(d.start, MINUTE, [7, 7])
    c = pool_cost(d, flat, PEN)
    assert c.total == 11 and c.over_total == 2 and c.under_total == 9


def test_alignment_checked():
    d = minutes([5, 10])
    with pytest.raises(AlignmentMismatch):
        pool_cost(d, PoolPolicy(d.start, MINUTE, [7, 7, 7]), PEN)
    with pytest.raises(ConfigError):
        PoolPolicy(d.start, MINUTE, [1, 2], kind="static")


def test_static_quantiles():
    d = minutes([1, 5, 2, 9, 7])
    assert optimal_static_pool(d, PoolPenalties(1, 1)).sizes[0] == 5
    vals = np.arange(1, 101)
    assert optimal_static_pool(minutes(vals), PoolPenalties(1, 99)).sizes[0] == 99


@given(st.lists(st.integers(0, 30), min_size=1, max_size=60), st.integers(1, 5), st.integers(1, 5))
def test_static_matches_exhaustive(vals, p_o, p_u):
    pen = PoolPenalties(float(p_o), float(p_u))
    d = minutes(vals)
    size, cost = exhaustive_static_pool(vals, pen.p_o, pen.p_u)
    policy = optimal_static_pool(d, pen)
    assert pool_cost(d, policy, pen).total == pytest.approx(cost)
    assert policy.sizes[0] == size


def test_constant_history_predicts_constant():
    hist = minutes(np.full(24 * 60, 12.0))
    pol = predict_pool(hist, PEN)
    assert len(pol.sizes) == 60 and np.all(pol.sizes == 12.0)


def test_sizes_rise_for_hourly_spike():
    hist = spiky_pool_trace(hours=30)
    pol = predict_pool(hist, PEN)
    # hist ends on the hour, so index 0 is minute 0 of the next hour.
    assert pol.sizes[0] >= pol.sizes[30]
    assert pol.sizes[0] > pol.sizes[30]


def test_backtest_beats_static_and_respects_gaps():
    trace = spiky_pool_trace(hours=72)
    for gap in (1, 2, 5):
        evaluated, pol = backtest_pool(trace, PEN, min_resize_interval=timedelta(minutes=gap))
        changes = np.concatenate([[0], pol.resize_points()])
        assert np.all(np.diff(changes) >= gap)
        ranked = compare_policies(evaluated, [optimal_static_pool(evaluated, PEN), pol], PEN)
        assert ranked[0].name == "predicted"


def test_compare_policies():
    d = minutes([3, 8, 1, 4])
    static = optimal_static_pool(d, PEN)
    ranked = compare_policies(d, [static, oracle_pool(d)], PEN)
    assert [r.name for r in ranked] == ["oracle", "static-optimal"] and ranked[0].total == 0
    assert len(compare_policies(d, [static], PEN)) == 1


def test_naive_and_errors():
    trace = spiky_pool_trace(hours=30)
    pol = predict_pool(trace, PEN, model="naive")
    assert len(pol.sizes) == 60
    with pytest.raises(ConfigError):
        predict_pool(trace, PEN, horizon=timedelta(hours=2))
    with pytest.raises(InsufficientHistory):
        predict_pool(minutes(np.ones(30)), PEN)
    with pytest.raises(ConfigError):
        PoolPenalties(0.0, 1.0)
    np.testing.assert_array_equal(net_demand([5, 1], [2, 4]), [3, 0])

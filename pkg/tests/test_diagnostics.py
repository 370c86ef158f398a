from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, strategies as st

from commitplan.diagnostics import (
    holiday_delta,
    lag_autocorrelation,
    periodicity_ratios,
    resample,
    week_over_week_growth,
    window_demand_delta,
)
from commitplan.errors import InsufficientSpan, LagTooLarge, NonIntegerRatio, ZeroVariance
from commitplan.series import DAY, HOUR, DateRange, DemandSeries
from commitplan.synthetic import fleet_demand

from conftest import MONDAY, hourly
from oracles import pearson_lag


def test_resample_trivial():
    assert list(resample(hourly(np.full(48, 5.0)), "day", "mean").values) == [5, 5]
    assert list(resample(hourly(np.arange(24.0)), "day", "sum").values) == [276]


def test_resample_drops_partial_days():
    s = hourly(np.ones(24 * 3 + 7), start=datetime(2024, 1, 1, 20, tzinfo=timezone.utc))
    out = resample(s, DAY, "sum")
    assert out.start == datetime(2024, 1, 2, tzinfo=timezone.utc)
    assert len(out) == 3


def test_resample_non_integer_ratio():
    s = DemandSeries(MONDAY, "day", np.ones(10))
    with pytest.raises(NonIntegerRatio):
        resample(s, HOUR)


def test_autocorrelation_trivial():
    sin7 = 10 + np.sin(2 * np.pi * np.arange(70) / 7)
    assert abs(lag_autocorrelation(sin7, 7) - 1.0) < 1e-6
    alt = np.tile([1.0, 3.0], 30)
    assert abs(lag_autocorrelation(alt, 1) + 1.0) < 1e-6
    with pytest.raises(ZeroVariance):
        lag_autocorrelation(np.full(20, 4.0), 7)
    with pytest.raises(LagTooLarge):
        lag_autocorrelation(np.arange(5.0), 7)


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=12, max_size=60), st.integers(1, 5))
def test_autocorrelation_matches_loop(vals, lag):
    x = np.asarray(vals)
    a, b = x[:-lag], x[lag:]
    if np.ptp(a) < 1e-6 or np.ptp(b) < 1e-6:
        return
    assert np.isclose(lag_autocorrelation(x, lag), pearson_lag(x, lag), atol=1e-9)


def test_periodicity_trivial():
    r = periodicity_ratios(hourly(np.full(24 * 21, 7.0)))
    assert r.weekly_ratio == 0.0 and r.diurnal_ratio == 0.0
    day = np.where((np.arange(24) >= 9) & (np.arange(24) < 17), 2.0, 1.0)
    week = np.concatenate([day] * 5 + [np.ones(24)] * 2)
    r = periodicity_ratios(hourly(np.tile(week, 3)))
    for d, ratio in enumerate(r.daily_ratios):
        assert ratio == (1.0 if d % 7 < 5 else 0.0)


def test_periodicity_needs_two_weeks():
    with pytest.raises(InsufficientSpan):
        periodicity_ratios(hourly(np.ones(24 * 10)))


def test_periodicity_excludes_zero_minimum_windows():
    vals = np.ones(24 * 21)
    vals[5] = 0.0
    with pytest.warns(RuntimeWarning):
        r = periodicity_ratios(hourly(vals))
    assert r.excluded_days == 1


def test_week_over_week():
    weeks = np.repeat(2.0 ** np.arange(5), 168)
    np.testing.assert_allclose(week_over_week_growth(hourly(weeks)), 1.0)
    np.testing.assert_array_equal(week_over_week_growth(hourly(np.full(168 * 3, 9.0))), 0.0)


def test_window_delta_trivial():
    start = datetime(2023, 12, 1, tzinfo=timezone.utc)
    vals = np.full(24 * 40, 10.0)
    vals[24 * 23:] = 5.0
    s = hourly(vals, start)
    base = DateRange("2023-12-10", "2023-12-23")
    assert window_demand_delta(s, base, base) == 0.0
    assert window_demand_delta(s, DateRange("2023-12-24", "2024-01-06"), base) == -0.5


def test_holiday_delta_recovers_generator():
    s = fleet_demand(weeks=160, annual_growth=0.0, holiday_factor=0.92, noise=0.0)
    hd = holiday_delta(s)
    assert len(hd.per_year) == 3
    # Dec 24 - Jan 1 is dipped by 8%, Jan 2 - 6 is not: 9 of 14 days.
    assert -0.08 < hd.mean_delta < -0.03

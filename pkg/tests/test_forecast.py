import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from commitplan.errors import ConfigError, HorizonTooLong, InsufficientHistory, LengthMismatch
from commitplan.forecast import (
    ForecastConfig,
    ForecastModel,
    backtest,
    fit,
    pinball_loss,
    predict,
)
from commitplan.series import DemandSeries, RecurringWindow
from commitplan.synthetic import business_week_profile, fleet_demand

from conftest import MONDAY, hourly

NO_HOLIDAYS = ForecastConfig(trend_kind="linear", holiday_windows=())


def _generator_values(start, hours, level, growth, holiday):
    return fleet_demand(start=start, weeks=hours // 168, level=level, annual_growth=growth,
                        holiday_factor=holiday, noise=0.0).values


def test_constant_history_fixed_point():
    m = fit(hourly(np.full(168 * 9, 10.0)), NO_HOLIDAYS)
    assert m.slope_per_week == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(m.weekly_profile.factors, 1.0)
    np.testing.assert_allclose(predict(m, 168).series.values, 10.0)


def test_repeated_week_fixed_point():
    week = 50 * business_week_profile()
    m = fit(hourly(np.tile(week, 10)), NO_HOLIDAYS)
    np.testing.assert_allclose(predict(m, 336).series.values, np.tile(week, 2), rtol=1e-6)


def test_log_slope_of_doubling_series():
    t = np.arange(168 * 30) / 168
    vals = 20 * 2 ** (t / 26) * np.tile(business_week_profile(), 30)
    m = fit(hourly(vals), ForecastConfig("linear_log", holiday_windows=()))
    assert m.slope_per_week == pytest.approx(math.log(2) / 26, rel=1e-9)


@pytest.mark.parametrize("kind", ["linear_log", "auto"])
def test_noiseless_recovery_with_holiday(kind):
    start = datetime(2021, 1, 4, tzinfo=timezone.utc)
    full = fleet_demand(start=start, weeks=160, annual_growth=0.4, holiday_factor=0.92, noise=0.0)
    n_hist = 150 * 168
    hist = full.with_values(full.values[:n_hist])
    m = fit(hist, ForecastConfig(kind))
    assert m.trend_kind == "linear_log"
    fc = predict(m, 10 * 168).series
    np.testing.assert_allclose(fc.values, full.values[n_hist:], rtol=1e-6)
    assert m.holiday_adjustments[0].factor == pytest.approx(0.92, rel=1e-9)


def test_holiday_factor_reduces_by_exactly_eight_percent():
    hist = fleet_demand(weeks=104, annual_growth=0.2, holiday_factor=0.92, noise=0.0)
    m = fit(hist, ForecastConfig("linear_log"))
    secs = hist.epoch_times()
    window = RecurringWindow(12, 24, 12, 31).mask(secs)
    ratio = m.values_at(secs[window]) / m.values_at(secs[window], holidays=False)
    np.testing.assert_allclose(ratio, 0.92, rtol=1e-9)


def test_linear_recovery():
    t = np.arange(168 * 12) / 168
    prof = np.tile(business_week_profile(), 14)
    vals = (40 + 1.5 * np.arange(168 * 14) / 168) * prof
    m = fit(hourly(vals[: 168 * 12]), NO_HOLIDAYS)
    np.testing.assert_allclose(predict(m, 336).series.values, vals[168 * 12:], rtol=1e-6)
    assert m.slope_per_week == pytest.approx(1.5) and len(t)


def test_model_json_round_trip():
    m = fit(fleet_demand(weeks=20, noise=0.01))
    back = ForecastModel.loads(m.dumps())
    secs = m.fitted_end.timestamp() + 3600 * np.arange(500)
    np.testing.assert_array_equal(back.values_at(secs.astype(np.int64)), m.values_at(secs.astype(np.int64)))
    with pytest.raises(ConfigError):
        ForecastModel.loads('{"trend": {}}')


def test_errors():
    with pytest.raises(InsufficientHistory):
        fit(hourly(np.ones(168 * 7)))
    m = fit(hourly(np.full(168 * 8, 3.0)), NO_HOLIDAYS)
    with pytest.raises(HorizonTooLong):
        predict(m, 52 * 168 + 1)
    with pytest.raises(ConfigError):
        fit(DemandSeries(MONDAY, "day", np.ones(100)))
    with pytest.raises(ConfigError):
        ForecastConfig(tuning_tau=1.0)


def test_nonpositive_values_fall_back_to_linear():
    vals = np.tile(business_week_profile(), 9) * 10
    vals[::24] = 0.0
    m = fit(hourly(vals), ForecastConfig("linear_log", holiday_windows=()))
    assert m.trend_kind == "linear" and "nonpositive_values_linear_fallback" in m.flags


def test_pinball_trivial():
    assert pinball_loss([1.0, 2.0], [1.0, 2.0], 0.3) == 0.0
    assert pinball_loss([10.0], [8.0], 0.677) == pytest.approx(1.354)
    with pytest.raises(LengthMismatch):
        pinball_loss([1.0], [1.0, 2.0], 0.5)


vec = arrays(np.float64, 20, elements=st.floats(-1e3, 1e3, allow_nan=False))


@given(vec, vec, st.floats(0, 1))
def test_pinball_identities(a, p, tau):
    loss = pinball_loss(a, p, tau)
    assert loss >= 0
    # tau=0.5 is half the mean absolute error.
    assert pinball_loss(a, p, 0.5) == pytest.approx(0.5 * np.mean(np.abs(a - p)), abs=1e-9)
    # Swapping the arguments mirrors tau.
    assert pinball_loss(p, a, 1 - tau) == pytest.approx(loss, abs=1e-9)
    # Loss is linear in tau for fixed errors.
    lo, hi = pinball_loss(a, p, 0.0), pinball_loss(a, p, 1.0)
    assert loss == pytest.approx((1 - tau) * lo + tau * hi, abs=1e-9)
    assert lo + hi == pytest.approx(np.mean(np.abs(a - p)), abs=1e-9)


def test_backtest_constant_and_single_fold():
    const = hourly(np.full(168 * 10, 5.0))
    res = backtest(const, NO_HOLIDAYS, folds=2)
    assert res.losses == pytest.approx((0.0, 0.0), abs=1e-12)
    s = fleet_demand(weeks=12, noise=0.03)
    one = backtest(s, ForecastConfig(), folds=1, horizon_hours=168)
    train = s.with_values(s.values[:-168])
    manual = pinball_loss(s.values[-168:], predict(fit(train), 168).series.values, ForecastConfig().tuning_tau)
    assert one.losses[0] == pytest.approx(manual)


def test_backtest_beats_naive():
    s = fleet_demand(weeks=20, noise=0.05, seed=3)
    cfg = ForecastConfig()
    model = backtest(s, cfg, folds=5)
    naive = backtest(s, cfg, folds=5, model="naive")
    wins = sum(m < n for m, n in zip(model.losses, naive.losses))
    assert wins >= 4
    with pytest.raises(InsufficientHistory):
        backtest(s, cfg, folds=20)

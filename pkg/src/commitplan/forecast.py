"""Hourly trend x weekly-profile x holiday forecaster.

The model is deliberately small: a linear or log-linear trend in weeks, a
168-slot multiplicative hour-of-week profile, and one multiplicative factor
per recurring holiday window. Fitting alternates between the profile
(per-slot median of detrended demand) and the trend (least squares on
deseasonalised demand) until the parameters stop moving; hours inside
holiday windows are left out of both steps and only used to estimate the
holiday factors.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    HorizonTooLong,
    InsufficientHistory,
    LengthMismatch,
)
from .series import (
    HOUR,
    HOURS_PER_WEEK,
    DemandSeries,
    HourOfWeekProfile,
    RecurringWindow,
    as_utc,
    epoch_seconds,
    hour_of_week_index,
)

TREND_KINDS = ("linear", "linear_log", "auto")
MAX_HORIZON_HOURS = 52 * HOURS_PER_WEEK
MIN_HISTORY_WEEKS = 8
DEFAULT_TAU = 2.1 / 3.1
CHRISTMAS = RecurringWindow(12, 24, 1, 1, "christmas-new-year")
_SECONDS_PER_WEEK = HOURS_PER_WEEK * 3600


@dataclass(frozen=True)
class ForecastConfig:
    trend_kind: str = "auto"
    holiday_windows: tuple = (CHRISTMAS,)
    tuning_tau: float = DEFAULT_TAU
    holdout_weeks: int = 4
    max_iter: int = 200

    def __post_init__(self):
        if self.trend_kind not in TREND_KINDS:
            raise ConfigError(f"trend_kind must be one of {TREND_KINDS}")
        if not 0.0 < self.tuning_tau < 1.0:
            raise ConfigError("tuning_tau must lie in (0, 1)")
        object.__setattr__(self, "holiday_windows", tuple(self.holiday_windows))


@dataclass(frozen=True)
class HolidayAdjustment:
    window: RecurringWindow
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise DataError("holiday factors must be positive")


@dataclass(frozen=True)
class ForecastModel:
    trend_kind: str
    intercept: float
    slope_per_week: float
    trend_origin: datetime
    weekly_profile: HourOfWeekProfile
    holiday_adjustments: tuple
    fitted_start: datetime
    fitted_end: datetime
    flags: tuple = field(default=())

    def __post_init__(self):
        if self.fitted_end <= self.fitted_start:
            raise DataError("fitted span is empty")

    def trend_at(self, epoch_secs) -> np.ndarray:
        t = (np.asarray(epoch_secs, dtype=np.float64) - epoch_seconds(self.trend_origin)) / _SECONDS_PER_WEEK
        lin = self.intercept + self.slope_per_week * t
        return np.exp(lin) if self.trend_kind == "linear_log" else lin

    def holiday_factor_at(self, epoch_secs) -> np.ndarray:
        out = np.ones(np.shape(epoch_secs))
        for adj in self.holiday_adjustments:
            out[adj.window.mask(epoch_secs)] *= adj.factor
        return out

    def values_at(self, epoch_secs, holidays: bool = True) -> np.ndarray:
        secs = np.asarray(epoch_secs, dtype=np.int64)
        v = self.trend_at(secs) * self.weekly_profile.factors[hour_of_week_index(secs)]
        if holidays:
            v = v * self.holiday_factor_at(secs)
        return np.maximum(v, 0.0)

    def to_dict(self) -> dict:
        return {
            "trend": {
                "kind": self.trend_kind,
                "intercept": self.intercept,
                "slope_per_week": self.slope_per_week,
                "origin": self.trend_origin.isoformat(),
            },
            "weekly_profile": [float(x) for x in self.weekly_profile.factors],
            "holidays": [
                {"window": a.window.label(), "name": a.window.name, "factor": a.factor}
                for a in self.holiday_adjustments
            ],
            "fitted_span": {"start": self.fitted_start.isoformat(), "end": self.fitted_end.isoformat()},
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ForecastModel":
        try:
            tr = doc["trend"]
            return cls(
                trend_kind=tr["kind"],
                intercept=float(tr["intercept"]),
                slope_per_week=float(tr["slope_per_week"]),
                trend_origin=as_utc(tr["origin"]),
                weekly_profile=HourOfWeekProfile(doc["weekly_profile"]),
                holiday_adjustments=tuple(
                    HolidayAdjustment(RecurringWindow.parse(h["window"], h.get("name", "")), float(h["factor"]))
                    for h in doc.get("holidays", ())
                ),
                fitted_start=as_utc(doc["fitted_span"]["start"]),
                fitted_end=as_utc(doc["fitted_span"]["end"]),
                flags=tuple(doc.get("flags", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed forecast model: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str) -> "ForecastModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Forecast:
    series: DemandSeries
    origin: datetime
    horizon_hours: int


def _holiday_mask(secs, windows):
    mask = np.zeros(secs.shape[0], dtype=bool)
    for w in windows:
        mask |= w.mask(secs)
    return mask


def _profile(ratio, how, use):
    factors = np.empty(HOURS_PER_WEEK)
    for h in range(HOURS_PER_WEEK):
        sel = ratio[use & (how == h)]
        if sel.size == 0:
            raise InsufficientHistory(f"no usable history for hour-of-week slot {h}")
        factors[h] = np.median(sel)
    return factors


def _lstsq(t, y):
    X = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(coef[0]), float(coef[1])


def _fit_trend_profile(y, t, how, use, kind, max_iter):
    """Alternate profile and trend estimates on the hours flagged by ``use``."""
    # Starting trend from whole-week means (any 168-hour block holds every slot once).
    n_blocks = y.shape[0] // HOURS_PER_WEEK
    blocks = [
        b for b in range(n_blocks)
        if use[b * HOURS_PER_WEEK:(b + 1) * HOURS_PER_WEEK].all()
    ]
    if len(blocks) < 2:
        raise InsufficientHistory("need two holiday-free whole weeks to start the trend")
    centers = np.array([t[b * HOURS_PER_WEEK:(b + 1) * HOURS_PER_WEEK].mean() for b in blocks])
    means = np.array([y[b * HOURS_PER_WEEK:(b + 1) * HOURS_PER_WEEK].mean() for b in blocks])
    if kind == "linear_log":
        a, b = _lstsq(centers, np.log(means))
    else:
        a, b = _lstsq(centers, means)

    def trend(a, b):
        lin = a + b * t
        return np.exp(lin) if kind == "linear_log" else lin

    factors = np.ones(HOURS_PER_WEEK)
    for _ in range(max_iter):
        tr = trend(a, b)
        ok = use & (tr > 0)
        factors = _profile(np.where(ok, y / np.where(tr > 0, tr, 1.0), 0.0), how, ok)
        scale = factors.mean()
        if scale <= 0:
            raise DataError("demand is zero over the whole training span")
        factors = factors / scale
        p = factors[how]
        fit_on = use & (p > 0)
        deseason = y[fit_on] / p[fit_on]
        if kind == "linear_log":
            a_new, b_new = _lstsq(t[fit_on], np.log(deseason))
        else:
            a_new, b_new = _lstsq(t[fit_on], deseason)
        moved = abs(a_new - a) + abs(b_new - b)
        a, b = a_new, b_new
        if moved <= 1e-14 * (1.0 + abs(a) + abs(b)):
            break
    # Final profile against the converged trend, renormalised to mean 1.
    tr = trend(a, b)
    ok = use & (tr > 0)
    factors = _profile(np.where(ok, y / np.where(tr > 0, tr, 1.0), 0.0), how, ok)
    scale = factors.mean()
    factors = factors / scale
    if kind == "linear_log":
        a += np.log(scale)
    else:
        a, b = a * scale, b * scale
    return a, b, factors


def _fit_kind(history, kind, config, flags):
    y = history.values
    secs = history.epoch_times()
    t = (secs - secs[0]) / _SECONDS_PER_WEEK
    how = hour_of_week_index(secs)
    hol = _holiday_mask(secs, config.holiday_windows)
    use = ~hol
    if kind == "linear_log" and np.any(y <= 0):
        kind = "linear"
        flags.append("nonpositive_values_linear_fallback")
    a, b, factors = _fit_trend_profile(y, t, how, use, kind, config.max_iter)
    model = ForecastModel(
        trend_kind=kind,
        intercept=a,
        slope_per_week=b,
        trend_origin=history.start,
        weekly_profile=HourOfWeekProfile(factors),
        holiday_adjustments=(),
        fitted_start=history.start,
        fitted_end=history.end,
        flags=tuple(flags),
    )
    base = model.values_at(secs, holidays=False)
    adjustments = []
    for w in config.holiday_windows:
        inside = w.mask(secs) & (base > 0)
        factor = float(np.median(y[inside] / base[inside])) if inside.any() else 1.0
        adjustments.append(HolidayAdjustment(w, factor if factor > 0 else 1.0))
    return ForecastModel(
        trend_kind=kind,
        intercept=a,
        slope_per_week=b,
        trend_origin=history.start,
        weekly_profile=model.weekly_profile,
        holiday_adjustments=tuple(adjustments),
        fitted_start=history.start,
        fitted_end=history.end,
        flags=tuple(flags),
    )


def fit(history: DemandSeries, config: ForecastConfig | None = None) -> ForecastModel:
    """Fit the forecaster on at least eight weeks of hourly history.

    With ``trend_kind="auto"`` both trend kinds are fitted on all but the
    last ``holdout_weeks`` weeks, scored with :func:`pinball_loss` at
    ``tuning_tau`` on the held-out weeks, and the winner is refitted on the
    full history.
    """
    config = config or ForecastConfig()
    if history.granularity != HOUR:
        raise ConfigError("the forecaster needs hourly history")
    if len(history) < MIN_HISTORY_WEEKS * HOURS_PER_WEEK:
        raise InsufficientHistory(f"need {MIN_HISTORY_WEEKS} weeks of hourly history, got {len(history)} hours")
    kind = config.trend_kind
    flags = []
    if kind == "auto":
        kind, losses = _select_kind(history, config)
        flags.append("auto:" + ",".join(f"{k}={v:.6g}" for k, v in sorted(losses.items())))
    return _fit_kind(history, kind, config, flags)


def _select_kind(history, config):
    hold = config.holdout_weeks * HOURS_PER_WEEK
    train = history.with_values(history.values[:-hold])
    test = history.values[-hold:]
    test_secs = history.epoch_times()[-hold:]
    losses = {}
    for kind in ("linear", "linear_log"):
        try:
            m = _fit_kind(train, kind, config, [])
        except DataError:
            continue
        if m.trend_kind != kind:
            continue
        losses[kind] = pinball_loss(test, m.values_at(test_secs), config.tuning_tau)
    if not losses:
        return "linear", {}
    best = min(sorted(losses), key=lambda k: losses[k])
    return best, losses


def predict(model: ForecastModel, horizon_hours: int) -> Forecast:
    """Hourly forecast for the ``horizon_hours`` after the fitted span."""
    horizon_hours = int(horizon_hours)
    if horizon_hours < 1:
        raise ConfigError("horizon_hours must be >= 1")
    if horizon_hours > MAX_HORIZON_HOURS:
        raise HorizonTooLong(f"horizon {horizon_hours}h exceeds {MAX_HORIZON_HOURS}h")
    start = model.fitted_end
    secs = epoch_seconds(start) + 3600 * np.arange(horizon_hours, dtype=np.int64)
    series = DemandSeries(start, HOUR, model.values_at(secs))
    return Forecast(series=series, origin=start - HOUR, horizon_hours=horizon_hours)


def pinball_loss(actual, predicted, tau: float) -> float:
    """Mean of ``tau*(a-p)+ + (1-tau)*(p-a)+``."""
    if isinstance(actual, DemandSeries) and isinstance(predicted, DemandSeries):
        if actual.start != predicted.start or actual.granularity != predicted.granularity:
            raise LengthMismatch("actual and predicted series are not aligned")
    a = np.asarray(getattr(actual, "values", actual), dtype=np.float64)
    p = np.asarray(getattr(predicted, "values", predicted), dtype=np.float64)
    if a.shape != p.shape:
        raise LengthMismatch(f"lengths differ: {a.shape} vs {p.shape}")
    if not 0.0 <= tau <= 1.0:
        raise ConfigError("tau must lie in [0, 1]")
    if a.size == 0:
        raise LengthMismatch("empty series")
    d = a - p
    return float(np.mean(np.where(d > 0, tau * d, (tau - 1.0) * d)))


@dataclass(frozen=True)
class BacktestResult:
    losses: tuple
    mean_loss: float
    origins: tuple
    model: str


def _naive_forecast(train: DemandSeries, horizon: int) -> np.ndarray:
    return np.full(horizon, train.values[-1])


def backtest(
    history: DemandSeries,
    config: ForecastConfig | None = None,
    folds: int = 5,
    horizon_hours: int = HOURS_PER_WEEK,
    model: str = "fit",
) -> BacktestResult:
    """Rolling-origin evaluation over ``folds`` back-to-back test windows.

    The last fold ends at the end of ``history``; each earlier fold ends
    where the next one starts. ``model`` is ``"fit"`` (this forecaster) or
    ``"naive"`` (repeat the last observed value).
    """
    config = config or ForecastConfig()
    folds, horizon_hours = int(folds), int(horizon_hours)
    if folds < 1 or horizon_hours < 1:
        raise ConfigError("folds and horizon_hours must be >= 1")
    if model not in ("fit", "naive"):
        raise ConfigError("model must be 'fit' or 'naive'")
    n = len(history)
    first_origin = n - folds * horizon_hours
    min_train = MIN_HISTORY_WEEKS * HOURS_PER_WEEK if model == "fit" else 1
    if first_origin < min_train:
        raise InsufficientHistory(
            f"{folds} folds of {horizon_hours}h need {min_train + folds * horizon_hours}h of history"
        )
    losses, origins = [], []
    for k in range(folds):
        cut = first_origin + k * horizon_hours
        train = history.with_values(history.values[:cut])
        actual = history.values[cut:cut + horizon_hours]
        if model == "fit":
            pred = predict(fit(train, config), horizon_hours).series.values
        else:
            pred = _naive_forecast(train, horizon_hours)
        losses.append(pinball_loss(actual, pred, config.tuning_tau))
        origins.append((history.start + (cut - 1) * history.granularity).isoformat())
    return BacktestResult(tuple(losses), float(np.mean(losses)), tuple(origins), model)

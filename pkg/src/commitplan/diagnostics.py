"""Periodicity and trend diagnostics for demand series.

Buckets are aligned to the UTC calendar: days start at midnight and weeks
start Monday 00:00. Partial leading and trailing buckets are always dropped.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import (
    EmptyResult,
    InsufficientSpan,
    LagTooLarge,
    NonIntegerRatio,
    RangeOutOfBounds,
    ZeroBaseline,
    ZeroVariance,
    ConfigError,
)
from .series import DAY, HOUR, WEEK, WEEK_ANCHOR, DateRange, DemandSeries, parse_granularity

_AGGS = {"sum": np.sum, "mean": np.mean, "max": np.max}


def _calendar_blocks(series: DemandSeries, period: timedelta):
    """Reshape ``series`` into whole calendar-aligned periods.

    Returns ``(blocks, first_index)`` where ``blocks`` has one row per full
    period.
    """
    ratio, rem = divmod(period, series.granularity)
    if rem or ratio < 1:
        raise NonIntegerRatio(
            f"{period} is not an integer multiple of {series.granularity}"
        )
    offset = (series.start - WEEK_ANCHOR) % period
    lead = (period - offset) % period
    first, rem = divmod(lead, series.granularity)
    if rem:
        raise NonIntegerRatio(f"series start {series.start} is off the {period} grid")
    n_blocks = (len(series) - first) // ratio
    if n_blocks <= 0:
        return np.empty((0, ratio)), first
    vals = series.values[first:first + n_blocks * ratio]
    return vals.reshape(n_blocks, ratio), first


def resample(series: DemandSeries, target, agg: str = "sum") -> DemandSeries:
    """Aggregate ``series`` into calendar buckets of length ``target``."""
    target = parse_granularity(target)
    if agg not in _AGGS:
        raise ConfigError(f"unknown aggregation {agg!r}")
    blocks, first = _calendar_blocks(series, target)
    if blocks.shape[0] == 0:
        raise EmptyResult("no complete bucket in the series")
    return DemandSeries(
        start=series.start + first * series.granularity,
        granularity=target,
        values=_AGGS[agg](blocks, axis=1),
        unit_label=series.unit_label,
    )


def lag_autocorrelation(series, lag: int) -> float:
    """Pearson correlation between the series and itself shifted by ``lag``.

    Accepts a :class:`DemandSeries` or any 1-d array.
    """
    x = np.asarray(getattr(series, "values", series), dtype=np.float64)
    lag = int(lag)
    if lag < 1:
        raise LagTooLarge("lag must be a positive integer")
    if x.shape[0] <= lag + 1:
        raise LagTooLarge(f"series of length {x.shape[0]} too short for lag {lag}")
    if np.all(x == x[0]):
        raise ZeroVariance("autocorrelation undefined for a constant series")
    a = x[:-lag] - x[:-lag].mean()
    b = x[lag:] - x[lag:].mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if den == 0.0:
        raise ZeroVariance("one of the lagged halves is constant")
    return float(np.clip(np.dot(a, b) / den, -1.0, 1.0))


@dataclass(frozen=True)
class PeriodicityRatios:
    weekly_ratio: float
    diurnal_ratio: float
    weekly_ratios: np.ndarray
    daily_ratios: np.ndarray
    excluded_weeks: int
    excluded_days: int


def _max_over_min(blocks: np.ndarray):
    mins = blocks.min(axis=1)
    ok = mins > 0
    ratios = np.full(blocks.shape[0], np.nan)
    ratios[ok] = blocks[ok].max(axis=1) / mins[ok] - 1.0
    return ratios, int((~ok).sum())


def periodicity_ratios(series: DemandSeries) -> PeriodicityRatios:
    """Mean weekly (max/min of daily totals) and diurnal (max/min of hours) swings.

    Windows whose minimum is zero are skipped and counted in the
    ``excluded_*`` fields.
    """
    if series.granularity != HOUR:
        raise ConfigError("periodicity_ratios needs an hourly series")
    days, _ = _calendar_blocks(series, DAY)
    daily = resample(series, DAY, "sum") if days.shape[0] else None
    weeks = _calendar_blocks(daily, WEEK)[0] if daily is not None else np.empty((0, 7))
    if weeks.shape[0] < 2:
        raise InsufficientSpan("need at least two full Monday-based weeks")
    weekly_ratios, ex_w = _max_over_min(weeks)
    daily_ratios, ex_d = _max_over_min(days)
    if ex_w or ex_d:
        warnings.warn(
            f"excluded {ex_w} weeks and {ex_d} days with zero minimum demand",
            RuntimeWarning,
            stacklevel=2,
        )
    if np.all(np.isnan(weekly_ratios)) or np.all(np.isnan(daily_ratios)):
        raise ZeroBaseline("every window has a zero minimum")
    return PeriodicityRatios(
        weekly_ratio=float(np.nanmean(weekly_ratios)),
        diurnal_ratio=float(np.nanmean(daily_ratios)),
        weekly_ratios=weekly_ratios,
        daily_ratios=daily_ratios,
        excluded_weeks=ex_w,
        excluded_days=ex_d,
    )


def weekly_means(series: DemandSeries):
    """Means of each full Monday-based week and the start of the first one."""
    if series.granularity not in (HOUR, DAY):
        raise ConfigError("weekly statistics need hourly or daily granularity")
    blocks, first = _calendar_blocks(series, WEEK)
    return blocks.mean(axis=1), series.start + first * series.granularity


def week_over_week_growth(series: DemandSeries) -> np.ndarray:
    """Relative change of each full week's mean versus the previous week."""
    means, _ = weekly_means(series)
    if means.shape[0] < 2:
        raise InsufficientSpan("need at least two full weeks")
    prev = means[:-1]
    if np.any(prev == 0):
        raise ZeroBaseline("a week with zero mean demand precedes another week")
    return means[1:] / prev - 1.0


def _range_mean(series: DemandSeries, rng: DateRange) -> float:
    if rng.lo < series.start or rng.hi > series.end:
        raise RangeOutOfBounds(f"{rng.first}..{rng.last} is not covered by the series")
    return float(np.mean(series.slice_time(rng.lo, rng.hi).values))


def window_demand_delta(series: DemandSeries, window: DateRange, baseline: DateRange) -> float:
    """``mean(window) / mean(baseline) - 1``."""
    base = _range_mean(series, baseline)
    if base == 0:
        raise ZeroBaseline("baseline window has zero mean demand")
    return _range_mean(series, window) / base - 1.0


@dataclass(frozen=True)
class HolidayDelta:
    mean_delta: float
    per_year: dict


def holiday_delta(
    series: DemandSeries,
    window=((12, 24), (1, 6)),
    baseline=((12, 10), (12, 23)),
) -> HolidayDelta:
    """Average :func:`window_demand_delta` over every covered year boundary.

    ``window`` and ``baseline`` are ``((month, day), (month, day))`` pairs; a
    window whose end month is earlier than its start month spills into the
    next year. Year boundaries not fully covered are skipped.
    """
    first_year = series.start.year - 1
    last_year = series.end.year
    per_year = {}
    for year in range(first_year, last_year + 1):
        w = _dated(window, year)
        b = _dated(baseline, year)
        lo = min(w.lo, b.lo)
        hi = max(w.hi, b.hi)
        if lo < series.start or hi > series.end:
            continue
        per_year[f"{year}-{year + 1}"] = window_demand_delta(series, w, b)
    if not per_year:
        raise InsufficientSpan("no year boundary fully covered by the series")
    return HolidayDelta(float(np.mean(list(per_year.values()))), per_year)


def _dated(pair, year) -> DateRange:
    (m0, d0), (m1, d1) = pair
    first = date(year, m0, d0)
    last = date(year + 1 if (m1, d1) < (m0, d0) else year, m1, d1)
    return DateRange(first, last)

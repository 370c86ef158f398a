"""Free-pool sizing under asymmetric over/under-provisioning penalties.

Demand here is the net number of VMs needed per window (requests minus
returns, floored at zero). Every policy is an array of pool sizes aligned
with a demand series; its cost is::

    sum_t p_o * max(0, size_t - d_t) + p_u * max(0, d_t - size_t)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from . import kernels
from .errors import AlignmentMismatch, ConfigError, InsufficientHistory
from .forecast import ForecastModel
from .series import HOUR, DemandSeries, as_utc

MAX_HORIZON = timedelta(hours=1)


@dataclass(frozen=True)
class PoolPenalties:
    p_o: float
    p_u: float

    def __post_init__(self):
        if not (self.p_o > 0 and self.p_u > 0):
            raise ConfigError("pool penalties must be positive")

    @property
    def tau(self) -> float:
        return self.p_u / (self.p_u + self.p_o)

    def order_index(self, n: int) -> int:
        """0-based index of the smallest cost-minimising order statistic."""
        k = math.ceil(n * self.tau - 1e-9)
        return min(max(k, 1), n) - 1


@dataclass(frozen=True)
class PoolPolicy:
    start: datetime
    window: timedelta
    sizes: np.ndarray
    kind: str = "static"
    min_resize_interval: timedelta = timedelta(minutes=1)
    name: str = ""

    def __post_init__(self):
        sizes = np.array(self.sizes, dtype=np.float64).reshape(-1)
        if sizes.size == 0 or np.any(sizes < 0) or not np.all(np.isfinite(sizes)):
            raise ConfigError("pool sizes must be finite, non-negative and non-empty")
        if self.kind not in ("static", "predicted", "oracle"):
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if self.kind == "static" and np.any(sizes != sizes[0]):
            raise ConfigError("a static policy must hold one size")
        sizes.setflags(write=False)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "start", as_utc(self.start))
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def resize_points(self) -> np.ndarray:
        """Indices where the size differs from the previous window."""
        return np.flatnonzero(np.diff(self.sizes) != 0) + 1


@dataclass(frozen=True)
class PoolCost:
    total: float
    over_total: float
    under_total: float


def _check_aligned(demand: DemandSeries, policy: PoolPolicy):
    if (
        policy.start != demand.start
        or policy.window != demand.granularity
        or policy.sizes.shape[0] != len(demand)
    ):
        raise AlignmentMismatch(
            f"policy {policy.name!r} does not cover the demand span window for window"
        )


def pool_cost(demand: DemandSeries, policy: PoolPolicy, penalties: PoolPenalties) -> PoolCost:
    _check_aligned(demand, policy)
    under, over = kernels.varying_hinge_areas(demand.values, policy.sizes)
    return PoolCost(
        total=penalties.p_o * over + penalties.p_u * under,
        over_total=penalties.p_o * over,
        under_total=penalties.p_u * under,
    )


def optimal_static_pool(demand: DemandSeries, penalties: PoolPenalties) -> PoolPolicy:
    """Constant size at the ``p_u / (p_u + p_o)`` lower quantile of demand."""
    vals = np.sort(demand.values)
    size = vals[penalties.order_index(vals.shape[0])]
    return PoolPolicy(
        start=demand.start,
        window=demand.granularity,
        sizes=np.full(len(demand), size),
        kind="static",
        name="static-optimal",
    )


def oracle_pool(demand: DemandSeries) -> PoolPolicy:
    """Perfect hindsight: size equals demand in every window."""
    return PoolPolicy(demand.start, demand.granularity, demand.values, kind="oracle", name="oracle")


def _season_len(window: timedelta) -> int:
    q, r = divmod(HOUR, window)
    if r or q < 1:
        raise ConfigError("window must divide one hour")
    return int(q)


def _point_forecast(values, secs, origin, horizon, season, lookback, model, window_secs):
    """Forecast windows ``origin .. origin+horizon-1`` from ``values[:origin]``.

    Returns the point forecast and the model's fitted values over the
    lookback span, used to size the error scaling.
    """
    base = origin - lookback * season
    recent = values[base:origin]
    if isinstance(model, ForecastModel):
        t = secs[origin - 1] + window_secs * np.arange(1, horizon + 1)
        return model.values_at(t), model.values_at(secs[base:origin])
    if model == "naive":
        lagged = np.concatenate([values[base - 1:base] if base > 0 else recent[:1], recent[:-1]])
        return np.full(horizon, values[origin - 1]), lagged
    if model != "seasonal":
        raise ConfigError("model must be 'seasonal', 'naive' or a ForecastModel")
    profile = recent.reshape(lookback, season).mean(axis=0)
    ahead = (np.arange(origin, origin + horizon) - base) % season
    return profile[ahead], np.tile(profile, lookback)


def _size_block(values, secs, origin, horizon, penalties, season, lookback, model, window_secs, gap):
    point, fitted = _point_forecast(values, secs, origin, horizon, season, lookback, model, window_secs)
    recent = values[origin - lookback * season:origin]
    ok = fitted > 0
    if ok.any():
        ratios = np.sort(recent[ok] / fitted[ok])
        scale = ratios[penalties.order_index(ratios.shape[0])]
    else:
        scale = 1.0
    desired = np.maximum(point * scale, 0.0)
    if gap > 1:
        k = penalties.order_index(gap)
        desired = kernels.ahead_quantile(desired, gap, k)
    return desired


def predict_pool(
    history: DemandSeries,
    penalties: PoolPenalties,
    horizon: timedelta = MAX_HORIZON,
    min_resize_interval: timedelta = timedelta(minutes=1),
    model="seasonal",
    lookback_hours: int = 24,
) -> PoolPolicy:
    """Pool sizes for the ``horizon`` following ``history``.

    ``model`` is ``"seasonal"`` (mean of the same minute-of-hour over the
    last ``lookback_hours``), ``"naive"`` (last value) or an hourly
    :class:`ForecastModel`. The point forecast is scaled by the
    ``p_u/(p_u+p_o)`` quantile of recent actual/fitted ratios, and sizes
    change at most once per ``min_resize_interval``.
    """
    season = _season_len(history.granularity)
    n_h, gap = _horizon_gap(history, horizon, min_resize_interval)
    n = len(history)
    if n < lookback_hours * season:
        raise InsufficientHistory(f"need {lookback_hours} hours of per-window history")
    step = int(history.granularity.total_seconds())
    secs = np.concatenate([history.epoch_times(), history.epoch_times()[-1] + step * np.arange(1, n_h + 1)])
    desired = _size_block(history.values, secs, n, n_h, penalties, season, lookback_hours, model, step, gap)
    sizes = kernels.hold_resizes(desired, gap)
    return PoolPolicy(
        start=history.end,
        window=history.granularity,
        sizes=sizes,
        kind="predicted",
        min_resize_interval=min_resize_interval,
        name="predicted",
    )


def _horizon_gap(series, horizon, min_resize_interval):
    if horizon > MAX_HORIZON or horizon <= timedelta(0):
        raise ConfigError("pool forecast horizon must lie in (0, 1 hour]")
    n_h, r = divmod(horizon, series.granularity)
    gap, r2 = divmod(min_resize_interval, series.granularity)
    if r or r2 or gap < 1:
        raise ConfigError("horizon and min_resize_interval must be whole windows")
    return int(n_h), int(gap)


def backtest_pool(
    demand: DemandSeries,
    penalties: PoolPenalties,
    warmup: timedelta = timedelta(hours=24),
    horizon: timedelta = MAX_HORIZON,
    min_resize_interval: timedelta = timedelta(minutes=1),
    model="seasonal",
    lookback_hours: int = 24,
) -> tuple:
    """Rolling :func:`predict_pool` over ``demand`` after ``warmup``.

    A fresh forecast is issued every ``horizon`` using only data before its
    origin. Returns ``(evaluated_demand, policy)`` aligned to each other.
    """
    season = _season_len(demand.granularity)
    n_h, gap = _horizon_gap(demand, horizon, min_resize_interval)
    w0, r = divmod(warmup, demand.granularity)
    w0 = int(w0)
    if r or w0 < lookback_hours * season:
        raise InsufficientHistory("warmup must be whole windows and cover the lookback")
    n = len(demand)
    if w0 >= n:
        raise InsufficientHistory("nothing left to evaluate after the warmup")
    secs = demand.epoch_times()
    step = int(demand.granularity.total_seconds())
    blocks = []
    for origin in range(w0, n, n_h):
        h = min(n_h, n - origin)
        blocks.append(_size_block(demand.values, secs, origin, h, penalties, season, lookback_hours, model, step, gap))
    sizes = kernels.hold_resizes(np.concatenate(blocks), gap)
    evaluated = demand.with_values(demand.values[w0:], start=demand.start + w0 * demand.granularity)
    policy = PoolPolicy(
        start=evaluated.start,
        window=demand.granularity,
        sizes=sizes,
        kind="predicted",
        min_resize_interval=min_resize_interval,
        name="predicted",
    )
    return evaluated, policy


@dataclass(frozen=True)
class PolicyScore:
    name: str
    kind: str
    total: float
    over_total: float
    under_total: float


def compare_policies(demand: DemandSeries, policies, penalties: PoolPenalties) -> list:
    """Policy costs sorted ascending; ties keep declaration order."""
    scores = []
    for p in policies:
        c = pool_cost(demand, p, penalties)
        scores.append(PolicyScore(p.name, p.kind, c.total, c.over_total, c.under_total))
    return sorted(scores, key=lambda s: s.total)


def net_demand(requested, returned) -> np.ndarray:
    """Requests minus returns per window, floored at zero."""
    return np.maximum(np.asarray(requested, float) - np.asarray(returned, float), 0.0)

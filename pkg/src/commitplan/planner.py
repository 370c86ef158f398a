"""Forecast-driven commitment planning.

* :func:`optimal_commitment_alg1` - cheapest flat level for every forecast
  prefix of 1..N weeks, then the minimum over prefixes.
* :class:`Ladder` / :func:`simulate_ladder` - staggered tranches and the
  cost of the piecewise-constant coverage they produce.
* :func:`plan_purchases` - weekly top-ups towards the planned level.
* :func:`sensitivity_table` - cost of ignoring trend for various update
  cadences.
* :func:`headroom_analysis` - unused commitment available for time shifting.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from . import kernels
from .errors import (
    ConfigError,
    CoverageGap,
    DataError,
    InvalidTrend,
    NonPositiveCommitment,
)
from .forecast import ForecastModel, predict
from .optimize import evaluate_cost, minimize_commitment
from .pricing import CostFactors
from .series import (
    HOUR,
    HOURS_PER_WEEK,
    WEEK,
    DemandSeries,
    HourOfWeekProfile,
    as_utc,
)

MAX_WEEKS = 52
PURCHASE_RTOL = 1e-9


@dataclass(frozen=True)
class HorizonResult:
    weeks: int
    c_w: float
    cost: float


@dataclass(frozen=True)
class HorizonPlan:
    c_star: float
    per_horizon: tuple
    forecast: DemandSeries

    @property
    def c_w1(self) -> float:
        return self.per_horizon[0].c_w


def commitments_over_horizons(forecast: DemandSeries, factors: CostFactors, max_weeks: int = MAX_WEEKS) -> HorizonPlan:
    """Optimal flat level for each 1..``max_weeks``-week prefix of ``forecast``.

    Prefixes longer than the forecast are skipped.
    """
    if not 1 <= max_weeks <= MAX_WEEKS:
        raise ConfigError(f"max_weeks must lie in 1..{MAX_WEEKS}")
    per_week = int(WEEK / forecast.granularity)
    available = len(forecast) // per_week
    if available < 1:
        raise DataError("forecast is shorter than one week")
    results = []
    for w in range(1, min(max_weeks, available) + 1):
        part = forecast.with_values(forecast.values[: w * per_week])
        ev = minimize_commitment(part, factors, "brent")
        results.append(HorizonResult(w, ev.c, ev.cost))
    c_star = min(r.c_w for r in results)
    return HorizonPlan(c_star, tuple(results), forecast)


def optimal_commitment_alg1(
    history: DemandSeries,
    model: ForecastModel,
    factors: CostFactors,
    max_weeks: int = MAX_WEEKS,
) -> HorizonPlan:
    """Forecast a year past ``history`` and take the minimum horizon optimum."""
    if model.fitted_end != history.end:
        raise ConfigError("model must be fitted on the supplied history")
    fc = predict(model, MAX_WEEKS * HOURS_PER_WEEK).series
    return commitments_over_horizons(fc, factors, max_weeks)


# --- ladders -----------------------------------------------------------------

TERMS = {"1y": 52, "3y": 156}


@dataclass(frozen=True)
class Tranche:
    purchase_time: datetime
    term_weeks: int
    quantity: float
    committed_unit_price: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "purchase_time", as_utc(self.purchase_time))
        if not self.quantity > 0:
            raise ConfigError("tranche quantity must be > 0")
        if int(self.term_weeks) < 1:
            raise ConfigError("tranche term must be at least one week")
        if self.committed_unit_price < 0:
            raise ConfigError("committed_unit_price must be >= 0")

    @property
    def expiry(self) -> datetime:
        return self.purchase_time + int(self.term_weeks) * WEEK


@dataclass(frozen=True)
class Ladder:
    tranches: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tranches", tuple(sorted(self.tranches, key=lambda t: (t.purchase_time, t.term_weeks, t.quantity))))

    def level_at(self, epoch_secs) -> np.ndarray:
        """Active committed quantity at each timestamp."""
        secs = np.asarray(epoch_secs, dtype=np.int64)
        level = np.zeros(secs.shape[0])
        for tr in self.tranches:
            lo = int(tr.purchase_time.timestamp())
            hi = int(tr.expiry.timestamp())
            level[(secs >= lo) & (secs < hi)] += tr.quantity
        return level

    def price_weighted_level_at(self, epoch_secs) -> np.ndarray:
        secs = np.asarray(epoch_secs, dtype=np.int64)
        out = np.zeros(secs.shape[0])
        for tr in self.tranches:
            lo = int(tr.purchase_time.timestamp())
            hi = int(tr.expiry.timestamp())
            out[(secs >= lo) & (secs < hi)] += tr.quantity * tr.committed_unit_price
        return out

    def plus(self, *tranches) -> "Ladder":
        return Ladder(self.tranches + tuple(tranches))

    def to_dict(self) -> dict:
        return {
            "tranches": [
                {
                    "purchase_time": t.purchase_time.isoformat(),
                    "term_weeks": int(t.term_weeks),
                    "quantity": t.quantity,
                    "committed_unit_price": t.committed_unit_price,
                }
                for t in self.tranches
            ]
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Ladder":
        try:
            return cls(tuple(
                Tranche(
                    purchase_time=as_utc(t["purchase_time"]),
                    term_weeks=int(t["term_weeks"]),
                    quantity=float(t["quantity"]),
                    committed_unit_price=float(t.get("committed_unit_price", 1.0)),
                )
                for t in doc.get("tranches", ())
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed ladder: {exc}") from None

    @classmethod
    def load(cls, path) -> "Ladder":
        from pathlib import Path
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read ladder {path}: {exc}") from None


@dataclass(frozen=True)
class LadderCost:
    total_cost: float
    weekly_costs: tuple
    on_demand_area: float
    unused_area: float
    levels: np.ndarray = field(repr=False)


def simulate_ladder(
    demand: DemandSeries,
    ladder: Ladder,
    factors: CostFactors,
    horizon: tuple | None = None,
) -> LadderCost:
    """Cost of ``demand`` covered by the ladder's active level over ``horizon``.

    ``horizon`` is ``(start, end)`` with an exclusive end and defaults to the
    demand span. In total form the committed spend uses each tranche's
    ``committed_unit_price``; in premium form unused coverage costs ``B``.
    """
    lo, hi = (demand.start, demand.end) if horizon is None else (as_utc(horizon[0]), as_utc(horizon[1]))
    if lo < demand.start or hi > demand.end:
        raise CoverageGap(f"demand does not cover {lo}..{hi}")
    part = demand.slice_time(lo, hi)
    secs = part.epoch_times()
    levels = ladder.level_at(secs)
    dt = part.dt_hours
    d = part.values - levels
    over_t = np.where(d > 0, d, 0.0) * dt
    under_t = np.where(d < 0, -d, 0.0) * dt
    if factors.form == "premium":
        cost_t = factors.A * over_t + factors.B * under_t
    else:
        cost_t = ladder.price_weighted_level_at(secs) * dt + factors.A * over_t
    per_week = max(1, int(WEEK / part.granularity))
    weekly = tuple(float(cost_t[i:i + per_week].sum()) for i in range(0, cost_t.shape[0], per_week))
    over, under = kernels.varying_hinge_areas(part.values, levels)
    return LadderCost(
        total_cost=float(sum(weekly)),
        weekly_costs=weekly,
        on_demand_area=over * dt,
        unused_area=under * dt,
        levels=levels,
    )


def weekly_ladder(start, levels, unit_price: float = 1.0) -> Ladder:
    """Ladder of one-week tranches holding ``levels[w]`` during week ``w``."""
    start = as_utc(start)
    return Ladder(tuple(
        Tranche(start + w * WEEK, 1, float(q), unit_price)
        for w, q in enumerate(levels) if q > 0
    ))


def weekly_optimal_levels(demand: DemandSeries, factors: CostFactors) -> list:
    """Per-week optimal flat levels over the whole weeks of ``demand``."""
    per_week = int(WEEK / demand.granularity)
    n_weeks = len(demand) // per_week
    if n_weeks < 1:
        raise DataError("demand is shorter than one week")
    return [
        minimize_commitment(demand.with_values(demand.values[w * per_week:(w + 1) * per_week]), factors).c
        for w in range(n_weeks)
    ]


@dataclass(frozen=True)
class Purchase:
    week: int
    time: datetime
    target: float
    active_before: float
    quantity: float


def plan_purchases(
    history: DemandSeries,
    model: ForecastModel,
    factors: CostFactors,
    existing: Ladder | None = None,
    planning_weeks: int = 4,
    max_weeks: int = MAX_WEEKS,
    term_weeks: int = TERMS["1y"],
    unit_price: float = 1.0,
) -> list:
    """Weekly purchase increments that top the ladder up to the planned level.

    For planning week ``k`` the target is the minimum-over-horizons level of
    the forecast from week ``k`` on. The active level is the lowest coverage
    during that week from ``existing`` plus earlier planned purchases;
    purchases are never negative.
    """
    if model.fitted_end != history.end:
        raise ConfigError("model must be fitted on the supplied history")
    if not 1 <= planning_weeks <= MAX_WEEKS:
        raise ConfigError("planning_weeks must lie in 1..52")
    fc = predict(model, MAX_WEEKS * HOURS_PER_WEEK).series
    ladder = existing or Ladder()
    out = []
    secs = fc.epoch_times()
    for k in range(planning_weeks):
        tail = fc.with_values(fc.values[k * HOURS_PER_WEEK:], start=fc.start + k * WEEK)
        horizon = min(max_weeks, MAX_WEEKS - k)
        target = commitments_over_horizons(tail, factors, horizon).c_star
        week_secs = secs[k * HOURS_PER_WEEK:(k + 1) * HOURS_PER_WEEK]
        active = float(ladder.level_at(week_secs).min())
        qty = target - active
        if qty <= PURCHASE_RTOL * max(abs(target), 1.0):  # rounding noise, not a shortfall
            qty = 0.0
        when = fc.start + k * WEEK
        if qty > 0:
            ladder = ladder.plus(Tranche(when, term_weeks, qty, unit_price))
        out.append(Purchase(k, when, target, active, qty))
    return out


# --- trend sensitivity -------------------------------------------------------

@dataclass(frozen=True)
class SensitivityCell:
    update_freq_weeks: int
    annual_trend: float
    cost_delta_per_million: float
    c_trend_blind: float
    c_trend_aware: float


def synthesize_trend(base_week: np.ndarray, weeks: int, annual_trend: float) -> np.ndarray:
    """Repeat ``base_week`` with hourly-compounded growth reaching ``(1+g)`` per 52 weeks."""
    if annual_trend <= -1:
        raise InvalidTrend("annual trend must be > -100%")
    per_week = base_week.shape[0]
    hours = np.arange(weeks * per_week)
    growth = (1.0 + annual_trend) ** (hours / (MAX_WEEKS * per_week))
    return np.tile(base_week, weeks) * growth


def sensitivity_table(
    base_week: DemandSeries,
    trends,
    update_freqs,
    factors: CostFactors,
) -> list:
    """Rows of :class:`SensitivityCell`, one row per update frequency.

    ``C1`` uses the level optimal for ``base_week`` alone over the trended
    horizon, ``C2`` the level optimal for the trended horizon itself; each
    cell is ``(C1 - C2)`` scaled so that ``C2`` equals one million.
    """
    if len(base_week) != int(WEEK / base_week.granularity):
        raise ConfigError("base_week must hold exactly one week of samples")
    base = base_week.values
    c_blind = minimize_commitment(base_week, factors).c
    rows = []
    for h in update_freqs:
        if int(h) < 1:
            raise ConfigError("update frequencies must be >= 1 week")
        row = []
        for g in trends:
            demand = base_week.with_values(synthesize_trend(base, int(h), float(g)))
            c_aware = minimize_commitment(demand, factors).c
            c1 = evaluate_cost(demand, c_blind, factors).cost
            c2 = evaluate_cost(demand, c_aware, factors).cost
            delta = (c1 - c2) / c2 * 1e6 if c2 > 0 else 0.0
            if -1e-6 < delta < 0:  # rounding noise only
                delta = 0.0
            row.append(SensitivityCell(int(h), float(g), delta, c_blind, c_aware))
        rows.append(row)
    return rows


# --- headroom ----------------------------------------------------------------

@dataclass(frozen=True)
class HeadroomReport:
    commitment: float
    unused_fraction: float
    hour_of_week_headroom: HourOfWeekProfile
    shiftable_volume: float
    weekend_share: float


def headroom_analysis(demand: DemandSeries, c: float) -> HeadroomReport:
    """Unused commitment and where in the week it sits.

    The profile holds the mean unused demand per hour-of-week slot;
    ``weekend_share`` is the fraction of unused volume on Saturday and
    Sunday (UTC).
    """
    if demand.granularity != HOUR:
        raise ConfigError("headroom analysis needs an hourly series")
    if not c > 0:
        raise NonPositiveCommitment("commitment must be > 0")
    unused = np.maximum(c - demand.values, 0.0) * demand.dt_hours
    how = demand.hour_of_week()
    sums = np.bincount(how, weights=unused, minlength=HOURS_PER_WEEK)
    counts = np.bincount(how, minlength=HOURS_PER_WEEK)
    profile = np.divide(sums, counts, out=np.zeros(HOURS_PER_WEEK), where=counts > 0)
    total = float(unused.sum())
    return HeadroomReport(
        commitment=float(c),
        unused_fraction=total / (c * demand.span_hours),
        hour_of_week_headroom=HourOfWeekProfile(profile, "additive"),
        shiftable_volume=total,
        weekend_share=float(sums[5 * 24:].sum() / total) if total > 0 else 0.0,
    )

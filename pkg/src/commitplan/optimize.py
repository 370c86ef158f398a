"""Flat commitment level optimisation.

The cost of holding a commitment ``c`` against demand ``f`` sampled every
``dt`` hours is a convex, piecewise-linear function of ``c`` with kinks at
the sample values, so its minimum sits on an order statistic of the demand.
:func:`minimize_commitment` finds it three ways: Brent's method followed by
a walk along the kinks, a closed-form quantile, and a plain grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import ConfigError, NegativeCommitment
from .pricing import CostFactors
from .series import DemandSeries

METHODS = ("brent", "quantile_oracle", "grid")


@dataclass(frozen=True)
class CommitmentEvaluation:
    c: float
    on_demand_area: float
    unused_area: float
    used_commit_area: float
    cost: float
    form: str = "premium"
    flags: tuple = ()

    @property
    def total_area(self) -> float:
        return self.used_commit_area + self.on_demand_area

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "on_demand_area": self.on_demand_area,
            "unused_area": self.unused_area,
            "used_commit_area": self.used_commit_area,
            "cost": self.cost,
            "form": self.form,
            "flags": list(self.flags),
        }


def _values_dt(series):
    if isinstance(series, DemandSeries):
        return series.values, series.dt_hours
    vals = np.asarray(series, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise ConfigError("demand must be a non-empty 1-d array")
    return vals, 1.0


def _cost(over, under, c, n, dt, factors):
    if factors.form == "premium":
        return dt * (factors.A * over + factors.B * under)
    return dt * (factors.B * c * n + factors.A * over)


def evaluate_cost(series, c: float, factors: CostFactors, flags=()) -> CommitmentEvaluation:
    """Cost breakdown of a flat commitment ``c`` over ``series``.

    Plain arrays are treated as hourly samples.
    """
    if c < 0:
        raise NegativeCommitment(f"commitment must be >= 0, got {c}")
    vals, dt = _values_dt(series)
    over, under = kernels.hinge_areas(vals, c)
    n = vals.shape[0]
    used = float(c) * n - under
    return CommitmentEvaluation(
        c=float(c),
        on_demand_area=dt * over,
        unused_area=dt * under,
        used_commit_area=dt * max(used, 0.0),
        cost=_cost(over, under, c, n, dt, factors),
        form=factors.form,
        flags=tuple(flags),
    )


def cost_curve(series, levels, factors: CostFactors) -> np.ndarray:
    """Cost at each commitment level in ``levels``."""
    vals, dt = _values_dt(series)
    levels = np.asarray(levels, dtype=np.float64)
    over, under = kernels.sweep_hinge_areas(vals, levels)
    return _cost(over, under, levels, vals.shape[0], dt, factors)


def quantile_index(n: int, factors: CostFactors) -> int:
    """0-based index into the sorted demand of the smallest minimiser.

    With ``k`` samples at or below ``c`` the right-hand slope of the cost is
    ``B*k - A*(n-k)`` (premium) or ``B*n - A*(n-k)`` (total); the minimiser
    is the ``k``-th order statistic for the smallest ``k`` making it >= 0.
    """
    A, B = factors.A, factors.B
    if factors.form == "premium":
        k = math.ceil(n * A / (A + B) - 1e-9)
    else:
        k = math.ceil(n * (A - B) / A - 1e-9)
    return min(max(k, 1), n) - 1


def quantile_commitment(series, factors: CostFactors) -> float:
    vals, _ = _values_dt(series)
    return float(np.sort(vals)[quantile_index(vals.shape[0], factors)])


def _polish(sorted_vals, c, cost_at):
    """Walk from ``c`` to the cheapest kink, preferring lower levels on ties."""
    j = int(np.searchsorted(sorted_vals, c, side="left"))
    j = min(j, sorted_vals.shape[0] - 1)
    cands = {j, max(j - 1, 0)}
    j = min(cands, key=lambda i: (cost_at(sorted_vals[i]), i))
    here = cost_at(sorted_vals[j])
    while j > 0:
        below = cost_at(sorted_vals[j - 1])
        if below > here * (1 + 1e-12) + 1e-300:
            break
        j, here = j - 1, below
    while j < sorted_vals.shape[0] - 1:
        above = cost_at(sorted_vals[j + 1])
        if not above < here * (1 - 1e-12):
            break
        j, here = j + 1, above
    return float(sorted_vals[j])


def minimize_commitment(
    series,
    factors: CostFactors,
    method: str = "brent",
    grid_points: int = 10_001,
    xtol: float = 1e-6,
    maxiter: int = 200,
) -> CommitmentEvaluation:
    """Cheapest flat commitment level for ``series``.

    The search is bracketed by ``[min(f), max(f)]``. A constant series
    returns that constant with the ``degenerate`` flag; a total-form cost
    with ``A <= B`` returns ``min(f)`` with the ``uneconomical`` flag.
    """
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    vals, _ = _values_dt(series)
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        return evaluate_cost(series, lo, factors, flags=("degenerate",))
    if not factors.economical:
        return evaluate_cost(series, lo, factors, flags=("uneconomical",))

    def cost_at(c):
        return evaluate_cost(series, c, factors).cost

    if method == "quantile_oracle":
        c = quantile_commitment(vals, factors)
    elif method == "grid":
        levels = np.linspace(lo, hi, grid_points)
        costs = cost_curve(series, levels, factors)
        c = float(levels[int(np.argmin(costs))])
    else:
        res = minimize_scalar(
            cost_at,
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": xtol * (hi - lo), "maxiter": maxiter},
        )
        c = _polish(np.sort(vals), float(res.x), cost_at)
    return evaluate_cost(series, c, factors, flags=(method,))


def scenario_sweep(series, factors: CostFactors, n_levels: int = 9) -> list:
    """Evaluations at ``n_levels`` evenly spaced levels from min to max demand."""
    if n_levels < 2:
        raise ConfigError("n_levels must be >= 2")
    vals, _ = _values_dt(series)
    levels = np.linspace(vals.min(), vals.max(), n_levels)
    return [evaluate_cost(series, float(c), factors) for c in levels]

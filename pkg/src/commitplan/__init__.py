"""Capacity commitment planning for cloud demand.

Fits optimal flat commitment levels to demand, forecasts future demand,
schedules commitment purchases and sizes free VM pools.
"""
from .errors import CommitPlanError, ConfigError, DataError, InvariantViolation
from .forecast import ForecastConfig, ForecastModel, backtest, fit, pinball_loss, predict
from .freepool import PoolPenalties, PoolPolicy, backtest_pool, compare_policies, optimal_static_pool, pool_cost, predict_pool
from .ingest import ColumnMapping, aggregate, load_csv, load_mapping
from .optimize import evaluate_cost, minimize_commitment, scenario_sweep
from .planner import Ladder, Tranche, optimal_commitment_alg1, plan_purchases, sensitivity_table, simulate_ladder
from .pricing import CostFactors, RateCard, cost_factors_from_card, load_rate_card
from .series import DemandSeries

__version__ = "0.1.0"

__all__ = [
    "CommitPlanError", "ConfigError", "DataError", "InvariantViolation",
    "ForecastConfig", "ForecastModel", "backtest", "fit", "pinball_loss", "predict",
    "PoolPenalties", "PoolPolicy", "backtest_pool", "compare_policies", "optimal_static_pool", "pool_cost", "predict_pool",
    "ColumnMapping", "aggregate", "load_csv", "load_mapping",
    "evaluate_cost", "minimize_commitment", "scenario_sweep",
    "Ladder", "Tranche", "optimal_commitment_alg1", "plan_purchases", "sensitivity_table", "simulate_ladder",
    "CostFactors", "RateCard", "cost_factors_from_card", "load_rate_card",
    "DemandSeries",
]

"""``commitplan`` command line.

Every subcommand reads a CSV through a column mapping, runs one analysis and
writes ``<out>/<command>.json`` plus optional CSV/SVG companions. Nothing is
written unless the whole command succeeds.

Exit codes: 0 success, 2 configuration/usage error, 3 data error,
4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import sys
from datetime import timedelta
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    holiday_delta,
    lag_autocorrelation,
    periodicity_ratios,
    resample,
    week_over_week_growth,
)
from .errors import CommitPlanError, ConfigError, DataError, InvariantViolation
from .forecast import ForecastConfig, ForecastModel, backtest, fit, predict
from .freepool import PoolPenalties, backtest_pool, compare_policies, optimal_static_pool
from .ingest import aggregate, load_csv, load_mapping
from .optimize import METHODS, cost_curve, evaluate_cost, minimize_commitment, scenario_sweep
from .planner import (
    Ladder,
    Tranche,
    headroom_analysis,
    optimal_commitment_alg1,
    plan_purchases,
    sensitivity_table,
    simulate_ladder,
    weekly_ladder,
    weekly_optimal_levels,
)
from .pricing import CostFactors, cost_factors_from_card, load_rate_card
from .report import SCHEMA_VERSION, csv_text, dumps, file_digest, svg_chart
from .series import DAY, HOUR, HOURS_PER_WEEK, WEEK, WEEK_ANCHOR, RecurringWindow, as_utc

FORMATS = ("json", "csv", "svg")
COMMANDS = ("stats", "optimize", "forecast", "plan", "ladder", "sensitivity", "headroom", "freepool")


# --- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="demand CSV file")
    common.add_argument("--mapping", help="column mapping JSON (default: bundled)")
    common.add_argument("--select", action="append", default=[], metavar="DIM=VALUE",
                        help="keep only series whose dimension matches; repeatable")
    common.add_argument("--start", help="ignore demand before this ISO timestamp")
    common.add_argument("--end", help="ignore demand from this ISO timestamp on")
    common.add_argument("--rate-card", help="rate card JSON (default: bundled)")
    common.add_argument("--term", choices=("1y", "3y"), default="3y")
    common.add_argument("--cost-form", choices=("premium", "total"), default="premium")
    common.add_argument("--factor-a", type=float, help="override the above-commitment weight")
    common.add_argument("--factor-b", type=float, help="override the commitment weight")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", default="json", help="comma-separated subset of json,csv,svg")

    p = _Parser(prog="commitplan", description="Cloud capacity commitment planning.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("stats", parents=[common], help="periodicity and trend diagnostics")
    s.add_argument("--lag", type=int, default=7, help="lag in days for the autocorrelation")

    s = sub.add_parser("optimize", parents=[common], help="optimal flat commitment level")
    s.add_argument("--levels", type=int, default=9, help="scenario sweep size")
    s.add_argument("--method", choices=METHODS, default="brent")

    forecast_opts = argparse.ArgumentParser(add_help=False)
    forecast_opts.add_argument("--trend-kind", choices=("auto", "linear", "linear_log"), default="auto")
    forecast_opts.add_argument("--tau", type=float, help="pinball tuning quantile (default A/(A+B))")
    forecast_opts.add_argument("--holiday", action="append", metavar="MM-DD:MM-DD",
                               help="recurring holiday window; repeatable (default 12-24:01-01)")

    s = sub.add_parser("forecast", parents=[common, forecast_opts], help="fit and run the forecaster")
    s.add_argument("--horizon-hours", type=int, default=4 * HOURS_PER_WEEK)
    s.add_argument("--backtest-folds", type=int, default=0)

    s = sub.add_parser("plan", parents=[common, forecast_opts], help="horizon minimum and purchase schedule")
    s.add_argument("--max-weeks", type=int, default=52)
    s.add_argument("--planning-weeks", type=int, default=4)
    s.add_argument("--ladder", help="existing ladder JSON")
    s.add_argument("--term-weeks", type=int, help="term of new purchases (default from --term)")
    s.add_argument("--model", help="use a saved forecast model JSON instead of fitting")

    s = sub.add_parser("ladder", parents=[common], help="cost of a commitment ladder against demand")
    s.add_argument("--ladder", required=True, help="ladder JSON")

    s = sub.add_parser("sensitivity", parents=[common], help="trend sensitivity table")
    s.add_argument("--trends", type=_float_list, default=[0.10, 0.25, 0.50, 0.75, 1.00])
    s.add_argument("--freqs", type=_int_list, default=[1, 2, 4, 8])
    s.add_argument("--base-week-start", help="Monday of the base week (default: last full week)")

    s = sub.add_parser("headroom", parents=[common], help="unused commitment available for time shifting")
    s.add_argument("--commitment", type=float, help="commitment level (default: optimal)")

    s = sub.add_parser("freepool", parents=[common], help="static vs predicted free-pool sizing")
    s.add_argument("--p-o", type=float, default=1.0, help="over-provisioning penalty")
    s.add_argument("--p-u", type=float, default=3.0, help="under-provisioning penalty")
    s.add_argument("--horizon-minutes", type=int, default=60)
    s.add_argument("--min-resize-minutes", type=int, default=1)
    s.add_argument("--warmup-hours", type=int, default=24)
    s.add_argument("--lookback-hours", type=int, default=24)
    return p


# --- shared helpers ----------------------------------------------------------

def _formats(text):
    fmts = {f.strip() for f in text.split(",") if f.strip()}
    if not fmts or not fmts <= set(FORMATS):
        raise ConfigError(f"--format must be a non-empty subset of {','.join(FORMATS)}")
    return fmts


def _mapping(args, default="default_mapping.json"):
    if args.mapping:
        return load_mapping(args.mapping)
    with resources.as_file(resources.files("commitplan").joinpath("data", default)) as path:
        return load_mapping(path)


def _load_series(args, default_mapping="default_mapping.json"):
    mapping = _mapping(args, default_mapping)
    series_map = load_csv(args.input, mapping)
    select = {}
    for item in args.select:
        if "=" not in item:
            raise ConfigError(f"--select expects DIM=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        if k not in mapping.dimension_cols:
            raise ConfigError(f"unknown dimension {k!r}")
        select.setdefault(k, set()).add(v)
    series = aggregate(series_map, select or None)
    if args.start or args.end:
        lo = as_utc(args.start) if args.start else series.start
        hi = as_utc(args.end) if args.end else series.end
        lo, hi = max(lo, series.start), min(hi, series.end)
        series = series.slice_time(lo, hi)
    return series, series_map


def _hourly(series):
    if series.granularity == HOUR:
        return series
    if series.granularity < HOUR:
        return resample(series, HOUR, "mean")
    raise ConfigError("this command needs hourly or finer demand")


def _factors(args) -> CostFactors:
    card = load_rate_card(args.rate_card)
    f = cost_factors_from_card(card, args.term, form=args.cost_form)
    return CostFactors(
        A=args.factor_a if args.factor_a is not None else f.A,
        B=args.factor_b if args.factor_b is not None else f.B,
        form=args.cost_form,
    )


def _forecast_config(args, factors):
    windows = tuple(RecurringWindow.parse(h) for h in args.holiday) if args.holiday else None
    tau = args.tau if args.tau is not None else factors.A / (factors.A + factors.B)
    kw = {"trend_kind": args.trend_kind, "tuning_tau": tau}
    if windows is not None:
        kw["holiday_windows"] = windows
    return ForecastConfig(**kw)


def _config_doc(args):
    skip = {"out", "func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _digests(args):
    out = {}
    for name in ("input", "mapping", "rate_card", "ladder", "model"):
        path = getattr(args, name, None)
        if path:
            if not Path(path).is_file():
                raise ConfigError(f"{name} file not found: {path}")
            out[name] = file_digest(path)
    return out


def _series_doc(series):
    return {
        "start": series.start,
        "end": series.end,
        "granularity_hours": series.dt_hours,
        "length": len(series),
        "unit": series.unit_label,
    }


def _check(cond, what):
    if not cond:
        raise InvariantViolation(what)


def _guard(fn, *a, **kw):
    """Run a diagnostic, turning a data error into ``{"unavailable": reason}``."""
    try:
        return fn(*a, **kw)
    except DataError as exc:
        return {"unavailable": f"{type(exc).__name__}: {exc}"}


# --- commands ------------------------------------------------------------------

def cmd_stats(args):
    series, _ = _load_series(args)
    hourly = _hourly(series)
    daily = _guard(resample, hourly, DAY, "sum")
    result = {"series": _series_doc(hourly)}
    if isinstance(daily, dict):
        result["lag_autocorrelation"] = daily
    else:
        result["lag_autocorrelation"] = {"lag_days": args.lag, "value": _guard(lag_autocorrelation, daily, args.lag)}
    ratios = _guard(periodicity_ratios, hourly)
    if isinstance(ratios, dict):
        result["periodicity"] = ratios
    else:
        result["periodicity"] = {
            "weekly_ratio": ratios.weekly_ratio,
            "diurnal_ratio": ratios.diurnal_ratio,
            "excluded_weeks": ratios.excluded_weeks,
            "excluded_days": ratios.excluded_days,
        }
    growth = _guard(week_over_week_growth, hourly)
    if isinstance(growth, dict):
        result["week_over_week"] = growth
        growth = None
    else:
        result["week_over_week"] = {
            "growth": growth,
            "negative_fraction": float(np.mean(growth < 0)),
        }
    hol = _guard(holiday_delta, hourly)
    result["holiday_delta"] = hol if isinstance(hol, dict) else {"mean": hol.mean_delta, "per_year": hol.per_year}
    extras = {}
    if growth is not None:
        extras["stats_wow.csv"] = csv_text(["week", "growth"], enumerate(growth, start=2))
        extras["stats_wow.svg"] = svg_chart("Week-over-week growth", [("growth", np.arange(len(growth)), growth)])
    return result, extras


def cmd_optimize(args):
    series, _ = _load_series(args)
    factors = _factors(args)
    best = minimize_commitment(series, factors, args.method)
    oracle = minimize_commitment(series, factors, "quantile_oracle")
    _check(best.cost <= oracle.cost * (1 + 1e-6) + 1e-9, "optimizer worse than the quantile oracle")
    _check(
        abs(best.used_commit_area + best.on_demand_area - series.values.sum() * series.dt_hours)
        <= 1e-9 * max(1.0, series.values.sum() * series.dt_hours),
        "area decomposition does not add up",
    )
    sweep = scenario_sweep(series, factors, args.levels)
    result = {
        "series": _series_doc(series),
        "factors": factors,
        "quantile": factors.quantile,
        "optimum": best.as_dict(),
        "oracle": oracle.as_dict(),
        "sweep": [e.as_dict() for e in sweep],
    }
    extras = {
        "optimize_sweep.csv": csv_text(
            ["c", "cost", "on_demand_area", "unused_area", "used_commit_area"],
            [(e.c, e.cost, e.on_demand_area, e.unused_area, e.used_commit_area) for e in sweep],
        ),
    }
    levels = np.linspace(series.values.min(), series.values.max(), 200)
    extras["optimize_sweep.svg"] = svg_chart(
        f"Cost vs commitment ({factors.form})",
        [("C(c)", levels, cost_curve(series, levels, factors))],
    )
    extras["optimize_demand.svg"] = svg_chart(
        "Demand vs optimal commitment",
        [("demand", np.arange(len(series)), series.values)],
        hlines=[(f"c*={best.c:.4g}", best.c)],
    )
    return result, extras


def cmd_forecast(args):
    series, _ = _load_series(args)
    hourly = _hourly(series)
    factors = _factors(args)
    cfg = _forecast_config(args, factors)
    model = fit(hourly, cfg)
    fc = predict(model, args.horizon_hours)
    result = {
        "series": _series_doc(hourly),
        "config": {"trend_kind": cfg.trend_kind, "tuning_tau": cfg.tuning_tau,
                   "holiday_windows": [w.label() for w in cfg.holiday_windows]},
        "model": model.to_dict(),
        "forecast": {"start": fc.series.start, "horizon_hours": fc.horizon_hours,
                     "mean": float(fc.series.values.mean()), "values": fc.series.values},
    }
    if args.backtest_folds:
        bt = backtest(hourly, cfg, args.backtest_folds, HOURS_PER_WEEK)
        naive = backtest(hourly, cfg, args.backtest_folds, HOURS_PER_WEEK, model="naive")
        result["backtest"] = {"model": bt, "naive": naive}
    extras = {
        "forecast_model.json": model.dumps() + "\n",
        "forecast.csv": csv_text(["timestamp", "forecast"], zip(fc.series.timestamps().astype(str), fc.series.values)),
        "forecast.svg": svg_chart(
            "History and forecast",
            [
                ("history", np.arange(len(hourly)), hourly.values),
                ("forecast", len(hourly) + np.arange(fc.horizon_hours), fc.series.values),
            ],
        ),
    }
    return result, extras


def cmd_plan(args):
    series, _ = _load_series(args)
    hourly = _hourly(series)
    factors = _factors(args)
    if args.model:
        try:
            model = ForecastModel.loads(Path(args.model).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read model: {exc}") from None
    else:
        model = fit(hourly, _forecast_config(args, factors))
    plan = optimal_commitment_alg1(hourly, model, factors, args.max_weeks)
    _check(plan.c_star <= plan.c_w1 + 1e-12, "c* exceeds the one-week optimum")
    existing = Ladder.load(args.ladder) if args.ladder else Ladder()
    term = args.term_weeks or (52 if args.term == "1y" else 156)
    purchases = plan_purchases(hourly, model, factors, existing, args.planning_weeks, args.max_weeks, term)
    _check(all(p.quantity >= 0 for p in purchases), "negative purchase")
    fc = plan.forecast
    span = fc.with_values(fc.values[: args.planning_weeks * HOURS_PER_WEEK])
    flat = evaluate_cost(span, plan.c_star, factors)
    laddered = existing.plus(*[Tranche(p.time, term, p.quantity) for p in purchases if p.quantity > 0])
    ladder_cost = simulate_ladder(span, laddered, factors)
    weekly = weekly_optimal_levels(span, factors)
    best_ladder = simulate_ladder(span, weekly_ladder(span.start, weekly, factors.B), factors)
    result = {
        "series": _series_doc(hourly),
        "factors": factors,
        "model_trend": model.trend_kind,
        "c_star": plan.c_star,
        "c_w1": plan.c_w1,
        "per_horizon": list(plan.per_horizon),
        "purchases": [p for p in purchases if p.quantity > 0],
        "weekly_targets": [{"week": p.week, "target": p.target, "active_before": p.active_before} for p in purchases],
        "comparison": {
            "planning_weeks": args.planning_weeks,
            "flat_c_star_cost": flat.cost,
            "planned_ladder_cost": ladder_cost.total_cost,
            "weekly_optimal_levels": weekly,
            "weekly_optimal_ladder_cost": best_ladder.total_cost,
        },
    }
    extras = {
        "plan_horizons.csv": csv_text(["weeks", "c_w", "cost"], [(r.weeks, r.c_w, r.cost) for r in plan.per_horizon]),
        "plan_purchases.csv": csv_text(
            ["week", "time", "target", "active_before", "quantity"],
            [(p.week, p.time, p.target, p.active_before, p.quantity) for p in purchases if p.quantity > 0],
        ),
        "plan_horizons.svg": svg_chart(
            "Optimal level per forecast horizon",
            [("c_w", [r.weeks for r in plan.per_horizon], [r.c_w for r in plan.per_horizon])],
            hlines=[(f"c*={plan.c_star:.4g}", plan.c_star)],
        ),
    }
    return result, extras


def cmd_ladder(args):
    series, _ = _load_series(args)
    factors = _factors(args)
    ladder = Ladder.load(args.ladder)
    sim = simulate_ladder(series, ladder, factors)
    flat = minimize_commitment(series, factors)
    result = {
        "series": _series_doc(series),
        "factors": factors,
        "ladder": ladder.to_dict(),
        "ladder_cost": sim.total_cost,
        "weekly_costs": sim.weekly_costs,
        "on_demand_area": sim.on_demand_area,
        "unused_area": sim.unused_area,
        "flat_optimum": flat.as_dict(),
    }
    per_week = int(WEEK / series.granularity)
    if len(series) >= per_week:
        whole = series.with_values(series.values[: (len(series) // per_week) * per_week])
        levels = weekly_optimal_levels(whole, factors)
        result["weekly_optimal"] = {
            "levels": levels,
            "cost": simulate_ladder(whole, weekly_ladder(whole.start, levels, factors.B), factors).total_cost,
            "flat_cost_same_span": minimize_commitment(whole, factors).cost,
        }
    extras = {
        "ladder_weekly.csv": csv_text(["week", "cost"], enumerate(sim.weekly_costs)),
        "ladder.svg": svg_chart(
            "Demand vs ladder coverage",
            [("demand", np.arange(len(series)), series.values), ("coverage", np.arange(len(series)), sim.levels)],
        ),
    }
    return result, extras


def cmd_sensitivity(args):
    series, _ = _load_series(args)
    hourly = _hourly(series)
    factors = _factors(args)
    if args.base_week_start:
        lo = as_utc(args.base_week_start)
    else:
        last_monday = hourly.end - ((hourly.end - WEEK_ANCHOR) % WEEK)
        lo = last_monday - WEEK
    base = hourly.slice_time(lo, lo + WEEK)
    rows = sensitivity_table(base, args.trends, args.freqs, factors)
    _check(all(c.cost_delta_per_million >= 0 for r in rows for c in r), "negative sensitivity delta")
    result = {
        "base_week_start": lo,
        "factors": factors,
        "trends": args.trends,
        "update_freqs": args.freqs,
        "matrix": [[c.cost_delta_per_million for c in r] for r in rows],
        "cells": rows,
    }
    extras = {
        "sensitivity.csv": csv_text(
            ["update_freq_weeks"] + [f"trend_{g:g}" for g in args.trends],
            [[r[0].update_freq_weeks] + [c.cost_delta_per_million for c in r] for r in rows],
        ),
        "sensitivity.svg": svg_chart(
            "Cost delta per $1M vs annual trend",
            [(f"{r[0].update_freq_weeks} week", args.trends, [c.cost_delta_per_million for c in r]) for r in rows],
        ),
    }
    return result, extras


def cmd_headroom(args):
    series, _ = _load_series(args)
    hourly = _hourly(series)
    factors = _factors(args)
    c = args.commitment if args.commitment is not None else minimize_commitment(hourly, factors).c
    rep = headroom_analysis(hourly, c)
    _check(
        abs(rep.unused_fraction * c * hourly.span_hours - rep.shiftable_volume) <= 1e-6 * max(1.0, rep.shiftable_volume),
        "unused fraction inconsistent with volume",
    )
    result = {
        "series": _series_doc(hourly),
        "factors": factors,
        "commitment": c,
        "unused_fraction": rep.unused_fraction,
        "shiftable_volume": rep.shiftable_volume,
        "weekend_share": rep.weekend_share,
        "hour_of_week_headroom": rep.hour_of_week_headroom.factors,
    }
    prof = rep.hour_of_week_headroom.factors
    extras = {
        "headroom_profile.csv": csv_text(["hour_of_week", "mean_unused"], enumerate(prof)),
        "headroom.svg": svg_chart("Mean unused commitment by hour of week", [("headroom", np.arange(168), prof)]),
    }
    return result, extras


def cmd_freepool(args):
    series, _ = _load_series(args, "pool_mapping.json")
    pen = PoolPenalties(args.p_o, args.p_u)
    evaluated, predicted = backtest_pool(
        series,
        pen,
        warmup=timedelta(hours=args.warmup_hours),
        horizon=timedelta(minutes=args.horizon_minutes),
        min_resize_interval=timedelta(minutes=args.min_resize_minutes),
        lookback_hours=args.lookback_hours,
    )
    static = optimal_static_pool(evaluated, pen)
    ranked = compare_policies(evaluated, [static, predicted], pen)
    gaps = np.diff(np.concatenate([[0], predicted.resize_points()]))
    _check(gaps.size == 0 or gaps.min() >= args.min_resize_minutes, "resize interval violated")
    by_name = {s.name: s for s in ranked}
    st, pr = by_name["static-optimal"].total, by_name["predicted"].total
    result = {
        "series": _series_doc(evaluated),
        "penalties": pen,
        "static_size": float(static.sizes[0]),
        "ranking": ranked,
        "predicted_saving_vs_static": (st - pr) / st if st > 0 else 0.0,
    }
    extras = {
        "freepool_sizes.csv": csv_text(
            ["timestamp", "demand", "static", "predicted"],
            zip(evaluated.timestamps().astype(str), evaluated.values, static.sizes, predicted.sizes),
        ),
        "freepool.svg": svg_chart(
            "Net demand vs pool size",
            [
                ("demand", np.arange(len(evaluated)), evaluated.values),
                ("predicted", np.arange(len(evaluated)), predicted.sizes),
            ],
            hlines=[("static", float(static.sizes[0]))],
        ),
    }
    return result, extras


HANDLERS = {
    "stats": cmd_stats,
    "optimize": cmd_optimize,
    "forecast": cmd_forecast,
    "plan": cmd_plan,
    "ladder": cmd_ladder,
    "sensitivity": cmd_sensitivity,
    "headroom": cmd_headroom,
    "freepool": cmd_freepool,
}


def run(args) -> dict:
    """Execute a parsed command and return ``{filename: text}`` to write."""
    fmts = _formats(args.format)
    digests = _digests(args)
    result, extras = HANDLERS[args.command](args)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": _config_doc(args),
        "inputs": digests,
        "result": result,
    }
    files = {}
    if "json" in fmts:
        files[f"{args.command}.json"] = dumps(report)
        for name, text in extras.items():
            if name.endswith(".json"):
                files[name] = text
    for name, text in extras.items():
        ext = name.rsplit(".", 1)[-1]
        if ext in fmts and ext != "json":
            files[name] = text
    return files


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        files = run(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text, encoding="utf-8")
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except InvariantViolation as exc:
        print(f"commitplan: invariant violated: {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"commitplan: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except CommitPlanError as exc:
        print(f"commitplan: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"commitplan: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

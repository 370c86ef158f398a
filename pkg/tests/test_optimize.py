import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from commitplan.errors import ConfigError, NegativeCommitment
from commitplan.optimize import (
    cost_curve,
    evaluate_cost,
    minimize_commitment,
    quantile_commitment,
    scenario_sweep,
)
from commitplan.pricing import CostFactors
from commitplan.synthetic import mixed_series

from conftest import hourly
from oracles import empirical_quantile_bracket, grid_minimum, hinge_cost

PREMIUM = CostFactors(2.1, 1.0)
TOTAL = CostFactors(2.1, 1.0, "total")
# Demand is a count of instances; micro-unit resolution keeps ties meaningful.
demand = arrays(np.float64, st.integers(2, 60), elements=st.floats(0, 1000, allow_nan=False).map(lambda x: round(x, 6)))


def test_two_point_example():
    ev = evaluate_cost(hourly([10.0, 2.0]), 6.0, PREMIUM)
    assert ev.on_demand_area == 4 and ev.unused_area == 4
    assert ev.cost == pytest.approx(12.4)


def test_constant_series_costs():
    s = hourly(np.full(50, 8.0))
    assert evaluate_cost(s, 8.0, PREMIUM).cost == 0.0
    assert evaluate_cost(s, 8.0, TOTAL).cost == pytest.approx(1.0 * 8 * 50)
    best = minimize_commitment(s, PREMIUM)
    assert best.c == 8.0 and best.cost == 0.0 and "degenerate" in best.flags


def test_max_level_cost_pins_total_form():
    # Committing at the maximum of 100 over a 335-hour slice costs B*100*335
    # in the total form, the reference 33,500; the premium form cannot reach
    # that value because unused area is bounded by (max - min) * T.
    rng = np.random.default_rng(0)
    vals = np.clip(rng.normal(76.5, 9, 335), 53.5, 100)
    vals[:2] = [53.5, 100.0]
    assert evaluate_cost(vals, 100.0, TOTAL).cost == pytest.approx(33500)
    assert evaluate_cost(vals, 100.0, PREMIUM).cost < (100 - 53.5) * 335 < 33500


def test_nine_level_sweep_matches_reference_levels():
    vals = np.linspace(53.5, 100, 336)
    levels = [e.c for e in scenario_sweep(vals, TOTAL, 9)]
    reference = [53.5, 59.3, 65.1, 70.9, 76.7, 82.6, 88.4, 94.2, 100]
    np.testing.assert_allclose(levels, reference, atol=0.06)


@pytest.mark.parametrize("factors", [PREMIUM, TOTAL, CostFactors(1.0, 1.0), CostFactors(1.447, 1.0, "total")])
@given(vals=demand)
def test_brent_matches_grid_oracle(factors, vals):
    if np.ptp(vals) == 0:
        return
    best = minimize_commitment(vals, factors)
    _, oracle = grid_minimum(vals, factors.A, factors.B, factors.form, points=500)
    assert best.cost <= oracle * (1 + 1e-9) + 1e-9
    assert best.cost == pytest.approx(hinge_cost(vals, best.c, factors.A, factors.B, factors.form))


@given(vals=demand)
def test_optimum_is_quantile(vals):
    if np.ptp(vals) == 0:
        return
    c = minimize_commitment(vals, PREMIUM).c
    lo, hi = empirical_quantile_bracket(vals, PREMIUM.quantile)
    assert lo <= c <= hi
    assert c == quantile_commitment(vals, PREMIUM)


def test_symmetric_weights_give_median():
    vals = np.array([1.0, 5.0, 2.0, 9.0, 7.0])
    assert minimize_commitment(vals, CostFactors(1.0, 1.0)).c == 5.0


def test_premium_quantile_exhaustive(rng):
    vals = rng.uniform(10, 90, 400)
    c, _ = grid_minimum(vals, 2.1, 1.0, points=10_000)
    assert minimize_commitment(vals, PREMIUM).c == pytest.approx(c)
    assert np.mean(vals <= c) == pytest.approx(2.1 / 3.1, abs=1 / 400)


def test_uneconomical_total_form():
    best = minimize_commitment([3.0, 5.0, 8.0], CostFactors(1.0, 1.0, "total"))
    assert best.c == 3.0 and "uneconomical" in best.flags


def test_methods_agree(rng):
    vals = mixed_series(rng)
    costs = {m: minimize_commitment(vals, PREMIUM, m).cost for m in ("brent", "quantile_oracle", "grid")}
    assert costs["brent"] == pytest.approx(costs["quantile_oracle"])
    assert costs["grid"] >= costs["brent"] - 1e-9
    with pytest.raises(ConfigError):
        minimize_commitment(vals, PREMIUM, "newton")


def test_area_identity(rng):
    vals = mixed_series(rng)
    ev = evaluate_cost(vals, float(np.median(vals)), PREMIUM)
    assert ev.used_commit_area + ev.on_demand_area == pytest.approx(vals.sum())
    with pytest.raises(NegativeCommitment):
        evaluate_cost(vals, -1.0, PREMIUM)


def test_sweep_properties(rng):
    vals = mixed_series(rng)
    sweep = scenario_sweep(vals, PREMIUM, 9)
    assert sweep[0].c == vals.min() and sweep[-1].c == vals.max()
    assert min(e.cost for e in sweep) >= minimize_commitment(vals, PREMIUM).cost - 1e-9
    const = scenario_sweep(np.full(10, 4.0), PREMIUM, 5)
    assert len({(e.c, e.cost) for e in const}) == 1
    with pytest.raises(ConfigError):
        scenario_sweep(vals, PREMIUM, 1)


def test_cost_curve_matches_pointwise(rng):
    vals = mixed_series(rng, 100)
    levels = np.linspace(vals.min(), vals.max(), 25)
    for form in ("premium", "total"):
        f = PREMIUM.with_form(form)
        np.testing.assert_allclose(cost_curve(vals, levels, f), [evaluate_cost(vals, c, f).cost for c in levels])


def test_sub_hourly_scaling():
    from datetime import timedelta
    from commitplan.series import DemandSeries
    from conftest import MONDAY
    s = DemandSeries(MONDAY, timedelta(minutes=30), [10.0, 2.0])
    assert evaluate_cost(s, 6.0, PREMIUM).cost == pytest.approx(6.2)

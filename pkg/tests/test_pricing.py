import json

import pytest

from commitplan.errors import ConfigError, EmptySelection
from commitplan.pricing import CostFactors, RateCard, RateEntry, cost_factors_from_card, load_rate_card

# Savings plan discounts per family, 1-year and 3-year, as published.
PUBLISHED = {
    "C6i": (0.28, 0.52), "C7i": (0.28, 0.52), "C7GD": (0.28, 0.52), "M7GD": (0.27, 0.50),
    "Std_Dd_v4": (0.31, 0.54), "Std_Dpd_v5": (0.31, 0.54),
    "N2-Standard": (0.37, 0.55), "N4-Standard": (0.37, 0.55),
}


def test_bundled_card_matches_published_discounts():
    card = load_rate_card()
    assert {e.family: (e.discount_1y, e.discount_3y) for e in card.entries} == PUBLISHED


def test_three_year_factor_is_about_2_1():
    f = cost_factors_from_card(load_rate_card(), "3y")
    assert f.A == pytest.approx(1 / 0.47)
    assert round(f.A, 1) == 2.1 and f.B == 1.0


def test_one_year_factor():
    mean_discount = sum(d1 for d1, _ in PUBLISHED.values()) / 8
    assert mean_discount == pytest.approx(0.30875)
    f = cost_factors_from_card(load_rate_card(), "1y")
    assert f.A == pytest.approx(1 / (1 - mean_discount))
    assert f.A == pytest.approx(1.447, abs=1e-3)


def test_single_half_discount():
    card = RateCard((RateEntry("X", "y", 1.0, 0.3, 0.5),))
    f = cost_factors_from_card(card, "3y")
    assert f.A == pytest.approx(2.0) and f.B == 1.0


def test_selection_and_errors(tmp_path):
    card = load_rate_card()
    gcp = card.select(clouds={"GCP"})
    assert cost_factors_from_card(card, "3y", gcp).A == pytest.approx(1 / 0.45)
    with pytest.raises(EmptySelection):
        cost_factors_from_card(card, "3y", [])
    with pytest.raises(ConfigError):
        RateEntry("X", "y", 1.0, 0.5, 0.4)
    with pytest.raises(ConfigError):
        card.entries[0].discount("5y")
    bad = tmp_path / "card.json"
    bad.write_text(json.dumps({"entries": [{"cloud": "X"}]}))
    with pytest.raises(ConfigError):
        load_rate_card(bad)
    rt = tmp_path / "rt.json"
    rt.write_text(json.dumps(card.to_dict()))
    assert load_rate_card(rt) == card


def test_cost_factor_quantiles():
    assert CostFactors(2.1, 1.0).quantile == pytest.approx(2.1 / 3.1)
    assert CostFactors(2.1, 1.0, "total").quantile == pytest.approx(1.1 / 2.1)
    assert not CostFactors(1.0, 1.0, "total").economical
    with pytest.raises(ConfigError):
        CostFactors(2.1, 1.0, "gross")
    with pytest.raises(ConfigError):
        CostFactors(0.0, 1.0)

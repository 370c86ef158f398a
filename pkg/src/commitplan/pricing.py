"""Rate cards and the above/below-commitment cost weights derived from them."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, EmptySelection

COST_FORMS = ("premium", "total")


@dataclass(frozen=True)
class RateEntry:
    cloud: str
    family: str
    on_demand_hourly: float
    discount_1y: float
    discount_3y: float

    def __post_init__(self):
        if not self.on_demand_hourly > 0:
            raise ConfigError(f"{self.cloud}/{self.family}: on_demand_hourly must be > 0")
        for d in (self.discount_1y, self.discount_3y):
            if not 0.0 <= d < 1.0:
                raise ConfigError(f"{self.cloud}/{self.family}: discounts must lie in [0, 1)")
        if self.discount_3y < self.discount_1y:
            raise ConfigError(f"{self.cloud}/{self.family}: 3-year discount below 1-year discount")

    def discount(self, term: str) -> float:
        if term == "1y":
            return self.discount_1y
        if term == "3y":
            return self.discount_3y
        raise ConfigError(f"term must be '1y' or '3y', got {term!r}")


@dataclass(frozen=True)
class RateCard:
    entries: tuple

    @classmethod
    def from_dict(cls, doc: dict) -> "RateCard":
        try:
            return cls(tuple(RateEntry(**e) for e in doc["entries"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed rate card: {exc}") from None

    def to_dict(self) -> dict:
        return {"entries": [e.__dict__.copy() for e in self.entries]}

    def select(self, clouds=None, families=None) -> list:
        return [
            e for e in self.entries
            if (clouds is None or e.cloud in clouds) and (families is None or e.family in families)
        ]


def load_rate_card(path=None) -> RateCard:
    """Load a rate card JSON file; ``None`` loads the bundled default."""
    try:
        if path is None:
            text = resources.files("commitplan").joinpath("data/rate_card.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return RateCard.from_dict(json.loads(text))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read rate card {path}: {exc}") from None


@dataclass(frozen=True)
class CostFactors:
    """Weights of the commitment cost functional.

    ``A`` prices demand above the commitment and ``B`` prices commitment.
    With ``form="premium"`` cost is ``A*over + B*unused``; with
    ``form="total"`` it is ``B*c*T + A*over`` (every committed unit paid,
    overflow at the on-demand rate).
    """

    A: float
    B: float = 1.0
    form: str = "premium"

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0):
            raise ConfigError("cost factors A and B must be positive")
        if self.form not in COST_FORMS:
            raise ConfigError(f"cost form must be one of {COST_FORMS}")

    @property
    def economical(self) -> bool:
        return self.form == "premium" or self.A > self.B

    @property
    def quantile(self) -> float:
        """Demand quantile at which the cost is minimised."""
        if self.form == "premium":
            return self.A / (self.A + self.B)
        return max(0.0, (self.A - self.B) / self.A)

    def with_form(self, form: str) -> "CostFactors":
        return CostFactors(self.A, self.B, form)


def cost_factors_from_card(card, term: str = "3y", selection=None, form: str = "premium") -> CostFactors:
    """On-demand price in committed-price units, averaged over ``selection``.

    ``selection`` defaults to every entry of ``card``. The committed unit
    price is the plain mean of ``1 - discount`` and ``A`` is its reciprocal.
    """
    entries = list(card.entries if selection is None else selection)
    if not entries:
        raise EmptySelection("no rate card entries selected")
    committed = sum(1.0 - e.discount(term) for e in entries) / len(entries)
    return CostFactors(A=1.0 / committed, B=1.0, form=form)

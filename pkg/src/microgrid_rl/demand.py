"""Price-responsive residential load, internal tariff and compensation.

Price levels run from -2 (cheapest) to +2 (dearest). A household with
flexibility ``rho`` sheds ``rho * level / 2`` of its base load when the level
is positive and adds the same fraction when it is negative, so ``|level| == 2``
exercises its full flexibility.

The household functions read attributes only, so a :class:`Household` whose
fields hold arrays evaluates a whole population at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

PRICE_LEVELS = (-2, -1, 0, 1, 2)
PRICE_CAP = 0.10


@dataclass(frozen=True)
class Household:
    base_load: float
    flexibility: float
    compensation_prob: float


@dataclass(frozen=True)
class HouseholdPopulation:
    """N households sharing the hour axis: ``base_profile`` has shape (N, 24)."""

    base_profile: np.ndarray
    flexibility: np.ndarray
    compensation_prob: np.ndarray

    def __post_init__(self):
        if self.base_profile.ndim != 2 or self.base_profile.shape[1] != 24:
            raise ValueError("base_profile must have shape (N, 24)")
        n = self.base_profile.shape[0]
        if self.flexibility.shape != (n,) or self.compensation_prob.shape != (n,):
            raise ValueError("flexibility and compensation_prob must have shape (N,)")
        if np.any(self.base_profile < 0):
            raise ValueError("base loads must be non-negative")
        for name in ("flexibility", "compensation_prob"):
            v = getattr(self, name)
            if np.any((v < 0) | (v > 1)):
                raise ValueError(f"{name} must lie in [0, 1]")

    def __len__(self) -> int:
        return self.base_profile.shape[0]

    def at_hour(self, hour: int) -> Household:
        return Household(self.base_profile[:, hour], self.flexibility, self.compensation_prob)

    def base_total(self, hour: int) -> float:
        return float(self.base_profile[:, hour].sum())


@dataclass(frozen=True)
class PriceContext:
    market_price: float
    step_width: float
    level: int = 0
    intraday_prices: tuple = ()

    def __post_init__(self):
        if self.market_price <= 0:
            raise ValueError("market_price must be positive")
        if self.step_width < 0:
            raise ValueError("step_width must be non-negative")


def _check_level(level):
    if level not in PRICE_LEVELS:
        raise ValueError(f"price level must be one of {PRICE_LEVELS}, got {level}")


def internal_price(ctx: PriceContext) -> float:
    return max(ctx.market_price + ctx.level * ctx.step_width, 0.0)


def responsive_load(h: Household, level: int):
    _check_level(level)
    load = h.base_load * (1.0 - h.flexibility * (level / 2))
    return np.maximum(load, 0.0) if np.ndim(load) else max(load, 0.0)


def compensation(h: Household, level: int, dt: float = 1.0, reference_price: float = 1.0):
    """Payment for load shed under a high price level. Zero at level <= 0."""
    _check_level(level)
    amount = h.compensation_prob * h.flexibility * h.base_load * max(level / 2, 0.0)
    return amount * reference_price * dt


def price_cap_violation(
    intraday_prices: Sequence[float], market_prices: Sequence[float], hours: int = 24
) -> float:
    """Fractional excess of the day's mean internal price over 110 % of market."""
    intraday = np.asarray(intraday_prices, dtype=float)
    market = np.asarray(market_prices, dtype=float)
    if intraday.size != hours or market.size != hours:
        raise ValueError(
            f"price cap needs a complete day of {hours} prices, "
            f"got {intraday.size} internal and {market.size} market"
        )
    m = market.mean()
    excess = (intraday.mean() - m) / m - PRICE_CAP
    # rounding at the cap edge must not register as a violation
    return float(excess) if excess > 1e-12 else 0.0

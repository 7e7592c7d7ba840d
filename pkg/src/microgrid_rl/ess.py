"""Battery energy-storage model.

A battery is a frozen value; ``charge`` and ``discharge`` return a new
battery together with the energy actually moved. Energy quantities are kWh
per step, powers are kW.
"""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Battery:
    level: float
    capacity_max: float
    capacity_min: float = 0.0
    soc_min: float = 0.0
    soc_max: float = 1.0
    p_charge_max: float = float("inf")
    p_discharge_max: float = float("inf")
    efficiency: float = 1.0
    depreciation_rate: float = 0.0
    throughput_today: float = 0.0

    def __post_init__(self):
        if self.capacity_max <= 0:
            raise ValueError("capacity_max must be positive")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")
        if self.lower_bound > self.upper_bound:
            raise ValueError("capacity and soc bounds leave no feasible level")

    @property
    def lower_bound(self) -> float:
        """Lowest admissible level, honouring both the kWh and the soc floor."""
        return max(self.capacity_min, self.soc_min * self.capacity_max)

    @property
    def upper_bound(self) -> float:
        return min(self.capacity_max, self.soc_max * self.capacity_max)

    @property
    def headroom(self) -> float:
        return max(self.upper_bound - self.level, 0.0)

    @property
    def available(self) -> float:
        return max(self.level - self.lower_bound, 0.0)

    def max_accept(self, dt: float = 1.0) -> float:
        """Largest offer that ``charge`` would accept in full."""
        return min(self.p_charge_max * dt, self.headroom / self.efficiency)

    def max_deliver(self, dt: float = 1.0) -> float:
        return min(self.p_discharge_max * dt, self.available * self.efficiency)


def charge(b: Battery, offered: float, dt: float = 1.0) -> tuple[Battery, float, float]:
    """Store up to ``offered`` kWh; returns (battery, accepted, overflow)."""
    if offered < 0:
        raise ValueError("offered energy must be non-negative")
    accepted = min(offered, b.max_accept(dt))
    if accepted <= 0.0:
        return b, 0.0, offered
    # snap to the bound so repeated rounding never pushes past it
    level = min(b.level + b.efficiency * accepted, b.upper_bound)
    if accepted == b.headroom / b.efficiency:
        level = b.upper_bound
    out = replace(b, level=level, throughput_today=b.throughput_today + accepted)
    return out, accepted, offered - accepted


def discharge(b: Battery, requested: float, dt: float = 1.0) -> tuple[Battery, float, float]:
    """Draw up to ``requested`` kWh; returns (battery, delivered, shortfall)."""
    if requested < 0:
        raise ValueError("requested energy must be non-negative")
    delivered = min(requested, b.max_deliver(dt))
    if delivered <= 0.0:
        return b, 0.0, requested
    level = max(b.level - delivered / b.efficiency, b.lower_bound)
    if delivered == b.available * b.efficiency:
        level = b.lower_bound
    out = replace(b, level=level, throughput_today=b.throughput_today + delivered)
    return out, delivered, requested - delivered


def battery_soc(b: Battery) -> float:
    return b.level / b.capacity_max


def depreciation_cost(b: Battery) -> float:
    """Wear cost of today's cycling, metered on kWh throughput."""
    return b.depreciation_rate * b.throughput_today


def new_day(b: Battery) -> Battery:
    return replace(b, throughput_today=0.0)

"""Thermostatically controlled loads: thermal model, deadband SOC and
priority-ordered energy allocation.

Units are heaters. A unit colder than its deadband is forced on, a unit
warmer than its deadband is forced off, and every other unit may receive
discretionary energy. The discretionary budget is handed out coldest first
(lowest SOC), one whole unit at a time.

``tcl_soc`` and ``update_temperature`` only use attribute arithmetic, so they
accept a single :class:`TclUnit` as well as a :class:`TclCluster` whose fields
are arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

# switch states, same sign convention as the deadband rule: above band is +1
ABOVE_BAND = 1   # forced off
IN_BAND = 0      # free
BELOW_BAND = -1  # forced on


@dataclass(frozen=True)
class TclUnit:
    temp_in: float
    temp_min: float
    temp_max: float
    power: float
    thermal_leak: float
    heat_gain: float
    switch: int = IN_BAND

    def __post_init__(self):
        if not self.temp_min < self.temp_max:
            raise ValueError("temp_min must be below temp_max")
        if self.power <= 0:
            raise ValueError("power must be positive")
        if not 0.0 <= self.thermal_leak <= 1.0:
            raise ValueError("thermal_leak must lie in [0, 1]")


@dataclass(frozen=True)
class TclCluster:
    """Struct-of-arrays view over N units."""

    temp_in: np.ndarray
    temp_min: np.ndarray
    temp_max: np.ndarray
    power: np.ndarray
    thermal_leak: np.ndarray
    heat_gain: np.ndarray
    switch: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.temp_in)
        for name in ("temp_min", "temp_max", "power", "thermal_leak", "heat_gain"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {n}")
        if self.switch is None:
            object.__setattr__(self, "switch", deadband_switch(self))
        if n and not np.all(self.temp_min < self.temp_max):
            raise ValueError("temp_min must be below temp_max for every unit")
        if n and not np.all(self.power > 0):
            raise ValueError("power must be positive for every unit")

    def __len__(self) -> int:
        return len(self.temp_in)

    @classmethod
    def from_units(cls, units: Sequence[TclUnit]) -> "TclCluster":
        def col(name):
            return np.array([getattr(u, name) for u in units], dtype=float)

        return cls(
            temp_in=col("temp_in"),
            temp_min=col("temp_min"),
            temp_max=col("temp_max"),
            power=col("power"),
            thermal_leak=col("thermal_leak"),
            heat_gain=col("heat_gain"),
            switch=np.array([u.switch for u in units], dtype=int),
        )

    def units(self) -> list[TclUnit]:
        return [
            TclUnit(
                float(self.temp_in[i]), float(self.temp_min[i]), float(self.temp_max[i]),
                float(self.power[i]), float(self.thermal_leak[i]), float(self.heat_gain[i]),
                int(self.switch[i]),
            )
            for i in range(len(self))
        ]

    @classmethod
    def empty(cls) -> "TclCluster":
        z = np.zeros(0)
        return cls(z, z, z, z, z, z, np.zeros(0, dtype=int))


Tcls = Union[TclCluster, Sequence[TclUnit]]


def tcl_soc(unit):
    """Position of the indoor temperature inside the deadband.

    Not clamped: values below 0 or above 1 mean the unit left its band.
    """
    return (unit.temp_in - unit.temp_min) / (unit.temp_max - unit.temp_min)


def deadband_switch(unit):
    return _switch_from_soc(tcl_soc(unit))


def _switch_from_soc(soc):
    if np.ndim(soc) == 0:
        return ABOVE_BAND if soc > 1 else BELOW_BAND if soc < 0 else IN_BAND
    return np.where(soc > 1, ABOVE_BAND, np.where(soc < 0, BELOW_BAND, IN_BAND)).astype(int)


def update_temperature(unit, outdoor: float, heating_on, dt: float = 1.0):
    """First-order building model: leak toward outdoor plus switched heating.

    Returns a copy of ``unit`` with the new indoor temperature and the
    deadband switch recomputed.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    on = np.asarray(heating_on, dtype=float) if np.ndim(heating_on) else float(bool(heating_on))
    temp = (
        unit.temp_in
        + unit.thermal_leak * (outdoor - unit.temp_in) * dt
        + unit.heat_gain * on * dt
    )
    if np.ndim(temp) == 0:
        temp = float(temp)
    soc = (temp - unit.temp_min) / (unit.temp_max - unit.temp_min)
    return replace(unit, temp_in=temp, switch=_switch_from_soc(soc))


@dataclass(frozen=True)
class Allocation:
    per_unit_on: np.ndarray
    consumed: float
    forced_on: np.ndarray
    forced_off: np.ndarray


def allocate(cluster: Tcls, budget: float, dt: float = 1.0) -> Allocation:
    """Grant ``budget`` kWh across the cluster by SOC priority.

    Forced-on units are served first and their draw comes out of the budget
    (their draw may exceed it). The remainder goes to in-band units in
    ascending SOC order; allocation stops at the first unit that no longer
    fits, so a larger budget only ever extends the set of heated units.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if not isinstance(cluster, TclCluster):
        cluster = TclCluster.from_units(list(cluster))
    n = len(cluster)
    if n == 0:
        empty = np.zeros(0, dtype=bool)
        return Allocation(empty, 0.0, empty, empty)

    soc = tcl_soc(cluster)
    energy = cluster.power * dt
    forced_on = soc < 0
    forced_off = soc > 1
    on = forced_on.copy()

    remaining = budget - float(energy[forced_on].sum())
    free = np.flatnonzero(~forced_on & ~forced_off)
    if remaining > 0 and free.size:
        order = free[np.argsort(soc[free], kind="stable")]
        fits = np.cumsum(energy[order]) <= remaining
        # prefix only: stop at the first unit that does not fit
        n_grant = int(np.argmin(fits)) if not fits.all() else fits.size
        on[order[:n_grant]] = True

    return Allocation(on, float(energy[on].sum()), forced_on, forced_off)

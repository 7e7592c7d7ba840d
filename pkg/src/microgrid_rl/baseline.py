"""Fixed-price retailer reference policy.

The retailer uses none of the microgrid's flexibility: TCLs only heat when
their own thermostat forces them to, the internal price tracks the market
price, the battery is left alone and every imbalance is traded with the main
grid. In action terms that is one fixed index, played every hour. That
index alone would still push surplus into the battery once the sale limit
binds, so the retailer's grid also has its battery rates set to zero and
such surplus is curtailed instead.
"""
from __future__ import annotations

import dataclasses
from typing import Iterable, Optional

import numpy as np

from .config import EnvConfig
from .data import Scenario, WindTrace, load_scenario
from .env import RETAILER_ACTION, Microgrid, daily_cost, run_fixed_day


def retailer_grid(env_config: EnvConfig, wind_trace: Optional[WindTrace] = None) -> Microgrid:
    env_config = dataclasses.replace(env_config, battery_p_charge_max=0.0, battery_p_discharge_max=0.0)
    scenario = load_scenario(env_config)
    if wind_trace is not None:
        scenario = Scenario(wind_trace, scenario.market_price, scenario.outdoor_temp)
    return Microgrid(env_config, scenario)


def retailer_baseline(env_config: EnvConfig, wind_trace: Optional[WindTrace] = None,
                      days: Iterable[int] = range(20, 30), seed: Optional[int] = None) -> np.ndarray:
    """Daily cost of the retailer policy for each day in ``days``."""
    grid = retailer_grid(env_config, wind_trace)
    return np.array([daily_cost(run_fixed_day(grid, d, RETAILER_ACTION, seed)) for d in days])

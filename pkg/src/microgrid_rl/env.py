"""The microgrid MDP: one step is one hour, one episode is one day.

Each hour the agent picks one of 80 discrete actions, a combination of

* a TCL energy level (0, 1/3, 2/3 or all of the cluster's rated energy),
* a price level from -2 to +2 applied to the internal tariff,
* a deficit priority (discharge the battery before buying, or the reverse),
* a surplus priority (charge the battery before selling, or the reverse).

:class:`Microgrid` holds the static pieces (config, data, the sampled
population) and exposes pure ``reset``/``step`` functions over immutable
:class:`EnvState` values. :class:`MicrogridGym` wraps that in the familiar
stateful ``reset()``/``step(a)`` API used by the learners.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields, replace
from enum import IntEnum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import demand, ess, tcl
from .config import EnvConfig
from .data import HOURS, Scenario, load_scenario

N_ACTIONS = 80
OBS_DIM = 7
TCL_LEVELS = 4


class InvalidActionError(ValueError):
    pass


class DayOutOfRangeError(IndexError):
    pass


class IncompleteEpisodeError(ValueError):
    pass


class DeficitPriority(IntEnum):
    BATTERY_FIRST = 0
    GRID_FIRST = 1


class ExcessPriority(IntEnum):
    CHARGE_FIRST = 0
    SELL_FIRST = 1


@dataclass(frozen=True)
class StructuredAction:
    tcl_level: int
    price_level: int
    deficit_priority: DeficitPriority
    excess_priority: ExcessPriority

    def __post_init__(self):
        if not 0 <= self.tcl_level < TCL_LEVELS:
            raise InvalidActionError(f"tcl_level {self.tcl_level} outside 0..3")
        if self.price_level not in demand.PRICE_LEVELS:
            raise InvalidActionError(f"price_level {self.price_level} outside -2..2")


def decode_action(index: int) -> StructuredAction:
    if isinstance(index, (bool, np.bool_)) or not isinstance(index, (int, np.integer)):
        raise InvalidActionError(f"action index must be an integer, got {index!r}")
    if not 0 <= index < N_ACTIONS:
        raise InvalidActionError(f"action index {index} outside 0..{N_ACTIONS - 1}")
    index = int(index)
    index, ae = divmod(index, 2)
    index, ad = divmod(index, 2)
    tcl_level, price_offset = divmod(index, 5)
    return StructuredAction(tcl_level, price_offset - 2, DeficitPriority(ad), ExcessPriority(ae))


def encode_action(a: StructuredAction) -> int:
    return ((a.tcl_level * 5 + a.price_level + 2) * 2 + int(a.deficit_priority)) * 2 + int(a.excess_priority)


# flexibility disabled: thermostat-only TCLs, market tariff, grid takes all imbalance
RETAILER_ACTION = encode_action(
    StructuredAction(0, 0, DeficitPriority.GRID_FIRST, ExcessPriority.SELL_FIRST)
)


@dataclass(frozen=True)
class EnvState:
    hour_of_day: int
    day_index: int
    tcls: tcl.TclCluster
    battery: ess.Battery
    households: demand.HouseholdPopulation
    market_price: float
    price_level: int
    wind_available: float
    outdoor_temp: float
    cumulative_day_cost: float = 0.0
    price_sum_today: float = 0.0
    intraday_prices: tuple = ()
    market_prices_today: tuple = ()


@dataclass(frozen=True)
class DispatchResult:
    delta_t: float
    ess_charge: float
    ess_discharge: float
    tcl_energy: float
    unserved: float
    curtailed: float
    buy: float
    sell: float
    residential_load: float
    wind: float
    internal_price: float
    compensation: float
    tcl_on: np.ndarray
    battery: ess.Battery


@dataclass(frozen=True)
class StepInfo:
    day: int
    hour: int
    delta_t: float
    revenue: float
    cost: float
    ess_depreciation: float
    unserved: float
    compensation: float
    buy: float
    sell: float
    ess_charge: float
    ess_discharge: float
    tcl_energy: float
    residential_load: float
    wind: float
    curtailed: float
    internal_price: float
    market_price: float
    grid_buy_price: float
    grid_sell_price: float
    price_cap_penalty: float
    unserved_penalty: float
    wind_cost: float
    battery_soc: float
    mean_tcl_soc: float
    mean_indoor_temp: float
    action: int = -1


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: float
    info: StepInfo
    terminal: bool


def _normalize(values, low, high):
    v = np.clip(np.asarray(values, dtype=float), low, high)
    return (v - low) / (high - low)


class Microgrid:
    """Static environment definition; ``reset`` and ``step`` never mutate it."""

    def __init__(self, config: Optional[EnvConfig] = None, scenario: Optional[Scenario] = None):
        self.config = config or EnvConfig()
        self.config.validate()
        self.scenario = scenario if scenario is not None else load_scenario(self.config)
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        self._tcl_params = self._sample_tcls(rng)
        self.households = self._sample_households(rng)
        m = self.scenario.market_price
        self.grid_buy_price = m * cfg.grid_buy_ratio + cfg.grid_buy_fee
        self.grid_sell_price = m * cfg.grid_sell_ratio
        if np.any(self.grid_buy_price <= self.grid_sell_price):
            raise ValueError("grid purchase price must exceed the sale price every hour")
        self.penalty_unserved = (
            cfg.penalty_unserved if cfg.penalty_unserved is not None
            else 10.0 * float(self.grid_buy_price.max())
        )
        self._obs_low = np.array(cfg.obs_low, dtype=float)
        self._obs_high = np.array(cfg.obs_high, dtype=float)

    # population -----------------------------------------------------------
    def _sample_tcls(self, rng) -> dict:
        cfg, n = self.config, self.config.n_tcls

        def jitter(mean, width):
            return mean + rng.uniform(-width, width, size=n)

        return dict(
            temp_min=jitter(cfg.tcl_temp_min, cfg.tcl_band_jitter),
            temp_max=jitter(cfg.tcl_temp_max, cfg.tcl_band_jitter),
            power=np.maximum(jitter(cfg.tcl_power, cfg.tcl_power_jitter), 1e-3),
            thermal_leak=np.clip(jitter(cfg.tcl_leak, cfg.tcl_leak_jitter), 0.0, 1.0),
            heat_gain=np.maximum(jitter(cfg.tcl_heat_gain, cfg.tcl_heat_gain_jitter), 0.0),
        )

    def _sample_households(self, rng) -> demand.HouseholdPopulation:
        cfg, n = self.config, self.config.n_households
        scale = 1.0 + rng.uniform(-cfg.base_jitter, cfg.base_jitter, size=n)
        profile = np.outer(np.clip(scale, 0.0, None), np.asarray(cfg.base_profile, dtype=float))
        return demand.HouseholdPopulation(
            base_profile=profile.reshape(n, HOURS),
            flexibility=rng.uniform(cfg.flexibility_min, cfg.flexibility_max, size=n),
            compensation_prob=rng.uniform(cfg.compensation_prob_min, cfg.compensation_prob_max, size=n),
        )

    @property
    def days(self) -> int:
        return self.scenario.days

    def _hour_index(self, day: int, hour: int) -> int:
        return (day % self.days) * HOURS + hour

    # episode --------------------------------------------------------------
    def reset(self, day_index: int, seed: Optional[int] = None) -> EnvState:
        """Start of ``day_index``: temperatures uniform in each deadband,
        battery at its initial SOC. ``seed`` defaults to the config seed."""
        if not 0 <= day_index < self.days:
            raise DayOutOfRangeError(f"day {day_index} outside the {self.days}-day trace")
        cfg = self.config
        seed = cfg.seed if seed is None else seed
        rng = np.random.default_rng([seed, day_index, 1])
        p = self._tcl_params
        temps = rng.uniform(p["temp_min"], p["temp_max"])
        cluster = tcl.TclCluster(temp_in=temps, **p)
        battery = ess.Battery(
            level=cfg.battery_initial_soc * cfg.battery_capacity,
            capacity_max=cfg.battery_capacity,
            capacity_min=cfg.battery_capacity_min,
            soc_min=cfg.battery_soc_min,
            soc_max=cfg.battery_soc_max,
            p_charge_max=cfg.battery_p_charge_max,
            p_discharge_max=cfg.battery_p_discharge_max,
            efficiency=cfg.battery_efficiency,
            depreciation_rate=cfg.battery_depreciation,
        )
        return self._at_hour(day_index, 0, cluster, battery, replace_accumulators=True)

    def _at_hour(self, day, hour, cluster, battery, prev: Optional[EnvState] = None, replace_accumulators=False):
        k = self._hour_index(day, hour)
        s = self.scenario
        if prev is None or replace_accumulators:
            acc = dict(cumulative_day_cost=0.0, price_sum_today=0.0, intraday_prices=(), market_prices_today=())
        else:
            acc = dict(
                cumulative_day_cost=prev.cumulative_day_cost,
                price_sum_today=prev.price_sum_today,
                intraday_prices=prev.intraday_prices,
                market_prices_today=prev.market_prices_today,
            )
        return EnvState(
            hour_of_day=hour,
            day_index=day,
            tcls=cluster,
            battery=battery,
            households=self.households,
            market_price=float(s.market_price[k]),
            price_level=0 if prev is None else prev.price_level,
            wind_available=s.wind.available(k),
            outdoor_temp=float(s.outdoor_temp[k]),
            **acc,
        )

    def grid_prices(self, state: EnvState) -> tuple[float, float]:
        k = self._hour_index(state.day_index, state.hour_of_day)
        return float(self.grid_buy_price[k]), float(self.grid_sell_price[k])

    # observation ----------------------------------------------------------
    def encode_observation(self, state: EnvState) -> np.ndarray:
        """[mean TCL SOC, battery SOC, market price, mean indoor temp, wind,
        total household base load, hour], each min-max scaled to [0, 1]."""
        if len(state.tcls):
            mean_soc = float(np.mean(tcl.tcl_soc(state.tcls)))
            mean_temp = float(np.mean(state.tcls.temp_in))
        else:
            mean_soc, mean_temp = self._obs_low[0], self._obs_low[3]
        raw = [
            mean_soc,
            ess.battery_soc(state.battery),
            state.market_price,
            mean_temp,
            state.wind_available,
            state.households.base_total(state.hour_of_day) if len(state.households) else 0.0,
            state.hour_of_day,
        ]
        return _normalize(raw, self._obs_low, self._obs_high)

    # dynamics -------------------------------------------------------------
    def dispatch(self, state: EnvState, action: StructuredAction) -> DispatchResult:
        """Allocate TCL energy, settle the hour's imbalance by priority and
        clamp the grid exchange; whatever the clamp leaves over is unserved
        (deficit) or curtailed (surplus)."""
        cfg, dt = self.config, self.config.dt
        ctx = demand.PriceContext(state.market_price, cfg.price_step_width, action.price_level)
        price = demand.internal_price(ctx)
        hh = state.households.at_hour(state.hour_of_day)
        if len(state.households):
            load = float(np.sum(demand.responsive_load(hh, action.price_level)))
            comp = float(np.sum(demand.compensation(
                hh, action.price_level, dt, cfg.compensation_price_factor * state.market_price)))
        else:
            load, comp = 0.0, 0.0

        budget = action.tcl_level / 3 * len(state.tcls) * cfg.tcl_power * dt
        alloc = tcl.allocate(state.tcls, budget, dt)
        tcl_energy = alloc.consumed

        wind = state.wind_available
        net = wind - tcl_energy - load
        battery = state.battery
        buy = sell = charged = delivered = unserved = curtailed = 0.0
        if net < 0:
            deficit = -net
            if action.deficit_priority == DeficitPriority.BATTERY_FIRST:
                battery, delivered, rest = ess.discharge(battery, deficit, dt)
                buy = min(rest, cfg.p_max_grid * dt)
                unserved = rest - buy
            else:
                buy = min(deficit, cfg.p_max_grid * dt)
                battery, delivered, unserved = ess.discharge(battery, deficit - buy, dt)
        elif net > 0:
            surplus = net
            if action.excess_priority == ExcessPriority.CHARGE_FIRST:
                battery, charged, rest = ess.charge(battery, surplus, dt)
                sell = min(rest, -cfg.p_min_grid * dt)
                curtailed = rest - sell
            else:
                sell = min(surplus, -cfg.p_min_grid * dt)
                battery, charged, curtailed = ess.charge(battery, surplus - sell, dt)

        return DispatchResult(
            delta_t=buy - sell, ess_charge=charged, ess_discharge=delivered,
            tcl_energy=tcl_energy, unserved=unserved, curtailed=curtailed,
            buy=buy, sell=sell, residential_load=load, wind=wind,
            internal_price=price, compensation=comp, tcl_on=alloc.per_unit_on,
            battery=battery,
        )

    def step_reward(self, d: DispatchResult, state: EnvState, action: StructuredAction,
                    price_cap_penalty: float = 0.0) -> tuple[float, StepInfo]:
        cfg = self.config
        p_up, p_down = self.grid_prices(state)
        tcl_price = d.internal_price if cfg.tcl_billing == "internal" else cfg.wind_cost
        revenue = d.internal_price * d.residential_load + tcl_price * d.tcl_energy + p_down * max(-d.delta_t, 0.0)
        depreciation = cfg.battery_depreciation * (d.ess_charge + d.ess_discharge)
        unserved_penalty = self.penalty_unserved * d.unserved
        cost = depreciation + p_up * max(d.delta_t, 0.0) + d.compensation + unserved_penalty + price_cap_penalty
        info = StepInfo(
            day=state.day_index, hour=state.hour_of_day, delta_t=d.delta_t,
            revenue=revenue, cost=cost, ess_depreciation=depreciation,
            unserved=d.unserved, compensation=d.compensation, buy=d.buy, sell=d.sell,
            ess_charge=d.ess_charge, ess_discharge=d.ess_discharge,
            tcl_energy=d.tcl_energy, residential_load=d.residential_load,
            wind=d.wind, curtailed=d.curtailed, internal_price=d.internal_price,
            market_price=state.market_price, grid_buy_price=p_up, grid_sell_price=p_down,
            price_cap_penalty=price_cap_penalty, unserved_penalty=unserved_penalty,
            wind_cost=cfg.wind_cost * d.wind, battery_soc=ess.battery_soc(d.battery),
            mean_tcl_soc=float(np.mean(tcl.tcl_soc(state.tcls))) if len(state.tcls) else 0.0,
            mean_indoor_temp=float(np.mean(state.tcls.temp_in)) if len(state.tcls) else 0.0,
            action=encode_action(action),
        )
        return revenue - cost, info

    def step(self, state: EnvState, action_index: int) -> StepOutcome:
        action = decode_action(action_index)
        d = self.dispatch(state, action)
        intraday = state.intraday_prices + (d.internal_price,)
        market_today = state.market_prices_today + (state.market_price,)
        terminal = state.hour_of_day == HOURS - 1
        cap_penalty = 0.0
        if terminal:
            cap_penalty = self.config.price_cap_penalty * demand.price_cap_violation(intraday, market_today)
        reward, info = self.step_reward(d, state, action, cap_penalty)

        cluster = state.tcls
        if len(cluster):
            cluster = tcl.update_temperature(cluster, state.outdoor_temp, d.tcl_on, self.config.dt)
        carried = replace(
            state,
            cumulative_day_cost=state.cumulative_day_cost + info.cost - info.grid_sell_price * info.sell,
            price_sum_today=state.price_sum_today + d.internal_price,
            intraday_prices=intraday,
            market_prices_today=market_today,
            price_level=action.price_level,
        )
        if terminal:
            nxt = self._at_hour(state.day_index + 1, 0, cluster, ess.new_day(d.battery), replace_accumulators=True)
        else:
            nxt = self._at_hour(state.day_index, state.hour_of_day + 1, cluster, d.battery, prev=carried)
        return StepOutcome(nxt, reward, info, terminal)


def daily_cost(infos: Sequence[StepInfo]) -> float:
    """Operating cost of one complete day: generation cost, battery wear and
    the net grid bill (purchases minus sales), plus compensation and
    penalties carried in the step cost."""
    if len(infos) != HOURS:
        raise IncompleteEpisodeError(f"daily cost needs {HOURS} steps, got {len(infos)}")
    return float(sum(i.cost - i.grid_sell_price * i.sell + i.wind_cost for i in infos))


def write_trace_csv(infos: Sequence[StepInfo], path) -> None:
    names = [f.name for f in fields(StepInfo)]
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=names)
        w.writeheader()
        for i in infos:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(i).items()})


class MicrogridGym:
    """Stateful wrapper: ``reset(day)`` -> obs, ``step(a)`` -> (obs, reward, done, info)."""

    def __init__(self, grid: Microgrid, seed: Optional[int] = None):
        self.grid = grid
        self.seed = seed
        self.state: Optional[EnvState] = None

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    def reset(self, day_index: int = 0) -> np.ndarray:
        self.state = self.grid.reset(day_index, self.seed)
        return self.grid.encode_observation(self.state)

    def step(self, action: int):
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        out = self.grid.step(self.state, action)
        self.state = out.next_state
        return self.grid.encode_observation(out.next_state), out.reward, out.terminal, out.info


def run_fixed_day(grid: Microgrid, day: int, actions, seed: Optional[int] = None) -> list[StepInfo]:
    """Play one day with a fixed action per hour (an int or 24 ints)."""
    if isinstance(actions, (int, np.integer)):
        actions = [int(actions)] * HOURS
    state = grid.reset(day, seed)
    infos = []
    for a in actions:
        out = grid.step(state, a)
        infos.append(out.info)
        state = out.next_state
    return infos

from dataclasses import fields, replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from microgrid_rl import ess
from microgrid_rl.config import EnvConfig
from microgrid_rl.data import Scenario, WindTrace
from microgrid_rl.demand import HouseholdPopulation
from microgrid_rl.env import (
    N_ACTIONS, RETAILER_ACTION, DayOutOfRangeError, DeficitPriority, ExcessPriority, IncompleteEpisodeError,
    InvalidActionError, Microgrid, StructuredAction, daily_cost, decode_action, encode_action, run_fixed_day,
    write_trace_csv,
)

BF, GF = DeficitPriority.BATTERY_FIRST, DeficitPriority.GRID_FIRST
CF, SF = ExcessPriority.CHARGE_FIRST, ExcessPriority.SELL_FIRST


def flat_grid(days=2, wind=0.0, price=4.0, **env):
    """Grid on a constant scenario; sale price 2 and purchase price 3 at the default price 4."""
    n = days * 24
    sc = Scenario(WindTrace(np.full(n, wind)), np.full(n, price), np.full(n, 0.0))
    env.setdefault("grid_buy_ratio", 0.75)
    env.setdefault("grid_buy_fee", 0.0)
    env.setdefault("grid_sell_ratio", 0.5)
    return Microgrid(EnvConfig(**env), scenario=sc)


def one_house(load):
    return HouseholdPopulation(np.full((1, 24), float(load)), np.zeros(1), np.zeros(1))


def bare_state(grid, wind, load, battery):
    s = grid.reset(0)
    return replace(s, households=one_house(load), wind_available=wind, battery=battery)


def act(tcl=0, price=0, ad=GF, ae=SF):
    return StructuredAction(tcl, price, ad, ae)


# actions ------------------------------------------------------------------

def test_decode_examples():
    assert decode_action(0) == act(0, -2, BF, CF)
    assert decode_action(79) == act(3, 2, GF, SF)
    assert decode_action(45) == act(2, -1, BF, SF)
    assert RETAILER_ACTION == encode_action(act(0, 0, GF, SF))


def test_action_bijection():
    decoded = [decode_action(i) for i in range(N_ACTIONS)]
    assert [encode_action(a) for a in decoded] == list(range(N_ACTIONS))
    assert len(set(decoded)) == N_ACTIONS


@pytest.mark.parametrize("bad", [-1, 80, 2.0, True, "3"])
def test_invalid_action(bad):
    with pytest.raises(InvalidActionError):
        decode_action(bad)


# reset and observation ----------------------------------------------------

def test_reset_defaults():
    grid = Microgrid()
    s = grid.reset(0)
    assert len(s.tcls) == 150 and len(s.households) == 150
    assert ess.battery_soc(s.battery) == pytest.approx(0.5)
    assert s.hour_of_day == 0
    p = grid._tcl_params
    assert np.all((s.tcls.temp_in >= p["temp_min"]) & (s.tcls.temp_in <= p["temp_max"]))
    with pytest.raises(DayOutOfRangeError):
        grid.reset(grid.days)


def test_zero_tcls_step():
    grid = Microgrid(EnvConfig(n_tcls=0))
    s = grid.reset(0)
    assert len(s.tcls) == 0
    out = grid.step(s, 79)
    assert out.info.tcl_energy == 0.0
    assert np.all(np.isfinite(grid.encode_observation(s)))


def test_observation_edges():
    low = (0.0, 0.0, 1.0, 14.0, 0.0, 0.0, 0.0)
    high = (1.0, 1.0, 10.0, 30.0, 400.0, 250.0, 23.0)
    grid = flat_grid(n_tcls=1, tcl_band_jitter=0.0, obs_low=low, obs_high=high, battery_soc_min=0.0,
                     battery_initial_soc=0.5, battery_soc_max=1.0)
    s = grid.reset(0)
    cl = replace(s.tcls, temp_in=np.array([s.tcls.temp_min[0]]))
    b0 = replace(s.battery, level=0.0)
    lo = replace(s, tcls=cl, battery=b0, market_price=1.0, wind_available=0.0, households=one_house(0.0))
    # indoor temperature sits at the band floor, above the observation floor
    obs = grid.encode_observation(lo)
    np.testing.assert_allclose(obs[[0, 1, 2, 4, 5, 6]], 0.0)
    assert obs[3] == pytest.approx((18.0 - 14.0) / 16.0)

    cold = replace(cl, temp_in=np.array([5.0]))
    assert grid.encode_observation(replace(lo, tcls=cold))[3] == 0.0

    hot = replace(cl, temp_in=np.array([40.0]))
    hi = replace(s, tcls=hot, battery=replace(s.battery, level=s.battery.capacity_max), market_price=10.0,
                 wind_available=1e6, households=one_house(250.0), hour_of_day=23)
    np.testing.assert_allclose(grid.encode_observation(hi), 1.0)
    assert grid.encode_observation(s)[1] == pytest.approx(0.5)


# dispatch -----------------------------------------------------------------

def test_dispatch_grid_only():
    grid = flat_grid(n_tcls=0, n_households=0)
    empty = ess.Battery(level=0.0, capacity_max=100.0)
    d = grid.dispatch(bare_state(grid, 0.0, 10.0, empty), act(ad=GF))
    assert d.delta_t == pytest.approx(10.0)
    assert d.unserved == 0.0


def test_dispatch_charge_first():
    grid = flat_grid(n_tcls=0, n_households=0)
    b = ess.Battery(level=96.0, capacity_max=100.0)
    d = grid.dispatch(bare_state(grid, 20.0, 10.0, b), act(ae=CF))
    assert d.ess_charge == pytest.approx(4.0)
    assert d.delta_t == pytest.approx(-6.0)


def test_dispatch_battery_first():
    grid = flat_grid(n_tcls=0, n_households=0)
    b = ess.Battery(level=3.0, capacity_max=100.0)
    d = grid.dispatch(bare_state(grid, 5.0, 10.0, b), act(ad=BF))
    assert d.ess_discharge == pytest.approx(3.0)
    assert d.delta_t == pytest.approx(2.0)


def test_dispatch_clamp_reports_unserved():
    grid = flat_grid(n_tcls=0, n_households=0, p_max_grid=5.0, p_min_grid=-5.0)
    empty = ess.Battery(level=0.0, capacity_max=100.0)
    d = grid.dispatch(bare_state(grid, 0.0, 12.0, empty), act(ad=GF))
    assert d.delta_t == 5.0 and d.unserved == pytest.approx(7.0)
    full = ess.Battery(level=100.0, capacity_max=100.0)
    d = grid.dispatch(bare_state(grid, 20.0, 0.0, full), act(ae=SF))
    assert d.delta_t == -5.0 and d.curtailed == pytest.approx(15.0)


# reward and cost ----------------------------------------------------------

def test_step_reward_examples():
    grid = flat_grid(n_tcls=0, n_households=0, battery_depreciation=0.05)
    s = grid.reset(0)
    assert grid.grid_prices(s) == (3.0, 2.0)
    base = grid.dispatch(bare_state(grid, 0.0, 0.0, ess.Battery(level=0.0, capacity_max=10.0)), act())
    sell = replace(base, internal_price=5.0, residential_load=100.0, delta_t=-20.0, sell=20.0,
                   ess_charge=20.0, ess_discharge=0.0)
    r, info = grid.step_reward(sell, s, act())
    assert r == pytest.approx(539.0)
    assert r == info.revenue - info.cost

    zero = replace(base, internal_price=5.0)
    assert grid.step_reward(zero, s, act())[0] == 0.0

    buy = replace(base, delta_t=10.0, buy=10.0)
    assert grid.step_reward(buy, s, act())[0] == pytest.approx(-30.0)


def day_of(info, **kw):
    return [replace(info, **kw)] + [replace(info)] * 23


def test_daily_cost_examples():
    grid = flat_grid(n_tcls=0, n_households=0)
    info = run_fixed_day(grid, 0, RETAILER_ACTION)[0]
    zero = replace(info, cost=0.0, buy=0.0, sell=0.0, wind_cost=0.0, delta_t=0.0)
    assert daily_cost([zero] * 24) == 0.0
    assert daily_cost(day_of(zero, buy=10.0, delta_t=10.0, cost=30.0)) == pytest.approx(30.0)
    assert daily_cost(day_of(zero, sell=10.0, delta_t=-10.0, grid_sell_price=2.0)) == pytest.approx(-20.0)
    with pytest.raises(IncompleteEpisodeError):
        daily_cost([zero] * 23)


def test_episode_is_24_steps():
    grid = Microgrid()
    s = grid.reset(3)
    flags = []
    for _ in range(24):
        out = grid.step(s, 37)
        flags.append(out.terminal)
        s = out.next_state
    assert flags == [False] * 23 + [True]


def test_no_sales_without_wind():
    grid = flat_grid(wind=0.0)
    infos = run_fixed_day(grid, 0, 0)
    assert all(i.delta_t >= 0 and i.sell == 0 for i in infos)


def test_determinism():
    grid = Microgrid()
    acts = list(np.random.default_rng(4).integers(0, N_ACTIONS, 24))
    a = run_fixed_day(grid, 5, acts, seed=9)
    b = run_fixed_day(Microgrid(), 5, acts, seed=9)
    assert a == b


def test_trace_csv(tmp_path):
    infos = run_fixed_day(Microgrid(), 0, RETAILER_ACTION)
    write_trace_csv(infos, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert len(lines) == 25
    assert lines[0].split(",") == [f.name for f in fields(infos[0])]


SHARED = Microgrid()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 29), st.lists(st.integers(0, N_ACTIONS - 1), min_size=24, max_size=24))
def test_balance_clamp_reward_priority(day, actions):
    grid, cfg = SHARED, SHARED.config
    s = grid.reset(day)
    for a in actions:
        action = decode_action(a)
        d = grid.dispatch(s, action)
        residual = d.wind + d.ess_discharge + d.delta_t + d.unserved - d.tcl_energy - d.residential_load \
            - d.ess_charge - d.curtailed
        scale = max(1.0, d.wind, d.tcl_energy + d.residential_load)
        assert abs(residual) <= 1e-9 * scale
        assert cfg.p_min_grid <= d.delta_t <= cfg.p_max_grid
        # what the battery could still have moved within this hour
        if action.deficit_priority == BF and d.buy > 0:
            assert s.battery.max_deliver(cfg.dt) - d.ess_discharge <= 1e-9
        if action.excess_priority == CF and d.sell > 0:
            assert s.battery.max_accept(cfg.dt) - d.ess_charge <= 1e-9
        out = grid.step(s, a)
        assert out.reward == out.info.revenue - out.info.cost
        s = out.next_state

import numpy as np
import pytest
from hypothesis import given, strategies as st

from microgrid_rl import tcl
from microgrid_rl.tcl import TclCluster, TclUnit, allocate, tcl_soc, update_temperature


def unit(temp, lo=18.0, hi=28.0, power=1.0, leak=0.1, gain=2.0):
    return TclUnit(temp, lo, hi, power, leak, gain)


def cluster_from_soc(socs, power=1.0):
    socs = np.asarray(socs, dtype=float)
    n = socs.size
    return TclCluster(
        temp_in=18.0 + 10.0 * socs, temp_min=np.full(n, 18.0), temp_max=np.full(n, 28.0),
        power=np.full(n, power) if np.ndim(power) == 0 else np.asarray(power, dtype=float),
        thermal_leak=np.full(n, 0.1), heat_gain=np.full(n, 2.0),
    )


def test_soc():
    assert tcl_soc(unit(18.0)) == 0.0
    assert tcl_soc(unit(23.0)) == 0.5
    assert tcl_soc(unit(29.0)) == pytest.approx(1.1)


def test_switch_follows_deadband():
    assert tcl.deadband_switch(unit(17.0)) == tcl.BELOW_BAND
    assert tcl.deadband_switch(unit(29.0)) == tcl.ABOVE_BAND
    assert tcl.deadband_switch(unit(20.0)) == tcl.IN_BAND


def test_update_temperature():
    u = unit(20.0)
    assert update_temperature(u, 20.0, False).temp_in == 20.0
    assert update_temperature(u, 10.0, False, 1.0).temp_in == pytest.approx(19.0)
    assert update_temperature(unit(20.0, leak=0.0), 10.0, True, 1.0).temp_in == pytest.approx(22.0)


def test_update_recomputes_switch():
    u = update_temperature(unit(27.5, leak=0.0, gain=2.0), 0.0, True)
    assert u.temp_in == pytest.approx(29.5)
    assert u.switch == tcl.ABOVE_BAND


def test_update_rejects_bad_dt():
    with pytest.raises(ValueError):
        update_temperature(unit(20.0), 0.0, True, 0.0)


def test_update_cluster_vectorised():
    c = cluster_from_soc([0.2, 0.5])
    out = update_temperature(c, 10.0, np.array([True, False]))
    expected = [u.temp_in + 0.1 * (10.0 - u.temp_in) + 2.0 * on for u, on in zip(c.units(), [1, 0])]
    np.testing.assert_allclose(out.temp_in, expected)


@pytest.mark.parametrize("bad", [
    dict(temp_min=28.0, temp_max=18.0),
    dict(power=0.0),
    dict(thermal_leak=1.5),
])
def test_invalid_unit(bad):
    kw = dict(temp_in=20.0, temp_min=18.0, temp_max=28.0, power=1.0, thermal_leak=0.1, heat_gain=1.0)
    kw.update(bad)
    with pytest.raises(ValueError):
        TclUnit(**kw)


def test_allocate_zero_budget():
    a = allocate(cluster_from_soc([0.2, 0.5, 0.8]), 0.0)
    assert a.consumed == 0.0 and not a.per_unit_on.any()


def test_allocate_coldest_first():
    a = allocate(cluster_from_soc([0.2, 0.8, 0.5]), 2.0)
    assert a.per_unit_on.tolist() == [True, False, True]
    assert a.consumed == 2.0


def test_overheated_unit_stays_off():
    a = allocate(cluster_from_soc([1.2, 0.5]), 1e6)
    assert a.per_unit_on.tolist() == [False, True]
    assert a.forced_off.tolist() == [True, False]


def test_forced_on_draw_counts_against_budget():
    a = allocate(cluster_from_soc([-0.1, 0.3, 0.6]), 2.0)
    assert a.per_unit_on.tolist() == [True, True, False]
    # forced-on units heat even with no budget at all
    assert allocate(cluster_from_soc([-0.1, 0.3]), 0.0).consumed == 1.0


def test_allocation_stops_at_first_misfit():
    # the second-coldest unit is too large; smaller warmer units are not skipped ahead
    a = allocate(cluster_from_soc([0.1, 0.2, 0.3], power=[1.0, 5.0, 1.0]), 3.0)
    assert a.per_unit_on.tolist() == [True, False, False]


def test_allocate_sequence_of_units_and_empty():
    a = allocate([unit(19.0), unit(27.0)], 1.0)
    assert a.per_unit_on.tolist() == [True, False]
    assert allocate(TclCluster.empty(), 10.0).consumed == 0.0
    with pytest.raises(ValueError):
        allocate(TclCluster.empty(), -1.0)


def test_from_units_roundtrip():
    us = [unit(19.0), unit(25.0, power=2.0)]
    assert TclCluster.from_units(us).units() == us


socs = st.lists(st.floats(-0.5, 1.5, allow_nan=False), min_size=0, max_size=40)


@given(socs, st.floats(0.0, 60.0), st.floats(0.0, 60.0))
def test_monotone_in_budget(s, b1, b2):
    c = cluster_from_soc(s)
    lo, hi = sorted((b1, b2))
    small, large = allocate(c, lo).per_unit_on, allocate(c, hi).per_unit_on
    assert np.all(large[small])


@given(socs, st.floats(0.0, 60.0))
def test_consumed_matches_on_units(s, budget):
    c = cluster_from_soc(s, power=1.5)
    a = allocate(c, budget)
    assert a.consumed == pytest.approx(1.5 * a.per_unit_on.sum())
    forced = float(1.5 * a.forced_on.sum())
    # discretionary grants only come out of whatever budget the forced units left
    assert a.consumed <= max(budget, forced) + 1e-9
    assert not np.any(a.per_unit_on & a.forced_off)


@given(socs, st.floats(0.0, 60.0), st.floats(-20.0, 10.0))
def test_no_heating_above_band(s, budget, outdoor):
    c = cluster_from_soc(s)
    a = allocate(c, budget)
    after = update_temperature(c, outdoor, a.per_unit_on)
    was_above = tcl_soc(c) > 1
    assert not np.any(a.per_unit_on & was_above)
    assert np.all(after.switch == tcl._switch_from_soc(tcl_soc(after)))

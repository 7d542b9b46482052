import math

import pytest

from hvarray.devices import (
    GATE_ON_MIN,
    GATE_SWING,
    MIN_PULSE_NS,
    Bistable,
    DiodeModel,
    IdealResistor,
    MemristorState,
    SwitchModel,
    SwitchPolarity,
    check_gate_breakdown,
    element_stamp,
    update_device_state,
)
from hvarray.errors import ConfigurationError, TimingError


def test_ideal_resistor_validation():
    assert IdealResistor(1e3).present_resistance == 1e3
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ConfigurationError):
            IdealResistor(bad)


def test_bistable_validation():
    with pytest.raises(ConfigurationError):
        Bistable(r_hrs=1e3, r_lrs=1e3)          # need lrs < hrs
    with pytest.raises(ConfigurationError):
        Bistable(v_set=-1.0)                    # thresholds straddle zero
    with pytest.raises(ConfigurationError):
        Bistable(v_reset=0.5)
    with pytest.raises(ConfigurationError):
        Bistable(v_form=0.5)                    # forming below set makes no sense
    with pytest.raises(ConfigurationError):
        Bistable(r_pristine=-1.0)


def test_bistable_present_resistance():
    d = Bistable()
    assert d.present_resistance == d.r_pristine          # unformed
    formed = Bistable(formed=True, state=MemristorState.LRS)
    assert formed.present_resistance == formed.r_lrs
    assert Bistable(formed=True).present_resistance == 10e6


def test_forming_threshold_and_result_state():
    d = Bistable()
    assert not update_device_state(d, 17.999, 100.0).formed
    out = update_device_state(d, 18.0, 100.0)
    assert out.formed and out.state is MemristorState.LRS
    # forming is polarity-agnostic on magnitude
    assert update_device_state(d, -18.0, 100.0).formed


def test_unformed_ignores_set_reset_levels():
    d = Bistable()
    assert update_device_state(d, 2.0, 100.0) == d
    assert update_device_state(d, -2.0, 100.0) == d


def test_set_reset_thresholds_inclusive():
    d = Bistable(formed=True, state=MemristorState.HRS)
    assert update_device_state(d, 1.2, 30.0).state is MemristorState.LRS
    assert update_device_state(d, 1.1999, 30.0).state is MemristorState.HRS
    lrs = Bistable(formed=True, state=MemristorState.LRS)
    assert update_device_state(lrs, -1.2, 30.0).state is MemristorState.HRS
    assert update_device_state(lrs, -1.1999, 30.0).state is MemristorState.LRS


def test_forming_is_irreversible():
    d = update_device_state(Bistable(), 20.0, 100.0)
    for v in (-22.0, -1.5, 0.0, 1.5, 22.0):
        d = update_device_state(d, v, 50.0)
        assert d.formed


def test_pulse_width_floor():
    with pytest.raises(TimingError):
        update_device_state(Bistable(), 18.0, 29.999)
    with pytest.raises(ConfigurationError):
        update_device_state(Bistable(), math.nan, 100.0)
    assert MIN_PULSE_NS == 30.0


def test_diode_segments_meet_at_breakpoint():
    d = DiodeModel(0.7, 10.0, 1e-12)
    assert not d.conducting(0.7)            # tie resolves off
    assert d.conducting(0.7 + 1e-12)
    below = d.current(0.7)
    above = d.current(0.7 + 1e-15)
    assert below == pytest.approx(0.7e-12, rel=1e-12)
    assert above == pytest.approx(below, rel=1e-6)
    # stamps agree with current() on both segments
    on = element_stamp(d, 1.0)
    assert on.conductance * 1.0 + on.current_offset == pytest.approx(d.current(1.0))
    off = element_stamp(d, 0.3)
    assert off.conductance * 0.3 + off.current_offset == pytest.approx(d.current(0.3))


def test_diode_validation():
    with pytest.raises(ConfigurationError):
        DiodeModel(v_forward=0.0)
    with pytest.raises(ConfigurationError):
        DiodeModel(g_on=1e-12, g_off=1e-12)


def test_switch_conductance_follows_gate():
    sw = SwitchModel(SwitchPolarity.NMOS, r_on=150.0, r_off=100e9)
    assert sw.conductance(GATE_SWING) == pytest.approx(1 / 150.0)
    assert sw.conductance(-GATE_SWING) == pytest.approx(1 / 150.0)   # PMOS-style drive
    assert sw.conductance(0.0) == pytest.approx(1 / 100e9)
    assert sw.conductance(None) == pytest.approx(1 / 100e9)
    assert sw.conductance(GATE_ON_MIN) == pytest.approx(1 / 150.0)
    with pytest.raises(ConfigurationError):
        SwitchModel(SwitchPolarity.NMOS, r_on=100.0, r_off=50.0)
    with pytest.raises(ConfigurationError):
        SwitchModel(SwitchPolarity.NMOS, r_on=100.0, r_off=1e9, v_gs_max=7.0)


def test_stamp_switch_uses_gate_drive():
    sw = SwitchModel(SwitchPolarity.PMOS, r_on=75.0, r_off=1e9)
    assert element_stamp(sw, 0.0, gate_drive=5.0).conductance == pytest.approx(1 / 75.0)
    assert element_stamp(sw, 0.0, gate_drive=None).conductance == pytest.approx(1e-9)


def test_gate_breakdown_check():
    sw = SwitchModel(SwitchPolarity.NMOS, r_on=150.0, r_off=1e9)
    assert check_gate_breakdown(5.0, 0.0, 0.0, sw) is None
    assert check_gate_breakdown(5.0005, 0.0, 0.0, sw) is None      # inside slack
    hit = check_gate_breakdown(5.1, 0.0, 0.0, sw, name="m1")
    assert hit is not None and hit.terminal == "gate" and "m1" in str(hit)
    bulk = check_gate_breakdown(0.0, 0.0, 5.5, sw)
    assert bulk is not None and bulk.terminal == "bulk"
    with pytest.raises(ConfigurationError):
        check_gate_breakdown(math.inf, 0.0, 0.0, sw)

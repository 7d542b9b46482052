"""End-to-end checks of the published operating envelope.

Each test prints one CRITERION line with the measured numbers, so a
plain pytest run doubles as the characterisation record.  Criterion 4
is split in two: the Kelvin error band holds everywhere, but the
estimator-ordering clause cannot hold on this calibration above ~12 kOhm
and is carried as an expected failure with the analysis inline.
"""

import random
import time

import numpy as np
import pytest

from oracles import oracle_solve_exact
from hvarray.config import load_config
from hvarray.controller import (
    OperationRequest,
    decode_address,
    encode_address,
    gate_stress_report,
    sequence_operation,
)
from hvarray.devices import Bistable, DiodeModel, IdealResistor, MemristorState
from hvarray.errors import TimingError
from hvarray.experiments import forming_succeeded, run_form, solve_pulse_midpoint
from hvarray.fabric import (
    Address,
    ArrayConfig,
    KelvinProbeConfig,
    Mode,
    build_array,
    netlist_for_operation,
)
from hvarray.readout import (
    COMPLIANCE_LIMIT_A,
    compliance_report,
    error_sweep,
    estimate_kelvin,
    measure,
)
from hvarray.solver import run_transient, solve_dc

SWEEP_POINTS = [float(r) for r in np.geomspace(500.0, 10e6, 21)]


def report(n, ok, detail):
    print(f"CRITERION {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def full_sweep():
    arr = build_array()
    req = OperationRequest(Mode.READ, Address(0, 2))
    return error_sweep(arr, SWEEP_POINTS, req)


def test_criterion_1_read_current_accuracy():
    t0 = time.perf_counter()
    arr = build_array()  # every pixel 10 MOhm
    sol = solve_pulse_midpoint(arr, OperationRequest(Mode.READ, Address(0, 0),
                                                     v_pad=0.2))
    i_pad = measure(sol).i_pad
    dt = time.perf_counter() - t0
    ok = 19.8e-9 <= i_pad <= 20.2e-9 and dt < 1.0
    assert report(1, ok, f"i_pad={i_pad * 1e9:.4f} nA in [19.8, 20.2], {dt:.2f} s")


def test_criterion_2_program_current():
    t0 = time.perf_counter()
    arr = build_array().with_device(Address(0, 0), IdealResistor(1e3))
    # full-rail reverse pulse: 22 V commanded across the 1 kOhm cell
    sol = solve_pulse_midpoint(arr, OperationRequest(Mode.RESET, Address(0, 0),
                                                     v_pad=0.0))
    i_pad = abs(measure(sol).i_pad)
    dt = time.perf_counter() - t0
    ok = 14e-3 <= i_pad <= 17e-3 and dt < 1.0
    assert report(2, ok, f"|i_pad|={i_pad * 1e3:.3f} mA in [14, 17], {dt:.2f} s")


def test_criterion_3_conventional_error_profile():
    ests = full_sweep()
    at_500 = ests[0].err_conventional
    high = [(e.true_r, e.err_conventional) for e in ests if e.true_r >= 1e6]
    worst_high = max(err for _, err in high)
    ok = 0.70 <= at_500 <= 0.80 and worst_high < 0.01
    assert report(3, ok, f"err(500)={100 * at_500:.2f}% in [70, 80], "
                         f"worst err(R>=1M)={100 * worst_high:.4f}% < 1%")


def test_criterion_4a_kelvin_error_band():
    ests = full_sweep()
    lo = min(e.err_kelvin for e in ests)
    hi = max(e.err_kelvin for e in ests)
    ok = lo >= 0.02 and hi <= 0.06
    assert report("4a", ok, f"kelvin err in [{100 * lo:.2f}, {100 * hi:.2f}]% "
                            f"within [2, 6]%")


def test_criterion_4b_kelvin_below_conventional_to_100k():
    ests = full_sweep()
    region = [e for e in ests if e.true_r <= 1e5]
    violators = [e for e in region if e.err_kelvin >= e.err_conventional]
    ok = not violators
    detail = "kelvin < conventional for all R <= 100k"
    if violators:
        pts = ", ".join(f"{e.true_r:.0f}" for e in violators)
        detail = f"ordering violated at R = {pts} Ohm"
    report("4b", ok, detail)
    if not ok:
        # Not satisfiable together with criteria 3 and 4a: criterion 3
        # pins the series parasitic near 375 Ohm, so the conventional
        # error decays as ~375/R + leakage and is below 1% by ~40 kOhm,
        # while the Kelvin estimate carries its own probe-current floor
        # of 2.5-3% across the sweep (criterion 4a requires >= 2%).
        # The two curves therefore must cross inside (10k, 100k], and
        # the ordering clause fails at the sweep points listed above.
        pytest.xfail(detail)


def test_criterion_5_ideal_probe_exactness():
    cfg = ArrayConfig(
        r_off=1e16,
        probe=KelvinProbeConfig(sense_current=0.0, sense_leak_s=1e-16),
        diode=DiodeModel(g_off=1e-16),
    )
    arr = build_array(cfg)
    req = OperationRequest(Mode.READ, Address(0, 2))
    decades = [500.0, 1e3, 1e4, 1e5, 1e6, 1e7]
    ests = error_sweep(arr, decades, req)
    worst = max(e.err_kelvin for e in ests)
    ok = worst <= 1e-6
    assert report(5, ok, f"worst kelvin err {worst:.3e} <= 1e-6 with the "
                         f"probe front end idealised")


def test_criterion_6_solver_matches_exact_brute_force():
    t0 = time.perf_counter()
    rng = random.Random(20260822)
    worst = 0.0
    for _ in range(100):
        arr = build_array(ArrayConfig(rows=2, cols=2))
        for r in range(2):
            for c in range(2):
                arr = arr.with_device(Address(r, c),
                                      IdealResistor(10 ** rng.uniform(3, 7)))
        addr = Address(rng.randrange(2), rng.randrange(2))
        request = OperationRequest(Mode.READ, addr, v_pad=rng.uniform(0.1, 0.4))
        timeline = sequence_operation(arr, request)
        mid = 0.5 * (timeline.pulse_start_ns + timeline.pulse_end_ns)
        graph = netlist_for_operation(arr, timeline.state_at(mid))
        sol = solve_dc(graph)
        exact = oracle_solve_exact(graph)
        for name in graph.nodes:
            delta = abs(sol.voltage(name) - exact.voltage(name))
            worst = max(worst, delta / max(abs(exact.voltage(name)), 1e-12))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 10.0
    assert report(6, ok, f"worst node-voltage rel {worst:.3e} <= 1e-9 over "
                         f"100 random 2x2 arrays, {dt:.2f} s")


def test_criterion_7_safety_replay():
    t0 = time.perf_counter()
    arr = build_array()
    violations = 0
    patterns = set()
    for r in range(16):
        for c in range(16):
            addr = Address(r, c)
            rows, cols = decode_address(arr.config, addr)
            assert encode_address(rows, cols) == addr
            patterns.add((rows, cols))
            for mode in (Mode.READ, Mode.SET, Mode.RESET):
                sol = solve_pulse_midpoint.__wrapped__(arr, OperationRequest(mode, addr)) \
                    if hasattr(solve_pulse_midpoint, "__wrapped__") else None
                if sol is None:
                    timeline = sequence_operation(arr, OperationRequest(mode, addr))
                    mid = 0.5 * (timeline.pulse_start_ns + timeline.pulse_end_ns)
                    sol = solve_dc(netlist_for_operation(arr, timeline.state_at(mid)))
                violations += len(gate_stress_report(sol.graph, sol))
    dt = time.perf_counter() - t0
    ok = violations == 0 and len(patterns) == 256 and dt < 60.0
    assert report(7, ok, f"{violations} stress violations over 256 addresses "
                         f"x 3 modes, {len(patterns)} distinct select patterns, "
                         f"{dt:.1f} s")


def test_criterion_8_budget_checks():
    # idle: hot rail, everything deselected; flows only switch leakage
    arr = build_array()
    idle_trace = run_transient(arr, sequence_operation(
        arr, OperationRequest(Mode.RESET, Address(0, 0))))
    idle_rep = compliance_report(idle_trace)
    # over-current: full-rail pulse into a 500 Ohm cell
    hot = build_array().with_device(Address(0, 0), IdealResistor(500.0))
    hot_trace = run_transient(hot, sequence_operation(
        hot, OperationRequest(Mode.RESET, Address(0, 0), v_pad=0.0)))
    hot_rep = compliance_report(hot_trace)
    # timing floor
    with pytest.raises(TimingError):
        OperationRequest(Mode.READ, Address(0, 0), pulse_ns=29.0)
    ok = (idle_rep.idle_within_budget
          and idle_rep.idle_supply_current is not None
          and idle_rep.idle_supply_current <= 18e-6
          and hot_rep.flagged
          and hot_rep.peak_device_current > COMPLIANCE_LIMIT_A)
    assert report(8, ok, f"idle={idle_rep.idle_supply_current * 1e9:.2f} nA "
                         f"<= 18 uA budget, 500 Ohm pulse peaks at "
                         f"{hot_rep.peak_device_current * 1e3:.2f} mA "
                         f"(flagged), sub-30 ns pulse rejected")


def test_criterion_9_forming_workflow():
    # default staircase forms the cell
    cfg = load_config(None, overrides=("experiment.mode=form",
                                       "experiment.row=0", "experiment.col=2",
                                       "device.at.0.2=bistable"))
    trace = run_form(cfg)
    formed_at = trace.column("pulse_v_V")[-1]
    staircase_ok = forming_succeeded(trace) and formed_at == 18.0

    # read-back lands on r_lrs within the probe error band
    addr = Address(0, 2)
    arr = build_array().with_device(addr, Bistable())
    for v in np.linspace(10.0, 22.0, 13):
        arr = apply(arr, OperationRequest(Mode.FORM, addr, v_pad=float(v),
                                          pulse_ns=100.0))
        if arr.device_at(addr).formed:
            break
    sol = solve_pulse_midpoint(arr, OperationRequest(Mode.READ, addr))
    r_est = estimate_kelvin(measure(sol))
    r_lrs = arr.device_at(addr).r_lrs
    read_err = abs(r_est - r_lrs) / r_lrs
    read_ok = read_err <= 0.065  # kelvin probe band at 1 kOhm

    # irreversibility under random follow-on operations
    rng = random.Random(20260822)
    stayed_formed = True
    for _ in range(1000):
        mode = rng.choice([Mode.READ, Mode.SET, Mode.RESET, Mode.FORM])
        if mode is Mode.READ:
            request = OperationRequest(mode, addr, v_pad=rng.uniform(0.0, 0.4))
        else:
            request = OperationRequest(mode, addr, v_pad=rng.uniform(0.0, 22.0))
        arr = apply(arr, request)
        dev = arr.device_at(addr)
        if not (dev.formed and dev.state in (MemristorState.LRS, MemristorState.HRS)):
            stayed_formed = False
            break

    ok = staircase_ok and read_ok and stayed_formed
    assert report(9, ok, f"formed at {formed_at} V, read-back err "
                         f"{100 * read_err:.2f}% <= 6.5%, formed through "
                         f"1000 random operations: {stayed_formed}")


def apply(arr, request):
    from hvarray.controller import apply_pulse
    return apply_pulse(arr, request)

"""Experiment runners behind the CLI, each returning a CsvTrace.

Two timing conventions coexist here, both quasi-static:

  * pulsed operations (read/write/form) report the currents that flow
    during the pulse, i.e. against the device state the pulse acts on;
    any state transition lands after the pulse and is what the next
    operation sees.
  * the I-V sweep dwells at each grid point long enough for the device
    to settle, so the measured point reflects the post-transition state
    and a set transition shows up as a jump at its own grid voltage.

Every operating point that contributes to an emitted trace is replayed
through the gate-stress check first; a violation aborts the run naming
the device rather than emitting data.
"""

from __future__ import annotations

import numpy as np

from .config import ExperimentConfig, ExperimentSpec
from .controller import (
    OperationRequest,
    apply_pulse,
    commanded_device_voltage,
    gate_stress_report,
    sequence_operation,
)
from .csvio import CsvTrace
from .devices import Bistable, MIN_PULSE_NS, IdealResistor, MemristorState
from .errors import BreakdownError, CapabilityError, ConfigurationError, NonConvergenceError
from .fabric import Address, Array, Mode, PixelFlavour, netlist_for_operation
from .readout import OPEN_CIRCUIT, estimate_conventional, estimate_from_measurement, estimate_kelvin, measure
from .solver import Solution, TransientTrace, run_transient, solve_dc

FORM_START_V = 10.0
FORM_STOP_V = 22.0
FORM_STEP_V = 1.0
FORM_PULSE_NS = 100.0

SWEEP_START_V = 0.0
SWEEP_STOP_V = 22.0
SWEEP_STEPS = 23

FIG6_DEFAULT_ADDR = Address(0, 2)


def check_solution(sol: Solution) -> Solution:
    violations = gate_stress_report(sol.graph, sol)
    if violations:
        raise BreakdownError(str(violations[0]))
    return sol


def checked_transient(array: Array, request: OperationRequest,
                      step_ns: float) -> TransientTrace:
    trace = run_transient(array, sequence_operation(array, request), step_ns=step_ns)
    seen: set[int] = set()
    for _, sol in trace.interval_solutions:
        if id(sol) not in seen:
            seen.add(id(sol))
            check_solution(sol)
    return trace


def solve_pulse_midpoint(array: Array, request: OperationRequest) -> Solution:
    """One checked operating point at the middle of the pulse window."""
    timeline = sequence_operation(array, request)
    mid = 0.5 * (timeline.pulse_start_ns + timeline.pulse_end_ns)
    sol = solve_dc(netlist_for_operation(array, timeline.state_at(mid)))
    return check_solution(sol)


def _target(exp: ExperimentSpec, default: Address = Address(0, 0)) -> Address:
    row = exp.row if exp.row is not None else default.row
    col = exp.col if exp.col is not None else default.col
    return Address(row, col)


def _pulse_ns(exp: ExperimentSpec, default: float = MIN_PULSE_NS) -> float:
    return exp.pulse_ns if exp.pulse_ns is not None else default


def _state_label(device) -> str:
    if isinstance(device, IdealResistor):
        return "ideal"
    if isinstance(device, Bistable):
        if not device.formed:
            return "pristine"
        return device.state.value
    return type(device).__name__.lower()


def run_read(config: ExperimentConfig) -> CsvTrace:
    exp = config.experiment
    array = config.build_array()
    request = OperationRequest(Mode.READ, _target(exp), v_pad=exp.v_pad,
                               pulse_ns=_pulse_ns(exp), reverse=exp.reverse)
    trace = checked_transient(array, request, exp.step_ns)
    rows = []
    for sample in trace.samples:
        m = measure(sample.solution)
        r_conv = estimate_conventional(m)
        r_kel = estimate_kelvin(m) if m.has_kelvin else None
        rows.append((sample.t_ns, m.i_pad, m.v_bl_kelvin, m.v_bl,
                     r_conv, r_kel))
    return CsvTrace(
        ("t_ns", "i_pad_A", "v_bl_kelvin_V", "v_bl_V",
         "r_conventional_ohm", "r_kelvin_ohm"),
        tuple(rows),
    )


def run_write(config: ExperimentConfig) -> CsvTrace:
    exp = config.experiment
    if exp.mode not in ("set", "reset"):
        raise ConfigurationError(
            f"experiment.mode: write runs set or reset, got {exp.mode!r}"
        )
    mode = Mode.SET if exp.mode == "set" else Mode.RESET
    array = config.build_array()
    request = OperationRequest(mode, _target(exp), v_pad=exp.v_pad,
                               pulse_ns=_pulse_ns(exp))
    trace = checked_transient(array, request, exp.step_ns)
    final = apply_pulse(array, request).device_at(request.addr)
    label = _state_label(final)
    rows = []
    for sample in trace.samples:
        m = measure(sample.solution)
        rows.append((sample.t_ns, m.i_pad, 1 if m.compliance_flag else 0, label))
    return CsvTrace(("t_ns", "i_pad_A", "compliance", "final_state"), tuple(rows))


def run_form(config: ExperimentConfig) -> CsvTrace:
    exp = config.experiment
    array = config.build_array()
    addr = _target(exp)
    if not isinstance(array.device_at(addr), Bistable):
        raise CapabilityError(f"forming target {addr} is not a bistable device")
    v_start = exp.v_start if exp.v_start is not None else FORM_START_V
    v_stop = exp.v_stop if exp.v_stop is not None else FORM_STOP_V
    if not v_start <= v_stop:
        raise ConfigurationError(
            f"experiment.v_start/v_stop: need start <= stop, got {v_start}, {v_stop}"
        )
    steps = exp.steps if exp.steps is not None else (
        int(round((v_stop - v_start) / FORM_STEP_V)) + 1)
    pulse_ns = _pulse_ns(exp, FORM_PULSE_NS)
    grid = np.linspace(v_start, v_stop, steps) if steps > 1 else np.array([v_start])

    rows = []
    formed = False
    for v in grid:
        request = OperationRequest(Mode.FORM, addr, v_pad=float(v), pulse_ns=pulse_ns)
        sol = solve_pulse_midpoint(array, request)
        i_pad = measure(sol).i_pad
        array = apply_pulse(array, request)
        device = array.device_at(addr)
        formed = isinstance(device, Bistable) and device.formed
        rows.append((float(v), i_pad, 1 if formed else 0, ""))
        if formed:
            break
    if not formed:
        rows.append((None, None, 0, "forming failed"))
    return CsvTrace(("pulse_v_V", "i_pad_A", "formed", "note"), tuple(rows))


def forming_succeeded(trace: CsvTrace) -> bool:
    column = trace.column("formed")
    return bool(column) and column[-1] == 1


def run_iv_sweep(config: ExperimentConfig) -> CsvTrace:
    exp = config.experiment
    array = config.build_array()
    addr = _target(exp)
    vddh = config.array.vddh
    v_start = exp.v_start if exp.v_start is not None else SWEEP_START_V
    v_stop = exp.v_stop if exp.v_stop is not None else SWEEP_STOP_V
    steps = exp.steps if exp.steps is not None else SWEEP_STEPS
    grid = np.linspace(v_start, v_stop, steps)
    pulse_ns = _pulse_ns(exp)

    rows = []
    for v in grid:
        v = float(v)
        if v >= 0.0:
            request = OperationRequest(Mode.SET, addr, v_pad=v, pulse_ns=pulse_ns)
        else:
            request = OperationRequest(Mode.RESET, addr, v_pad=vddh + v,
                                       pulse_ns=pulse_ns)
        v_dev = commanded_device_voltage(request.mode, request.resolved_v_pad(vddh),
                                         vddh)
        # DC dwell: the device settles into its post-pulse state before
        # the meter integrates, so transition first, then measure.
        array = apply_pulse(array, request)
        try:
            sol = solve_pulse_midpoint(array, request)
        except NonConvergenceError as exc:
            rows.append((v_dev, None, None, str(exc.args[0])))
            continue
        i_pad = measure(sol).i_pad
        if i_pad == 0.0:
            r_total = OPEN_CIRCUIT
        elif v_dev == 0.0:
            r_total = None  # no drive, the ratio carries no information
        else:
            r_total = abs(v_dev / i_pad)
        rows.append((v_dev, i_pad, r_total, ""))
    return CsvTrace(("v_set_V", "i_pad_A", "r_total_ohm", "error"), tuple(rows))


def run_fig5(config: ExperimentConfig) -> CsvTrace:
    exp = config.experiment
    base = config.build_array()
    addr = _target(exp)
    pulse_ns = _pulse_ns(exp)

    read_array = base.with_device(addr, IdealResistor(10e6))
    read_req = OperationRequest(Mode.READ, addr, v_pad=exp.v_pad,
                                pulse_ns=pulse_ns, reverse=exp.reverse)
    read_trace = checked_transient(read_array, read_req, exp.step_ns)

    prog_array = base.with_device(addr, IdealResistor(1e3))
    prog_req = OperationRequest(Mode.RESET, addr, v_pad=0.0, pulse_ns=pulse_ns)
    prog_trace = checked_transient(prog_array, prog_req, exp.step_ns)

    rows = []
    for name, trace in (("read_10meg", read_trace), ("program_1k", prog_trace)):
        for sample in trace.samples:
            rows.append((name, sample.t_ns, measure(sample.solution).i_pad))
    return CsvTrace(("trace", "t_ns", "i_pad_A"), tuple(rows))


def run_fig6(config: ExperimentConfig) -> CsvTrace:
    exp = config.experiment
    array = config.build_array()
    addr = _target(exp, default=FIG6_DEFAULT_ADDR)
    if array.flavour_of(addr) is not PixelFlavour.KELVIN:
        raise CapabilityError(f"error sweep target {addr} must be a Kelvin pixel")
    request = OperationRequest(Mode.READ, addr, v_pad=exp.v_pad,
                               pulse_ns=_pulse_ns(exp), reverse=exp.reverse)
    r_values = np.geomspace(exp.r_start, exp.r_stop, exp.points)

    rows = []
    for r in r_values:
        r = float(r)
        staged = array.with_device(addr, IdealResistor(r))
        sol = solve_pulse_midpoint(staged, request)
        est = estimate_from_measurement(measure(sol), r)
        err_kel = None if est.err_kelvin is None else 100.0 * est.err_kelvin
        rows.append((r, est.r_conventional, 100.0 * est.err_conventional,
                     est.r_kelvin, err_kel))
    return CsvTrace(
        ("r_true_ohm", "r_conventional_ohm", "err_conventional_pct",
         "r_kelvin_ohm", "err_kelvin_pct"),
        tuple(rows),
    )


RUNNERS = {
    "read": run_read,
    "write": run_write,
    "form": run_form,
    "iv-sweep": run_iv_sweep,
    "fig5": run_fig5,
    "fig6": run_fig6,
}

"""Resistance estimators, the error-sweep experiment, and budget checks.

Two estimators are implemented.  Conventional: the pad instrument alone,
R = (V_PAD - V_TP) / I_PAD, which eats the whole series parasitic.
Kelvin: the probed electrode voltages over the same pad current,
R = (V1_sensed - V_BL_sensed) / I_PAD; series drops cancel and what is
left is the probe front-end draw times the probe path resistance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .devices import IdealResistor
from .errors import CapabilityError, ConfigurationError
from .fabric import Address, Array, Mode, PixelFlavour, netlist_for_operation
from .solver import Solution, TransientTrace, solve_dc

COMPLIANCE_LIMIT_A = 20e-3      # per-device ceiling
IDLE_BUDGET_W = 400e-6          # static budget at the HV rail

OPEN_CIRCUIT = math.inf


@dataclass(frozen=True)
class Measurement:
    """What the instruments see for one operating point."""

    v_pad: float
    v_tp: float
    i_pad: float
    v_bl_kelvin: float | None
    v_bl: float | None
    mode: Mode
    addr: Address
    compliance_flag: bool = False

    @property
    def has_kelvin(self) -> bool:
        return self.v_bl_kelvin is not None and self.v_bl is not None


def measure(solution: Solution) -> Measurement:
    """Read the instrument-visible quantities off a solved operating point."""
    g = solution.graph
    act = g.activation
    i_pad = solution.source_current("pad")
    probing = (act.ib_ctrl and act.col_en and g.flavour is PixelFlavour.KELVIN)
    return Measurement(
        v_pad=solution.voltage("pad"),
        v_tp=g.v_tp,
        i_pad=i_pad,
        v_bl_kelvin=solution.voltage("v1sense") if probing else None,
        v_bl=solution.voltage("blsense") if probing else None,
        mode=act.mode,
        addr=act.addr,
        compliance_flag=abs(i_pad) > COMPLIANCE_LIMIT_A,
    )


def estimate_conventional(m: Measurement) -> float:
    if not math.isfinite(m.i_pad):
        raise ConfigurationError(f"non-finite pad current {m.i_pad}")
    if m.i_pad == 0.0:
        return OPEN_CIRCUIT
    return abs((m.v_pad - m.v_tp) / m.i_pad)


def estimate_kelvin(m: Measurement) -> float:
    if not m.has_kelvin:
        raise CapabilityError(
            f"pixel {m.addr} measurement carries no Kelvin sense voltages"
        )
    if m.i_pad == 0.0:
        return OPEN_CIRCUIT
    return abs((m.v_bl_kelvin - m.v_bl) / m.i_pad)


@dataclass(frozen=True)
class ReadoutEstimate:
    true_r: float
    r_conventional: float
    r_kelvin: float | None
    err_conventional: float     # |estimate - true| / true
    err_kelvin: float | None


def _relative_error(estimate: float, true_r: float) -> float:
    return abs(estimate - true_r) / true_r


def estimate_from_measurement(m: Measurement, true_r: float) -> ReadoutEstimate:
    r_conv = estimate_conventional(m)
    r_kel = estimate_kelvin(m) if m.has_kelvin else None
    return ReadoutEstimate(
        true_r=true_r,
        r_conventional=r_conv,
        r_kelvin=r_kel,
        err_conventional=_relative_error(r_conv, true_r),
        err_kelvin=None if r_kel is None else _relative_error(r_kel, true_r),
    )


def error_sweep(array: Array, r_values, read_request) -> list[ReadoutEstimate]:
    """Install each resistance at the request's address, read, estimate.

    The target pixel must be the Kelvin flavour so both estimators apply.
    """
    from .controller import sequence_operation

    if array.flavour_of(read_request.addr) is not PixelFlavour.KELVIN:
        raise CapabilityError(
            f"error sweep target {read_request.addr} must be a Kelvin pixel"
        )
    out = []
    for r in r_values:
        if r <= 0:
            raise ConfigurationError(f"sweep resistance must be positive, got {r}")
        staged = array.with_device(read_request.addr, IdealResistor(r))
        timeline = sequence_operation(staged, read_request)
        mid = 0.5 * (timeline.pulse_start_ns + timeline.pulse_end_ns)
        sol = solve_dc(netlist_for_operation(staged, timeline.state_at(mid)))
        out.append(estimate_from_measurement(measure(sol), r))
    return out


@dataclass(frozen=True)
class ComplianceReport:
    flagged_t_ns: tuple[float, ...]
    peak_device_current: float
    idle_supply_current: float | None
    idle_budget_amps: float
    idle_within_budget: bool

    @property
    def flagged(self) -> bool:
        return len(self.flagged_t_ns) > 0


def compliance_report(trace: TransientTrace) -> ComplianceReport:
    """Scan a transient for device over-current and check the idle budget."""
    flagged = []
    peak = 0.0
    idle_supply = None
    rail_v = 0.0
    for sample in trace.samples:
        sol = sample.solution
        g = sol.graph
        worst = max(
            (abs(sol.branch_currents[k]) for k in g.branches_with_role("memristor")),
            default=0.0,
        )
        peak = max(peak, worst)
        if worst > COMPLIANCE_LIMIT_A:
            flagged.append(sample.t_ns)
        act = g.activation
        rail_v = max(rail_v, sol.voltage("vddh"))
        if not (act.wl_n or act.wl_p or act.col_en):
            supply = abs(sol.source_current("vddh"))
            idle_supply = supply if idle_supply is None else max(idle_supply, supply)
    budget = IDLE_BUDGET_W / (rail_v if rail_v > 0 else 22.0)
    return ComplianceReport(
        flagged_t_ns=tuple(flagged),
        peak_device_current=peak,
        idle_supply_current=idle_supply,
        idle_budget_amps=budget,
        idle_within_budget=(idle_supply is None or idle_supply <= budget),
    )

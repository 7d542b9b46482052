"""Operation sequencing and gate-drive bookkeeping.

Every pulse follows the same envelope: the column mux closes first, the
word line (and, for reads, IB_CTRL) pulses inside that window, then the
mux opens again.  All times are nanoseconds from the operation start.

Programming polarity comes from the rail the pixel's 2T path connects
to, not from the pad: SET/FORM/READ pull the top electrode to ground
through the NMOS so the device sees +v_pad top-to-bottom; RESET pulls
it to VDDH through the PMOS so it sees -(vddh - v_pad).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .devices import (
    GATE_ON_MIN,
    GATE_SWING,
    MIN_PULSE_NS,
    Bistable,
    BreakdownViolation,
    SwitchModel,
    check_gate_breakdown,
    update_device_state,
)
from .errors import ConfigurationError, DecodeError, RangeError, TimingError
from .fabric import (
    ActivationState,
    Address,
    Array,
    ArrayConfig,
    Branch,
    CircuitGraph,
    Mode,
    RESET_MODES,
    netlist_for_operation,
)

COL_EN_LEAD_NS = 10.0   # mux closes this long before the word line rises
TAIL_NS = 20.0          # quiet time after the mux reopens

MAX_DEVICE_V = 22.0     # absolute programming-voltage capability


def default_v_pad(mode: Mode, vddh: float, reverse: bool = False) -> float:
    if mode is Mode.READ:
        return vddh - 0.2 if reverse else 0.2
    if mode is Mode.SET:
        return 2.0
    if mode is Mode.FORM:
        return 18.0
    # RESET: amplitude is measured from the HV rail
    return vddh - 2.0


def uses_pmos_path(mode: Mode, reverse: bool = False) -> bool:
    return mode in RESET_MODES or (mode is Mode.READ and reverse)


def commanded_device_voltage(mode: Mode, v_pad: float, vddh: float,
                             reverse: bool = False) -> float:
    """Top-minus-bottom-electrode voltage the operation commands."""
    if uses_pmos_path(mode, reverse):
        return -(vddh - v_pad)
    return v_pad


class LineRole(enum.Enum):
    WL_P = "wl_p"
    WL_N = "wl_n"
    IB_CTRL = "ib_ctrl"
    COL_EN = "col_en"


@dataclass(frozen=True)
class GateDrive:
    """Active/inactive gate levels one control line translates to."""

    role: LineRole
    active_v: float
    inactive_v: float


def gate_drive_for(role: LineRole, vddh: float) -> GateDrive:
    # WL_P lives in the HV domain (vddh as logic low, vddh-5 as logic
    # high); everything else swings 0..5 referenced to its source.
    if role is LineRole.WL_P:
        return GateDrive(role, vddh - GATE_SWING, vddh)
    return GateDrive(role, GATE_SWING, 0.0)


def level_shift(drive: GateDrive, logic: bool) -> float:
    return drive.active_v if logic else drive.inactive_v


def kelvin_gate_voltage(i_b: float, r_bias: float, v_source: float) -> float:
    """Probe-pair gate level: the bias generator rides on the source."""
    swing = i_b * r_bias
    if swing > GATE_SWING + 1e-12:
        raise ConfigurationError(
            f"bias network would put {swing:.3f} V on a probe gate (limit {GATE_SWING})"
        )
    return v_source + swing


# --- address decode ----------------------------------------------------

def decode_address(config: ArrayConfig, addr: Address) -> tuple[tuple[bool, ...], tuple[bool, ...]]:
    """One-hot (row_lines, col_lines) for an address."""
    if not (0 <= addr.row < config.rows and 0 <= addr.col < config.cols):
        raise DecodeError(f"address {addr} outside {config.rows}x{config.cols} array")
    rows = tuple(r == addr.row for r in range(config.rows))
    cols = tuple(c == addr.col for c in range(config.cols))
    return rows, cols


def encode_address(row_lines: tuple[bool, ...], col_lines: tuple[bool, ...]) -> Address:
    """Inverse of decode_address; rejects anything that is not one-hot."""
    if sum(row_lines) != 1 or sum(col_lines) != 1:
        raise DecodeError(
            f"select lines must be one-hot, got {sum(row_lines)} rows / {sum(col_lines)} cols"
        )
    return Address(row_lines.index(True), col_lines.index(True))


# --- operation requests and timelines ----------------------------------

@dataclass(frozen=True)
class OperationRequest:
    mode: Mode
    addr: Address
    v_pad: float | None = None
    pulse_ns: float = MIN_PULSE_NS
    reverse: bool = False   # READ only: sense through the PMOS path

    def __post_init__(self):
        if not math.isfinite(self.pulse_ns) or self.pulse_ns < MIN_PULSE_NS:
            raise TimingError(
                f"pulse width must be at least {MIN_PULSE_NS} ns, got {self.pulse_ns}"
            )
        if self.v_pad is not None and not math.isfinite(self.v_pad):
            raise ConfigurationError(f"v_pad must be finite, got {self.v_pad}")
        if self.reverse and self.mode is not Mode.READ:
            raise ConfigurationError("reverse polarity only applies to reads")

    def resolved_v_pad(self, vddh: float) -> float:
        if self.v_pad is None:
            return default_v_pad(self.mode, vddh, self.reverse)
        return self.v_pad


@dataclass(frozen=True)
class Interval:
    t_start_ns: float
    t_end_ns: float
    state: ActivationState


@dataclass(frozen=True)
class TimelineEvent:
    t_ns: float
    line: LineRole
    level: bool


@dataclass(frozen=True)
class ControlTimeline:
    request: OperationRequest
    v_pad: float
    intervals: tuple[Interval, ...]
    events: tuple[TimelineEvent, ...]
    pulse_start_ns: float
    pulse_end_ns: float

    @property
    def duration_ns(self) -> float:
        return self.intervals[-1].t_end_ns

    def state_at(self, t_ns: float) -> ActivationState:
        if t_ns < 0:
            raise TimingError(f"negative time {t_ns}")
        for iv in self.intervals:
            if iv.t_start_ns <= t_ns < iv.t_end_ns:
                return iv.state
        return self.intervals[-1].state


def sequence_operation(array: Array, request: OperationRequest) -> ControlTimeline:
    """Expand a request into the switch-state intervals of one pulse."""
    cfg = array.config
    decode_address(cfg, request.addr)
    v_pad = request.resolved_v_pad(cfg.vddh)
    if not (0.0 <= v_pad <= cfg.vddh):
        raise RangeError(f"v_pad {v_pad} outside the drivable range [0, {cfg.vddh}]")
    v_dev = commanded_device_voltage(request.mode, v_pad, cfg.vddh, request.reverse)
    if abs(v_dev) > MAX_DEVICE_V:
        raise RangeError(f"commanded device voltage {v_dev} exceeds +/-{MAX_DEVICE_V} V")

    pmos = uses_pmos_path(request.mode, request.reverse)
    read = request.mode is Mode.READ
    pw = request.pulse_ns
    t_col_on = COL_EN_LEAD_NS
    t_wl_on = COL_EN_LEAD_NS + TAIL_NS  # 30 ns with the defaults
    t_wl_off = t_wl_on + pw
    t_col_off = t_wl_off + COL_EN_LEAD_NS
    t_end = t_col_off + TAIL_NS

    # The HV rail stays up for anything that programs (dropping it would
    # forward-bias the PMOS body diodes of every half-selected pixel and
    # bleed uA-level sneak current into the dead rail); it parks at 0 V
    # only for forward reads, where its off-state backfeed would sit on
    # top of the nA-scale sense current.
    hv_rail = pmos or request.mode in (Mode.SET, Mode.FORM)

    def state(col_en: bool, wl: bool) -> ActivationState:
        return ActivationState(
            addr=request.addr,
            mode=request.mode,
            v_pad=v_pad,
            wl_n=wl and not pmos,
            wl_p=wl and pmos,
            ib_ctrl=wl and read,
            col_en=col_en,
            hv_rail=hv_rail,
        )

    intervals = (
        Interval(0.0, t_col_on, state(False, False)),
        Interval(t_col_on, t_wl_on, state(True, False)),
        Interval(t_wl_on, t_wl_off, state(True, True)),
        Interval(t_wl_off, t_col_off, state(True, False)),
        Interval(t_col_off, t_end, state(False, False)),
    )
    wl_line = LineRole.WL_P if pmos else LineRole.WL_N
    events = [TimelineEvent(t_col_on, LineRole.COL_EN, True),
              TimelineEvent(t_wl_on, wl_line, True)]
    if read:
        events.append(TimelineEvent(t_wl_on, LineRole.IB_CTRL, True))
        events.append(TimelineEvent(t_wl_off, LineRole.IB_CTRL, False))
    events.append(TimelineEvent(t_wl_off, wl_line, False))
    events.append(TimelineEvent(t_col_off, LineRole.COL_EN, False))
    events.sort(key=lambda e: (e.t_ns, e.line.value))
    return ControlTimeline(request, v_pad, intervals, tuple(events),
                           t_wl_on, t_wl_off)


def apply_pulse(array: Array, request: OperationRequest) -> Array:
    """State transition the commanded pulse causes at the addressed pixel.

    Uses the commanded electrode voltage, not the loaded one, so a FORM
    step fires when the controller commands the forming level.
    """
    cfg = array.config
    device = array.device_at(request.addr)
    if not isinstance(device, Bistable):
        return array
    v_dev = commanded_device_voltage(
        request.mode, request.resolved_v_pad(cfg.vddh), cfg.vddh, request.reverse
    )
    updated = update_device_state(device, v_dev, request.pulse_ns)
    return array.with_device(request.addr, updated)


# --- gate-oxide stress replay -------------------------------------------

_PAIR_ROLES = {"column_switch", "kelvin_column_switch", "bl_probe", "probe_switch"}


def _pair_mid(branch: Branch) -> int:
    # halves are stamped mid-last ("...a": a->mid) then mid-first ("...b")
    return branch.b if branch.name.endswith("a") or "_m1_" in branch.name else branch.a


def gate_stress_report(graph: CircuitGraph, solution) -> list[BreakdownViolation]:
    """Recompute every switch's gate and body stress from solved voltages.

    `solution` only needs a voltage(node_name) method.  Pixel selects are
    referenced to their rail; transmission pairs and probe pairs float on
    the solved mid node, which is what keeps a 22 V path off the oxide.
    """
    violations: list[BreakdownViolation] = []
    for br in graph.branches:
        if not isinstance(br.element, SwitchModel):
            continue
        model = br.element
        on = br.gate_vgs is not None and abs(br.gate_vgs) >= GATE_ON_MIN
        if br.role == "select_nmos":
            v_s = 0.0
            v_g = level_shift(gate_drive_for(LineRole.WL_N, 0.0), on)
            v_b = 0.0
        elif br.role == "select_pmos":
            vddh = solution.voltage("vddh")
            v_s = vddh
            v_g = level_shift(gate_drive_for(LineRole.WL_P, vddh), on)
            v_b = vddh
        elif br.role in _PAIR_ROLES:
            mid = _pair_mid(br)
            v_s = solution.voltage(graph.nodes[mid])
            # probe pairs carry the bias-generator swing, others full logic
            v_g = v_s + (br.gate_vgs if on else 0.0)
            v_b = v_s
        else:
            continue
        hit = check_gate_breakdown(v_g, v_s, v_b, model, name=br.name)
        if hit is not None:
            violations.append(hit)
    return violations


def build_interval_graph(array: Array, state: ActivationState) -> CircuitGraph:
    return netlist_for_operation(array, state)

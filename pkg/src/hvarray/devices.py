"""Device models for the 2T1R array: memristors, HV switches, body diodes.

Everything here is quasi-static and piecewise linear.  A device model is a
value object; the electrical state it contributes to a solve is captured by
a Stamp (conductance + constant current term), and memristor state updates
are explicit, once-per-pulse transitions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import ConfigurationError, TimingError

# Gate swing is 5 V on both device types (level shifter output); treat a
# switch as driven on once the gate-source magnitude clears half the swing.
GATE_SWING = 5.0
GATE_ON_MIN = 2.5

# Shortest pulse the HV drivers can shape.
MIN_PULSE_NS = 30.0

# Breakdown check slack for float comparisons.
BREAKDOWN_EPS = 1e-3


class MemristorState(enum.Enum):
    HRS = "hrs"
    LRS = "lrs"


class SwitchPolarity(enum.Enum):
    NMOS = "nmos"
    PMOS = "pmos"


@dataclass(frozen=True)
class IdealResistor:
    """Fixed linear resistance standing in for a memristor under test."""

    resistance: float

    def __post_init__(self):
        if not (math.isfinite(self.resistance) and self.resistance > 0):
            raise ConfigurationError(f"resistance must be positive, got {self.resistance}")

    @property
    def present_resistance(self) -> float:
        return self.resistance


@dataclass(frozen=True)
class Bistable:
    """Two-state memristor with a one-time forming step.

    An unformed device presents r_pristine regardless of state; forming is
    irreversible and leaves the device in its low-resistance state.
    """

    r_hrs: float = 10e6
    r_lrs: float = 1e3
    v_set: float = 1.2
    v_reset: float = -1.2
    v_form: float = 18.0
    r_pristine: float = 1e9
    formed: bool = False
    state: MemristorState = MemristorState.HRS

    def __post_init__(self):
        for name in ("r_hrs", "r_lrs", "r_pristine"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive, got {value}")
        if not self.r_lrs < self.r_hrs:
            raise ConfigurationError(f"r_lrs ({self.r_lrs}) must be below r_hrs ({self.r_hrs})")
        if not (self.v_reset < 0 < self.v_set):
            raise ConfigurationError(
                f"thresholds must satisfy v_reset < 0 < v_set, got {self.v_reset}, {self.v_set}"
            )
        if self.v_form < self.v_set:
            raise ConfigurationError(f"v_form ({self.v_form}) must be >= v_set ({self.v_set})")

    @property
    def present_resistance(self) -> float:
        if not self.formed:
            return self.r_pristine
        return self.r_lrs if self.state is MemristorState.LRS else self.r_hrs


DeviceModel = IdealResistor | Bistable


@dataclass(frozen=True)
class DiodeModel:
    """Piecewise-linear junction: g_off below v_forward, g_on above it."""

    v_forward: float = 0.7
    g_on: float = 10.0
    g_off: float = 1e-12

    def __post_init__(self):
        if self.v_forward <= 0:
            raise ConfigurationError(f"v_forward must be positive, got {self.v_forward}")
        if not (0 < self.g_off < self.g_on):
            raise ConfigurationError(
                f"need 0 < g_off < g_on, got g_off={self.g_off}, g_on={self.g_on}"
            )

    def conducting(self, v: float) -> bool:
        # Tie at the breakpoint resolves toward off.
        return v > self.v_forward

    def current(self, v: float) -> float:
        if v > self.v_forward:
            return self.g_off * self.v_forward + self.g_on * (v - self.v_forward)
        return self.g_off * v


@dataclass(frozen=True)
class SwitchModel:
    """HV switch abstraction: r_on/r_off picked by the gate drive.

    The gate is digital here - the controller either drives it to the
    active level or it sits at the source potential.  v_gs_max is the
    oxide rating shared by every device in the process.
    """

    polarity: SwitchPolarity
    r_on: float
    r_off: float
    v_gs_max: float = GATE_SWING
    body_diode: DiodeModel = DiodeModel()

    def __post_init__(self):
        if not (0 < self.r_on < self.r_off):
            raise ConfigurationError(
                f"need 0 < r_on < r_off, got r_on={self.r_on}, r_off={self.r_off}"
            )
        if self.v_gs_max != GATE_SWING:
            raise ConfigurationError(
                f"v_gs_max is fixed at {GATE_SWING} V by the process, got {self.v_gs_max}"
            )

    def conductance(self, v_gs: float | None) -> float:
        if v_gs is not None and abs(v_gs) >= GATE_ON_MIN:
            return 1.0 / self.r_on
        return 1.0 / self.r_off


@dataclass(frozen=True)
class Stamp:
    """Linearised branch: i = conductance * v_branch + current_offset."""

    conductance: float
    current_offset: float = 0.0


@dataclass(frozen=True)
class BreakdownViolation:
    device: str
    terminal: str  # "gate" or "bulk"
    differential: float

    def __str__(self):
        return f"{self.device}: |V_{self.terminal[0].upper()}S| = {abs(self.differential):.3f} V exceeds rating"


def element_stamp(model, branch_voltage: float, gate_drive: float | None = None) -> Stamp:
    """Linear stamp of one element at the given operating-point guess.

    branch_voltage is the present guess of the voltage across the element
    (first terminal minus second); gate_drive is the gate-source
    differential and is meaningful only for switches.
    """
    if isinstance(model, (IdealResistor, Bistable)):
        return Stamp(1.0 / model.present_resistance)
    if isinstance(model, SwitchModel):
        return Stamp(model.conductance(gate_drive))
    if isinstance(model, DiodeModel):
        if model.conducting(branch_voltage):
            # Continuous at the breakpoint: both segments meet at
            # i(v_forward) = g_off * v_forward.
            offset = (model.g_off - model.g_on) * model.v_forward
            return Stamp(model.g_on, offset)
        return Stamp(model.g_off)
    raise TypeError(f"no stamp for {type(model).__name__}")


def update_device_state(model: Bistable, v_applied: float, pulse_width_ns: float) -> Bistable:
    """One pulse worth of state evolution, set-positive voltage convention.

    Transitions are threshold-only: pulse width is validated against the
    driver minimum but does not otherwise enter the model.
    """
    if not math.isfinite(v_applied):
        raise ConfigurationError(f"v_applied must be finite, got {v_applied}")
    if pulse_width_ns < MIN_PULSE_NS:
        raise TimingError(f"pulse width {pulse_width_ns} ns below the {MIN_PULSE_NS} ns minimum")
    if not model.formed:
        if abs(v_applied) >= model.v_form:
            return replace(model, formed=True, state=MemristorState.LRS)
        return model
    if v_applied >= model.v_set:
        return replace(model, state=MemristorState.LRS)
    if v_applied <= model.v_reset:
        return replace(model, state=MemristorState.HRS)
    return model


def check_gate_breakdown(v_g: float, v_s: float, v_b: float, model: SwitchModel,
                         name: str = "switch") -> BreakdownViolation | None:
    """Gate-oxide safety check. Returns None when safe, a violation otherwise."""
    for value, label in ((v_g, "v_g"), (v_s, "v_s"), (v_b, "v_b")):
        if not math.isfinite(value):
            raise ConfigurationError(f"{label} must be finite, got {value}")
    v_gs = v_g - v_s
    if abs(v_gs) > model.v_gs_max + BREAKDOWN_EPS:
        return BreakdownViolation(name, "gate", v_gs)
    v_bs = v_b - v_s
    if abs(v_bs) > model.v_gs_max + BREAKDOWN_EPS:
        return BreakdownViolation(name, "bulk", v_bs)
    return None

"""Array fabric: pixel layout, wiring, and per-operation circuit graphs.

The array is rows x cols of 2T1R pixels.  Column pairs alternate between
the plain flavour and the Kelvin flavour (which adds a transmission-gate
voltage probe from the memristor top electrode to a per-column sense line).
Word lines, IB_CTRL, and the pad mux are row/column-level signals, so a
circuit graph for one operation contains the whole array: the selected
path plus every leakage path through off switches.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .devices import (
    Bistable,
    DeviceModel,
    DiodeModel,
    IdealResistor,
    SwitchModel,
    SwitchPolarity,
    element_stamp,
)
from .errors import CapabilityError, ConfigurationError, DecodeError

GND = -1  # node handle for the reference rail

MAX_RAIL_V = 22.0


class PixelFlavour(enum.Enum):
    STANDARD = "standard-2t1r"
    KELVIN = "kelvin-2t1r"


class Mode(enum.Enum):
    READ = "read"
    SET = "set"
    RESET = "reset"
    FORM = "form"


# Polarity of the 2T path each mode drives.  Reset pulls the top electrode
# to VDDH through the PMOS; everything else pulls it to ground through the
# NMOS.
RESET_MODES = frozenset({Mode.RESET})


@dataclass(frozen=True, order=True)
class Address:
    row: int
    col: int

    def __post_init__(self):
        if self.row < 0 or self.col < 0:
            raise DecodeError(f"address components must be non-negative, got {self}")

    def __str__(self):
        return f"({self.row},{self.col})"


@dataclass(frozen=True)
class ActivationState:
    """Instantaneous control-line state the fabric turns into a netlist.

    hv_rail gates the programming supply: parked at 0 V during forward
    reads so the off-state pixel dividers cannot backfeed the selected
    bit line, energised for anything that programs (a dead rail would
    let the half-selected PMOS body diodes clamp the bit line).
    """

    addr: Address
    mode: Mode
    v_pad: float
    wl_n: bool = False
    wl_p: bool = False
    ib_ctrl: bool = False
    col_en: bool = False
    hv_rail: bool = True


@dataclass(frozen=True)
class KelvinProbeConfig:
    """Transmission-gate probe and its gate-bias generator."""

    r_on: float = 50e3          # per pixel-probe switch; sets the sense drop
    i_b: float = 40e-6          # bias generator current
    r_bias: float = 100e3       # gate resistor; V_GS = i_b * r_bias when enabled
    sense_current: float = 60e-9    # V1-side front-end draw
    sense_current_bl: float = 0.0   # BL-side front-end draw (ideal by default)
    sense_leak_s: float = 1e-14     # front-end input conductance to ground
    bias_in_network: bool = True    # include the bias loop as real branches

    def __post_init__(self):
        if self.i_b * self.r_bias > 5.0:
            raise ConfigurationError(
                f"gate protection requires i_b * r_bias <= 5 V, got {self.i_b * self.r_bias}"
            )
        for name in ("r_on", "r_bias"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("i_b", "sense_current", "sense_current_bl", "sense_leak_s"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 16
    cols: int = 16
    vddh: float = 22.0
    r_on_2t: float = 150.0         # pixel NMOS/PMOS on-resistance
    r_on_column_half: float = 75.0  # per half of a column transmission pair
    r_track: float = 75.0          # lumped column metal
    r_off: float = 100e9           # off-state resistance, every switch
    probe: KelvinProbeConfig = KelvinProbeConfig()
    diode: DiodeModel = DiodeModel()

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError(f"array must be at least 1x1, got {self.rows}x{self.cols}")
        if not (0 < self.vddh <= MAX_RAIL_V):
            raise ConfigurationError(f"vddh must be in (0, {MAX_RAIL_V}] V, got {self.vddh}")
        for name in ("r_on_2t", "r_on_column_half", "r_track"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.r_off <= max(self.r_on_2t, self.r_on_column_half, self.probe.r_on):
            raise ConfigurationError("r_off must exceed every on-resistance")

    @property
    def series_resistance(self) -> float:
        """Selected-path parasitic: 2T switch + column pair + track."""
        return self.r_on_2t + 2 * self.r_on_column_half + self.r_track


def flavour_of_column(col: int) -> PixelFlavour:
    """Column pairs alternate: 0,1 standard; 2,3 kelvin; 4,5 standard; ..."""
    return PixelFlavour.KELVIN if (col // 2) % 2 == 1 else PixelFlavour.STANDARD


class Array:
    """Immutable pixel grid plus the models installed at each address."""

    def __init__(self, config: ArrayConfig, devices: dict[Address, DeviceModel] | None = None,
                 default_device: DeviceModel | None = None):
        self.config = config
        self.default_device = default_device or IdealResistor(10e6)
        self._devices = dict(devices or {})
        for addr in self._devices:
            self._check_addr(addr)

    def _check_addr(self, addr: Address):
        if addr.row >= self.config.rows or addr.col >= self.config.cols:
            raise DecodeError(f"address {addr} outside {self.config.rows}x{self.config.cols} array")

    def flavour_of(self, addr: Address) -> PixelFlavour:
        self._check_addr(addr)
        return flavour_of_column(addr.col)

    def device_at(self, addr: Address) -> DeviceModel:
        self._check_addr(addr)
        return self._devices.get(addr, self.default_device)

    def with_device(self, addr: Address, model: DeviceModel) -> "Array":
        self._check_addr(addr)
        devices = dict(self._devices)
        devices[addr] = model
        return Array(self.config, devices, self.default_device)

    def pixel_count(self, flavour: PixelFlavour) -> int:
        per_row = sum(1 for c in range(self.config.cols) if flavour_of_column(c) is flavour)
        return per_row * self.config.rows


def build_array(config: ArrayConfig | None = None,
                devices: dict[Address, DeviceModel] | None = None,
                default_device: DeviceModel | None = None) -> Array:
    return Array(config or ArrayConfig(), devices, default_device)


# --- circuit graph -----------------------------------------------------

@dataclass(frozen=True)
class Branch:
    """Two-terminal element between graph nodes (GND = -1)."""

    name: str
    a: int
    b: int
    element: object
    gate_vgs: float | None = None   # switches only; None means not gated
    role: str = ""
    addr: Address | None = None


@dataclass(frozen=True)
class VoltageSource:
    name: str
    pos: int
    neg: int
    volts: float


@dataclass
class CircuitGraph:
    """Flat netlist for one quasi-static operating interval."""

    nodes: list[str] = field(default_factory=list)
    node_index: dict[str, int] = field(default_factory=dict)
    branches: list[Branch] = field(default_factory=list)
    sources: list[VoltageSource] = field(default_factory=list)
    injections: list[tuple[int, float]] = field(default_factory=list)
    # operation metadata used by readout
    activation: ActivationState | None = None
    flavour: PixelFlavour | None = None
    v_tp: float = 0.0
    sense_nodes: dict[str, str] = field(default_factory=dict)

    def node(self, name: str) -> int:
        idx = self.node_index.get(name)
        if idx is None:
            idx = len(self.nodes)
            self.nodes.append(name)
            self.node_index[name] = idx
        return idx

    def add_branch(self, name, a, b, element, gate_vgs=None, role="", addr=None):
        self.branches.append(Branch(name, a, b, element, gate_vgs, role, addr))

    def add_source(self, name, pos, neg, volts):
        self.sources.append(VoltageSource(name, pos, neg, volts))

    def add_injection(self, node, amps):
        """Constant current pushed into `node` (negative = drawn out)."""
        if amps != 0.0:
            self.injections.append((node, amps))

    def source_index(self, name: str) -> int:
        for k, src in enumerate(self.sources):
            if src.name == name:
                return k
        raise KeyError(name)

    def branches_with_role(self, role: str) -> list[int]:
        return [k for k, br in enumerate(self.branches) if br.role == role]

    def branch_named(self, name: str) -> int:
        for k, br in enumerate(self.branches):
            if br.name == name:
                return k
        raise KeyError(name)


def _gate(on: bool) -> float:
    """Gate-source differential for the digital switch abstraction."""
    from .devices import GATE_SWING
    return GATE_SWING if on else 0.0


def netlist_for_operation(array: Array, activation: ActivationState) -> CircuitGraph:
    """Full-array circuit graph for one control-line state.

    Includes the selected conduction path, every off switch (leakage),
    all body diodes, the selected row's Kelvin probes, per-column BL
    probes, and - when a probe is enabled - the sense front-end draws
    and the gate-bias loop.
    """
    cfg = array.config
    addr = activation.addr
    array._check_addr(addr)
    flavour = array.flavour_of(addr)
    if not (0.0 <= activation.v_pad <= cfg.vddh):
        raise ConfigurationError(
            f"v_pad must lie in [0, vddh={cfg.vddh}], got {activation.v_pad}"
        )

    pmos_path = activation.wl_p or activation.mode in RESET_MODES
    g = CircuitGraph()
    g.activation = activation
    g.flavour = flavour
    g.v_tp = cfg.vddh if pmos_path else 0.0

    vddh = g.node("vddh")
    pad = g.node("pad")
    v1sense = g.node("v1sense")
    blsense = g.node("blsense")
    g.sense_nodes = {"v1_probe": "v1sense", "bl_probe": "blsense"}

    col_half = SwitchModel(SwitchPolarity.NMOS, cfg.r_on_column_half, cfg.r_off,
                           body_diode=cfg.diode)
    nmos_2t = SwitchModel(SwitchPolarity.NMOS, cfg.r_on_2t, cfg.r_off, body_diode=cfg.diode)
    pmos_2t = SwitchModel(SwitchPolarity.PMOS, cfg.r_on_2t, cfg.r_off, body_diode=cfg.diode)
    probe_half = SwitchModel(SwitchPolarity.NMOS, cfg.probe.r_on, cfg.r_off,
                             body_diode=cfg.diode)

    probing = (activation.ib_ctrl and flavour is PixelFlavour.KELVIN
               and activation.col_en)

    for c in range(cfg.cols):
        bl = g.node(f"bl{c}")
        colmid = g.node(f"colmid{c}")
        colport = g.node(f"colport{c}")
        col_on = activation.col_en and c == addr.col
        vgs = _gate(col_on)
        g.add_branch(f"colsw{c}a", pad, colmid, col_half, vgs, role="column_switch")
        g.add_branch(f"colsw{c}b", colmid, colport, col_half, vgs, role="column_switch")
        g.add_branch(f"colsw{c}da", colmid, pad, cfg.diode, role="body_diode")
        g.add_branch(f"colsw{c}db", colmid, colport, cfg.diode, role="body_diode")
        g.add_branch(f"track{c}", colport, bl, IdealResistor(cfg.r_track), role="track")

        # per-column BL voltage probe, shared BL-sense pad
        bpmid = g.node(f"bpmid{c}")
        bl_probe_on = probing and c == addr.col
        vgs_bp = _gate(bl_probe_on)
        g.add_branch(f"blprobe{c}a", bl, bpmid, col_half, vgs_bp, role="bl_probe")
        g.add_branch(f"blprobe{c}b", bpmid, blsense, col_half, vgs_bp, role="bl_probe")
        g.add_branch(f"blprobe{c}da", bpmid, bl, cfg.diode, role="body_diode")
        g.add_branch(f"blprobe{c}db", bpmid, blsense, cfg.diode, role="body_diode")

        if flavour_of_column(c) is PixelFlavour.KELVIN:
            blk = g.node(f"blk{c}")
            kmid = g.node(f"kcolmid{c}")
            kcol_on = probing and c == addr.col
            vgs_k = _gate(kcol_on)
            g.add_branch(f"kcolsw{c}a", blk, kmid, col_half, vgs_k, role="kelvin_column_switch")
            g.add_branch(f"kcolsw{c}b", kmid, v1sense, col_half, vgs_k, role="kelvin_column_switch")
            g.add_branch(f"kcolsw{c}da", kmid, blk, cfg.diode, role="body_diode")
            g.add_branch(f"kcolsw{c}db", kmid, v1sense, cfg.diode, role="body_diode")

    for r in range(cfg.rows):
        wl_n_on = activation.wl_n and r == addr.row
        wl_p_on = activation.wl_p and r == addr.row
        for c in range(cfg.cols):
            pixel = Address(r, c)
            v1 = g.node(f"v1_{r}_{c}")
            bl = g.node_index[f"bl{c}"]
            device = array.device_at(pixel)
            g.add_branch(f"mem_{r}_{c}", v1, bl, device, role="memristor", addr=pixel)
            g.add_branch(f"nmos_{r}_{c}", v1, GND, nmos_2t, _gate(wl_n_on),
                         role="select_nmos", addr=pixel)
            g.add_branch(f"pmos_{r}_{c}", v1, vddh, pmos_2t, _gate(wl_p_on),
                         role="select_pmos", addr=pixel)
            g.add_branch(f"nbody_{r}_{c}", GND, v1, cfg.diode, role="body_diode", addr=pixel)
            g.add_branch(f"pbody_{r}_{c}", v1, vddh, cfg.diode, role="body_diode", addr=pixel)

    # Selected row's Kelvin probes.  IB_CTRL is a row signal, so every
    # Kelvin pixel of the row passes its V1 to its own sense line; only
    # the addressed column's line reaches the sense pad.
    for c in range(cfg.cols):
        if flavour_of_column(c) is not PixelFlavour.KELVIN:
            continue
        r = addr.row
        v1 = g.node_index[f"v1_{r}_{c}"]
        blk = g.node_index[f"blk{c}"]
        pvs = g.node(f"pvs_{r}_{c}")
        # probe gates ride the bias generator, V_G = I_B*R_bias above source
        vgs_p = cfg.probe.i_b * cfg.probe.r_bias if activation.ib_ctrl else 0.0
        g.add_branch(f"probe_m1_{r}_{c}", v1, pvs, probe_half, vgs_p,
                     role="probe_switch", addr=Address(r, c))
        g.add_branch(f"probe_m2_{r}_{c}", pvs, blk, probe_half, vgs_p,
                     role="probe_switch", addr=Address(r, c))
        g.add_branch(f"probe_d1_{r}_{c}", pvs, v1, cfg.diode, role="body_diode")
        g.add_branch(f"probe_d2_{r}_{c}", pvs, blk, cfg.diode, role="body_diode")

    # Front-end model: tiny input conductance always, plus the configured
    # sense draw while probing.
    g.add_branch("v1sense_leak", v1sense, GND,
                 IdealResistor(1.0 / cfg.probe.sense_leak_s), role="front_end")
    g.add_branch("blsense_leak", blsense, GND,
                 IdealResistor(1.0 / cfg.probe.sense_leak_s), role="front_end")
    if probing:
        g.add_injection(v1sense, -cfg.probe.sense_current)
        g.add_injection(blsense, -cfg.probe.sense_current_bl)

        if cfg.probe.bias_in_network:
            # Gate-bias generator: I_B from the HV rail through R_bias,
            # returning through the (M1 + active 2T) path to the active
            # rail.  A parallel loop - it shares only ideal rails with
            # the measurement path, which is the point: the bias current
            # must never route through the memristor or the sense divider.
            kg = g.node("kbias_g")
            ks = g.node("kbias_s")
            g.add_branch("kbias_r", kg, ks, IdealResistor(cfg.probe.r_bias), role="bias")
            return_rail = vddh if pmos_path else GND
            g.add_branch("kbias_return", ks, return_rail,
                         IdealResistor(cfg.probe.r_on + cfg.r_on_2t), role="bias")
            g.add_injection(kg, cfg.probe.i_b)
            g.add_injection(vddh, -cfg.probe.i_b)

    g.add_source("vddh", vddh, GND, cfg.vddh if activation.hv_rail else 0.0)
    g.add_source("pad", pad, GND, activation.v_pad)
    return g


def kelvin_sense_paths(array: Array, addr: Address) -> dict[str, str]:
    """Names of the two nodes whose solved voltages form the Kelvin reading."""
    if array.flavour_of(addr) is not PixelFlavour.KELVIN:
        raise CapabilityError(f"pixel {addr} has no Kelvin probe hardware")
    return {"v1_probe": "v1sense", "bl_probe": "blsense"}


def selected_memristor_branch(graph: CircuitGraph) -> int:
    addr = graph.activation.addr
    return graph.branch_named(f"mem_{addr.row}_{addr.col}")

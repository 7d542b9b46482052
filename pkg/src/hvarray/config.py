"""Experiment configuration: a flat dotted key=value text format.

Grammar (one assignment per line):

    # comment                blank lines and #-to-end-of-line are ignored
    section.key = value      keys are dotted paths, values are typed below

Sections and keys:

    array.rows, array.cols            int
    array.vddh                        volts
    array.r_on_2t                     ohms, lumped 2T on-resistance
    array.r_on_column_half            ohms, one transmission-gate half
    array.r_track                     ohms, metal track per column
    array.r_off                       ohms, switch off-resistance
    probe.r_on                        ohms, M1/M2 probe half
    probe.i_b, probe.r_bias           bias generator (V_G = I_B*R_bias + V_S)
    probe.sense_current               amps drawn by the V1 sense buffer
    probe.sense_current_bl            amps drawn by the BL sense buffer
    probe.sense_leak_s                siemens, sense-line leakage to ground
    probe.bias_in_network             bool, solve the bias loop in-circuit
    diode.v_forward, diode.g_on, diode.g_off
    bistable.r_hrs, bistable.r_lrs, bistable.r_pristine
    bistable.v_set, bistable.v_reset, bistable.v_form
    device.default                    device spec (below), whole array
    device.at.<row>.<col>             device spec for one pixel
    experiment.mode                   read | set | reset | form | iv-sweep
    experiment.row, experiment.col    target address
    experiment.pulse_ns               pulse width
    experiment.v_pad                  pad voltage (omit for the mode default)
    experiment.reverse                bool, read through the PMOS path
    experiment.step_ns                transient sampling step
    experiment.v_start, experiment.v_stop, experiment.steps   sweep grid
    experiment.points                 error-sweep point count
    experiment.r_start, experiment.r_stop                     error-sweep range

Device specs:

    ideal:<ohms>                      fixed resistor
    bistable                          unformed, presents r_pristine
    bistable:formed:hrs               formed, high-resistance state
    bistable:formed:lrs               formed, low-resistance state

Unknown keys are rejected; every validation error names the offending key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .devices import Bistable, DeviceModel, DiodeModel, IdealResistor, MemristorState
from .errors import ConfigurationError
from .fabric import Address, Array, ArrayConfig, KelvinProbeConfig, build_array

_INT_KEYS = {
    "array.rows", "array.cols",
    "experiment.row", "experiment.col",
    "experiment.steps", "experiment.points",
}
_FLOAT_KEYS = {
    "array.vddh", "array.r_on_2t", "array.r_on_column_half",
    "array.r_track", "array.r_off",
    "probe.r_on", "probe.i_b", "probe.r_bias",
    "probe.sense_current", "probe.sense_current_bl", "probe.sense_leak_s",
    "diode.v_forward", "diode.g_on", "diode.g_off",
    "bistable.r_hrs", "bistable.r_lrs", "bistable.r_pristine",
    "bistable.v_set", "bistable.v_reset", "bistable.v_form",
    "experiment.pulse_ns", "experiment.v_pad", "experiment.step_ns",
    "experiment.v_start", "experiment.v_stop",
    "experiment.r_start", "experiment.r_stop",
}
_BOOL_KEYS = {"probe.bias_in_network", "experiment.reverse"}
_STR_KEYS = {"experiment.mode", "device.default"}

_MODES = ("read", "set", "reset", "form", "iv-sweep")


def _parse_bool(key: str, text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigurationError(f"{key}: expected a boolean, got {text!r}")


def _parse_typed(key: str, text: str):
    if key in _INT_KEYS:
        try:
            return int(text)
        except ValueError:
            raise ConfigurationError(f"{key}: expected an integer, got {text!r}") from None
    if key in _FLOAT_KEYS:
        try:
            value = float(text)
        except ValueError:
            raise ConfigurationError(f"{key}: expected a number, got {text!r}") from None
        if not math.isfinite(value):
            raise ConfigurationError(f"{key}: must be finite, got {text!r}")
        return value
    if key in _BOOL_KEYS:
        return _parse_bool(key, text)
    if key in _STR_KEYS or key.startswith("device.at."):
        return text
    raise ConfigurationError(f"{key}: unknown configuration key")


def parse_assignments(text: str) -> dict[str, object]:
    """key=value lines -> typed dict; later assignments win."""
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        out[key] = _parse_typed(key, value)
    return out


def parse_override(text: str) -> tuple[str, object]:
    """One --override argument, same key=value grammar as the file."""
    if "=" not in text:
        raise ConfigurationError(f"override {text!r}: expected key=value")
    key, _, value = text.partition("=")
    key = key.strip()
    return key, _parse_typed(key, value.strip())


@dataclass(frozen=True)
class ExperimentSpec:
    """The experiment.* section; None means "use the mode's default"."""

    mode: str = "read"
    row: int | None = None       # runners resolve their own default target
    col: int | None = None
    pulse_ns: float | None = None
    v_pad: float | None = None
    reverse: bool = False
    step_ns: float = 1.0
    v_start: float | None = None
    v_stop: float | None = None
    steps: int | None = None
    points: int = 21
    r_start: float = 500.0
    r_stop: float = 10e6

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigurationError(
                f"experiment.mode: must be one of {', '.join(_MODES)}, got {self.mode!r}"
            )
        if self.points < 2:
            raise ConfigurationError(f"experiment.points: need at least 2, got {self.points}")
        if not (0 < self.r_start < self.r_stop):
            raise ConfigurationError(
                f"experiment.r_start/r_stop: need 0 < start < stop, got {self.r_start}, {self.r_stop}"
            )
        if self.steps is not None and self.steps < 2:
            raise ConfigurationError(f"experiment.steps: need at least 2, got {self.steps}")
        if not (math.isfinite(self.step_ns) and self.step_ns >= 1.0):
            raise ConfigurationError(
                f"experiment.step_ns: must be at least 1 ns, got {self.step_ns}"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    array: ArrayConfig = field(default_factory=ArrayConfig)
    bistable: Bistable = field(default_factory=Bistable)
    default_device: str = "ideal:10e6"
    device_overrides: tuple[tuple[Address, str], ...] = ()
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)

    def device_for_spec(self, key: str, spec: str) -> DeviceModel:
        parts = spec.split(":")
        if parts[0] == "ideal":
            if len(parts) != 2:
                raise ConfigurationError(f"{key}: expected ideal:<ohms>, got {spec!r}")
            try:
                ohms = float(parts[1])
            except ValueError:
                raise ConfigurationError(f"{key}: bad resistance {parts[1]!r}") from None
            return IdealResistor(ohms)
        if parts[0] == "bistable":
            if len(parts) == 1:
                return self.bistable
            if len(parts) == 3 and parts[1] == "formed" and parts[2] in ("hrs", "lrs"):
                from dataclasses import replace
                return replace(self.bistable, formed=True,
                               state=MemristorState(parts[2]))
            raise ConfigurationError(
                f"{key}: expected bistable or bistable:formed:<hrs|lrs>, got {spec!r}"
            )
        raise ConfigurationError(f"{key}: unknown device spec {spec!r}")

    def build_array(self) -> Array:
        arr = build_array(self.array, default_device=self.device_for_spec(
            "device.default", self.default_device))
        for addr, spec in self.device_overrides:
            if not (0 <= addr.row < self.array.rows and 0 <= addr.col < self.array.cols):
                raise ConfigurationError(
                    f"device.at.{addr.row}.{addr.col}: outside the "
                    f"{self.array.rows}x{self.array.cols} array"
                )
            arr = arr.with_device(addr, self.device_for_spec(
                f"device.at.{addr.row}.{addr.col}", spec))
        return arr


def _device_override_addr(key: str) -> Address:
    parts = key.split(".")
    if len(parts) != 4:
        raise ConfigurationError(f"{key}: expected device.at.<row>.<col>")
    try:
        row, col = int(parts[2]), int(parts[3])
    except ValueError:
        raise ConfigurationError(f"{key}: row/col must be integers") from None
    if row < 0 or col < 0:
        raise ConfigurationError(f"{key}: row/col must be non-negative")
    return Address(row, col)


def config_from_assignments(values: dict[str, object]) -> ExperimentConfig:
    def take(prefix: str, defaults: dict) -> dict:
        picked = dict(defaults)
        for key in values:
            if key.startswith(prefix + "."):
                name = key[len(prefix) + 1:]
                if "." not in name and name in picked:
                    picked[name] = values[key]
        return picked

    probe_kw = take("probe", {
        "r_on": 50e3, "i_b": 40e-6, "r_bias": 100e3,
        "sense_current": 60e-9, "sense_current_bl": 0.0,
        "sense_leak_s": 1e-14, "bias_in_network": True,
    })
    probe = KelvinProbeConfig(**probe_kw)
    diode_kw = take("diode", {"v_forward": 0.7, "g_on": 10.0, "g_off": 1e-12})
    diode = DiodeModel(**diode_kw)
    array_kw = take("array", {
        "rows": 16, "cols": 16, "vddh": 22.0, "r_on_2t": 150.0,
        "r_on_column_half": 75.0, "r_track": 75.0, "r_off": 100e9,
    })
    array = ArrayConfig(probe=probe, diode=diode, **array_kw)
    bistable_kw = take("bistable", {
        "r_hrs": 10e6, "r_lrs": 1e3, "v_set": 1.2, "v_reset": -1.2,
        "v_form": 18.0, "r_pristine": 1e9,
    })
    bistable = Bistable(**bistable_kw)
    exp_kw = take("experiment", {
        "mode": "read", "row": None, "col": None, "pulse_ns": None,
        "v_pad": None, "reverse": False, "step_ns": 1.0,
        "v_start": None, "v_stop": None, "steps": None,
        "points": 21, "r_start": 500.0, "r_stop": 10e6,
    })
    experiment = ExperimentSpec(**exp_kw)
    overrides = []
    for key in sorted(values):
        if key.startswith("device.at."):
            overrides.append((_device_override_addr(key), str(values[key])))
    cfg = ExperimentConfig(
        array=array,
        bistable=bistable,
        default_device=str(values.get("device.default", "ideal:10e6")),
        device_overrides=tuple(overrides),
        experiment=experiment,
    )
    # fail fast on bad device specs and out-of-range addresses
    cfg.build_array()
    for name, bound in (("row", array.rows), ("col", array.cols)):
        value = getattr(experiment, name)
        if value is not None and not (0 <= value < bound):
            raise ConfigurationError(
                f"experiment.{name}: {value} outside the {array.rows}x{array.cols} array"
            )
    return cfg


def load_config(path: str | None, overrides: tuple[str, ...] = ()) -> ExperimentConfig:
    values: dict[str, object] = {}
    if path is not None:
        try:
            with open(path, "r") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        values.update(parse_assignments(text))
    for item in overrides:
        key, value = parse_override(item)
        values[key] = value
    return config_from_assignments(values)

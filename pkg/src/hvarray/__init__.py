"""Behavioral simulator for a high-voltage 2T1R memristor array.

The package splits along the hardware seams: device models, the array
fabric that turns a control state into a circuit graph, the pulse
controller, a piecewise-linear DC solver with a compiled kernel, the
readout estimators, and the batch experiment front end.
"""

from .devices import (
    GATE_SWING,
    MIN_PULSE_NS,
    Bistable,
    BreakdownViolation,
    DiodeModel,
    IdealResistor,
    MemristorState,
    SwitchModel,
    SwitchPolarity,
    check_gate_breakdown,
    element_stamp,
    update_device_state,
)
from .errors import (
    AssemblyError,
    BreakdownError,
    CapabilityError,
    ConfigurationError,
    DecodeError,
    HvArrayError,
    NonConvergenceError,
    RangeError,
    TimingError,
)
from .fabric import (
    ActivationState,
    Address,
    Array,
    ArrayConfig,
    CircuitGraph,
    KelvinProbeConfig,
    Mode,
    PixelFlavour,
    build_array,
    flavour_of_column,
    netlist_for_operation,
)
from .controller import (
    ControlTimeline,
    GateDrive,
    LineRole,
    OperationRequest,
    apply_pulse,
    commanded_device_voltage,
    decode_address,
    default_v_pad,
    encode_address,
    gate_drive_for,
    gate_stress_report,
    kelvin_gate_voltage,
    level_shift,
    sequence_operation,
    uses_pmos_path,
)
from .solver import (
    MnaSystem,
    Solution,
    TransientTrace,
    assemble,
    run_transient,
    solve_dc,
)
from .solver.kernel import active_kernel
from .readout import (
    COMPLIANCE_LIMIT_A,
    ComplianceReport,
    Measurement,
    ReadoutEstimate,
    compliance_report,
    error_sweep,
    estimate_conventional,
    estimate_from_measurement,
    estimate_kelvin,
    measure,
)
from .csvio import CsvTrace, emit, parse, read_file, write_file
from .config import ExperimentConfig, ExperimentSpec, load_config
from .experiments import (
    run_fig5,
    run_fig6,
    run_form,
    run_iv_sweep,
    run_read,
    run_write,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

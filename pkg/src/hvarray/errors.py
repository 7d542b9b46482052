"""Exception types shared across the package."""


class HvArrayError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(HvArrayError):
    """A config value is out of range or inconsistent. Names the field."""


class DecodeError(HvArrayError):
    """Address outside the physical array."""


class TimingError(HvArrayError):
    """Pulse width or timeline constraint violated."""


class RangeError(HvArrayError):
    """Requested voltage outside the +/-22 V operating envelope."""


class CapabilityError(HvArrayError):
    """Operation requires pixel hardware the addressed pixel does not have."""


class AssemblyError(HvArrayError):
    """Circuit graph cannot be assembled (e.g. a floating node)."""


class BreakdownError(HvArrayError):
    """A gate-oxide safety violation was detected during replay."""


class NonConvergenceError(HvArrayError):
    """The piecewise-linear fixed point did not settle within max_iter.

    Carries the last two diode state vectors so oscillations can be
    inspected.
    """

    def __init__(self, message, last_states=None, previous_states=None):
        super().__init__(message)
        self.last_states = last_states
        self.previous_states = previous_states

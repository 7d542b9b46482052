"""Kernel selection: compiled extension if importable, numpy fallback.

Set HVARRAY_PURE_PYTHON=1 to force the fallback (useful for timing
comparisons and for debugging the contract itself).
"""

import os

if os.environ.get("HVARRAY_PURE_PYTHON"):
    from . import _core_py as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_py as _impl

solve_system = _impl.solve_system


def active_kernel() -> str:
    return _impl.KERNEL_NAME

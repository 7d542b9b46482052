"""Build hook for the optional compiled solver kernel.

The package is pure Python except for hvarray.solver._core, a Cython
translation of the dense MNA inner loop.  If Cython (or a C compiler) is
unavailable the extension is skipped and the numpy fallback kernel is used
at import time instead.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("HVARRAY_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/hvarray/solver/_core.pyx"],
            language_level="3",
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

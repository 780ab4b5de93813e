"""Kernel backend selection.

The pairwise layer-potential kernels dominate runtime.  They are compiled
with numba by default; setting ``DIRACBAG_BACKEND=numpy`` selects the pure
numpy fallback (also used automatically when numba is not importable).
``benchmarks/bench_assembly.py`` compares the two.
"""

import os
import warnings

_env = os.environ.get("DIRACBAG_BACKEND", "auto").strip().lower()
if _env not in ("auto", "numba", "numpy", ""):
    warnings.warn(f"unknown DIRACBAG_BACKEND={_env!r}, using auto")
    _env = "auto"

if _env == "numpy":
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False
        if _env == "numba":
            warnings.warn("DIRACBAG_BACKEND=numba but numba is not installed")

USE_NUMBA = HAVE_NUMBA


def active():
    """The kernel module currently in use."""
    if USE_NUMBA:
        from . import _kernels_numba

        return _kernels_numba
    from . import _kernels_numpy

    return _kernels_numpy


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

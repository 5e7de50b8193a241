"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``TOMOSCOPE_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the NumPy fallback is used.
"""

import os

from tomoscope import _pykernels
from tomoscope._pykernels import CLAMP, ConvergenceError

_force_pure = os.environ.get("TOMOSCOPE_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from tomoscope import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

jacobi_eigh = _impl.jacobi_eigh
section_stats = _impl.section_stats

__all__ = ["BACKEND", "CLAMP", "ConvergenceError", "jacobi_eigh", "section_stats"]

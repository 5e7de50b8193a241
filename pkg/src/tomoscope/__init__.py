"""Tomographic entanglement indicators near avoided energy-level crossings."""

from tomoscope._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

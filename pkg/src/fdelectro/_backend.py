"""Kernel backend selection.

The compiled extension is preferred; setting ``FDELECTRO_PURE_PYTHON=1`` or a
missing build selects the pure-Python kernels.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("FDELECTRO_PURE_PYTHON"):
    kernels = _compiled
    BACKEND = "cython"
else:
    kernels = _kernels_py
    BACKEND = "python"


def get_kernels(name=None):
    """Return the kernel module ``name`` (``"cython"`` or ``"python"``), default the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available; build the extension first")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")

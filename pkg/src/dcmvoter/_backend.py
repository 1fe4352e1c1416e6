"""Kernel backend selection.

The compiled extension is used when it imports; setting
``DCMVOTER_PURE_PYTHON=1`` forces the pure-Python twin.
"""
from __future__ import annotations

import os

from . import _kernels_py

python_kernels = _kernels_py

try:
    from . import _kernels as compiled_kernels
except ImportError:  # pragma: no cover - depends on the build
    compiled_kernels = None

if compiled_kernels is not None and not os.environ.get("DCMVOTER_PURE_PYTHON"):
    kernels = compiled_kernels
    BACKEND = "compiled"
else:
    kernels = _kernels_py
    BACKEND = "python"


def get_kernels(name: str | None = None):
    """Return the kernel module for ``"compiled"``, ``"python"`` or the default (None)."""
    if name is None:
        return kernels
    if name == "python":
        return python_kernels
    if name == "compiled":
        if compiled_kernels is None:
            raise RuntimeError("compiled kernels are not built")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")

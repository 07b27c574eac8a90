"""Kernel backend selection.

``FPLD_BACKEND`` chooses the implementation: ``auto`` (default) uses the
compiled extension when it imports and falls back to numpy otherwise;
``compiled`` requires the extension; ``python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def compiled_available() -> bool:
    return _ckernels is not None


def get(name: str | None = None):
    """Return the kernel module for ``name`` (or the environment choice)."""
    name = (name or os.environ.get("FPLD_BACKEND", "auto")).lower()
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built; reinstall without FPLD_NO_EXT")
        return _ckernels
    if name == "auto":
        return _ckernels if _ckernels is not None else _kernels_py
    raise ValueError(f"unknown backend {name!r}")


def name_of(module) -> str:
    return "compiled" if module is _ckernels and module is not None else "python"

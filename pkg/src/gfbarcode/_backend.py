"""Select the compiled kernels when present, else the pure-Python twins.

Set ``GFBARCODE_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

_kernels = None
if os.environ.get("GFBARCODE_BACKEND", "").lower() != "python":
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        _kernels = None

BACKEND = "compiled" if _kernels is not None else "python"
_impl = _kernels if _kernels is not None else _kernels_py


def backend(name=None):
    """Kernel module by name (``"compiled"`` or ``"python"``); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _kernels is None:
            raise ImportError("compiled kernels are not built")
        return _kernels
    raise ValueError(f"unknown backend {name!r}")

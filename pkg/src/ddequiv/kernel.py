"""Backend selection for the decision-diagram core.

The compiled extension ``_kernel_c`` is used when it imports; otherwise the
pure-Python ``_kernel_py`` takes over.  Set ``DDEQUIV_BACKEND=python`` to
force the fallback (``=c`` makes a missing extension an error).
"""

from __future__ import annotations

import importlib
import os


def load_backend(name: str):
    """Return the backend module for ``"python"`` or ``"c"``."""
    if name == "python":
        return importlib.import_module("ddequiv._kernel_py")
    if name == "c":
        return importlib.import_module("ddequiv._kernel_c")
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        load_backend("c")
    except ImportError:
        pass
    else:
        names.insert(0, "c")
    return names


def _select():
    wanted = os.environ.get("DDEQUIV_BACKEND", "").strip().lower()
    if wanted in ("python", "py"):
        return load_backend("python")
    if wanted == "c":
        return load_backend("c")
    try:
        return load_backend("c")
    except ImportError:
        return load_backend("python")


_backend = _select()
BACKEND: str = _backend.BACKEND
Core = _backend.Core
Node = _backend.Node
ComplexTable = _backend.ComplexTable

"""Backend selection for the simulation kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise,
or when ``EQMEM_PURE_PYTHON`` is set to a non-empty value, the
pure-Python ``_pykernels`` module is used. Both produce identical output
for identical generator states.
"""
from __future__ import annotations

import importlib
import os
from types import ModuleType

from eqmem import _pykernels


def load_backend(name: str) -> ModuleType:
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("eqmem._ckernels")
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        load_backend("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


def _select() -> ModuleType:
    if os.environ.get("EQMEM_PURE_PYTHON"):
        return _pykernels
    try:
        return load_backend("cython")
    except ImportError:
        return _pykernels


_impl = _select()
BACKEND: str = _impl.BACKEND
bd_exit_time = _impl.bd_exit_time
walk_escape = _impl.walk_escape
toric_run = _impl.toric_run

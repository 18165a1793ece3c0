"""Pick the compiled kernels when importable, else the pure-Python ones.

Set ``BINDEBLUR_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os
from contextlib import contextmanager

from . import _fallback

if os.environ.get("BINDEBLUR_PURE_PYTHON"):
    kernels = _fallback
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        kernels = _fallback

BACKEND = kernels.BACKEND
FEASIBLE, INFEASIBLE, BUDGET = _fallback.FEASIBLE, _fallback.INFEASIBLE, _fallback.BUDGET
LLL_OK, LLL_TIMEOUT, LLL_DEPENDENT = _fallback.LLL_OK, _fallback.LLL_TIMEOUT, _fallback.LLL_DEPENDENT


def available_backends() -> dict:
    """Map backend name to kernel module for every backend that imports."""
    out = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out


@contextmanager
def use_backend(name: str):
    """Temporarily route every kernel call through backend ``name``."""
    global kernels
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"backend {name!r} is not available; have {sorted(backends)}")
    saved = kernels
    kernels = backends[name]
    try:
        yield kernels
    finally:
        kernels = saved

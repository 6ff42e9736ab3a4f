"""Selects the placement kernel implementation at import time.

The compiled extension is preferred; the numpy fallback is used when
the extension is missing or when LEASIM_PURE=1 is set.  Both expose the
same `rank_order` and `pack` contract and are exercised against each
other in the test suite.  `use_backend` exists for benchmarks and
parity tests; production code never switches backends mid-run.
"""

from __future__ import annotations

import os

from . import _hotpath_py

ORDER_H2L = _hotpath_py.ORDER_H2L
ORDER_L2H = _hotpath_py.ORDER_L2H
ORDER_NPA = _hotpath_py.ORDER_NPA

_IMPLS = {"python": _hotpath_py}
try:
    from . import _hotpath_cy

    _IMPLS["compiled"] = _hotpath_cy
except ImportError:
    _hotpath_cy = None

if os.environ.get("LEASIM_PURE"):
    BACKEND = "python"
elif "compiled" in _IMPLS:
    BACKEND = "compiled"
else:
    BACKEND = "python"

_impl = _IMPLS[BACKEND]


def available_backends() -> list[str]:
    return sorted(_IMPLS)


def use_backend(name: str) -> str:
    """Switch the active kernel; returns the previous backend name."""
    global _impl, BACKEND
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} not available, have {available_backends()}")
    previous = BACKEND
    BACKEND = name
    _impl = _IMPLS[name]
    return previous


def rank_order(caps_cpu, used_cpu, mode):
    return _impl.rank_order(caps_cpu, used_cpu, mode)


def pack(caps_cpu, residual, demand, count, mode):
    return _impl.pack(caps_cpu, residual, demand, count, mode)

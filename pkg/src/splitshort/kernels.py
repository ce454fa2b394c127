"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy/Python
reference implementation. Both return identical results, so the choice only
affects speed. :func:`use_backend` switches explicitly (tests, benchmarks).
"""
from __future__ import annotations

from types import ModuleType

from splitshort import _pykernels

try:
    from splitshort import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_impl: ModuleType = _ckernels if _ckernels is not None else _pykernels

# K above this goes to the Python search regardless of backend (mask width).
COMPILED_MAX_CANDIDATES = 63


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _ckernels is not None else [])


def backend() -> str:
    return "cython" if _impl is _ckernels else "python"


def use_backend(name: str) -> str:
    """Select ``"cython"`` or ``"python"``; returns the previous backend name."""
    global _impl
    prev = backend()
    if name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        _impl = _ckernels
    elif name == "python":
        _impl = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def bnb_search(unit_cost, amort_cost, inv, qty, fixed, order, amort_order, order_len, max_nodes, incumbent):
    impl = _impl if len(fixed) <= COMPILED_MAX_CANDIDATES else _pykernels
    return impl.bnb_search(unit_cost, amort_cost, inv, qty, fixed, order, amort_order, order_len,
                           int(max_nodes), float(incumbent))


def gini_best_split(X, y, sidx, min_leaf):
    return _impl.gini_best_split(X, y, sidx, int(min_leaf))


def stump_best_split(X, z, w, sidx):
    return _impl.stump_best_split(X, z, w, sidx)

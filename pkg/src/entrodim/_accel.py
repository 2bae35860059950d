"""Numba switch for the hot kernels.

Set ``ENTRODIM_DISABLE_NUMBA=1`` before import to run every kernel through
its pure-numpy fallback.  Both paths return identical results; the
benchmark in ``benchmarks/bench_kernels.py`` times them side by side.
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("ENTRODIM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by ENTRODIM_DISABLE_NUMBA")
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _njit = None
    HAS_NUMBA = False


def njit(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)``; return it untouched otherwise."""
    if _njit is None:
        return fn
    return _njit(cache=True)(fn)

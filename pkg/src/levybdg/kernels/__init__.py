"""Hot per-path kernels with two interchangeable backends.

The numba backend JIT-compiles path-major loops; the numpy backend runs
the same arithmetic rank-major (one vectorized pass per event slot).
Both produce identical event data and identical path functionals; the
selection is made once per process from the ``LEVY_BDG_BACKEND``
environment variable (``numba``, ``numpy`` or ``auto``).

Kernel contract (all arrays little-endian native dtypes):

``sample_counts(seed, start, n, count_cdf) -> counts``
    Per-path Poisson event counts by CDF inversion of draw 0.

``sample_events(seed, start, counts, horizon, wcdf) -> (times, atoms)``
    Flat path-major event arrays, times sorted strictly increasing
    within each path (float ties bumped by one ulp), atom indices by
    CDF inversion of the mark weights.

``scan_paths(counts, offsets, times, jvecs, partition, slopes, s)
   -> (sup, end)``
    Exact running supremum of the l_s norm of the compensated jump
    path and its value at the horizon.  The path is piecewise linear
    between breakpoints, so the supremum over each cell is attained at
    a left or right limit; no time grid is involved.
"""

from __future__ import annotations

import os

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    numba_backend = None
    HAVE_NUMBA = False


def _resolve(name: str):
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("LEVY_BDG_BACKEND=numba but numba is not importable")
        return numba_backend
    if name == "auto":
        return numba_backend if HAVE_NUMBA else numpy_backend
    raise ValueError(f"unknown backend {name!r} (expected numba, numpy or auto)")


_active = _resolve(os.environ.get("LEVY_BDG_BACKEND", "auto"))


def active_backend():
    """Module implementing the kernel contract for this process."""
    return _active


def backend_name() -> str:
    return "numba" if _active is numba_backend else "numpy"


def set_backend(name: str) -> None:
    """Switch backends; used by tests and the benchmark."""
    global _active
    _active = _resolve(name)

"""Counter-based random streams.

Every path in a Monte Carlo campaign owns a stream derived from
``(global seed, path index)`` through a two-level splitmix64 mixer:

    base(seed, i) = finalize(seed + (i + 1) * GAMMA)
    u(base, j)    = finalize(base + (j + 1) * GAMMA) >> 11  scaled to [0, 1)

``finalize`` is the splitmix64 output permutation.  Because the j-th
draw is a pure function of ``(seed, i, j)``, results are independent of
evaluation order, chunking and thread count, and any single draw can
be reproduced in isolation.

Three implementations exist and are kept in lock-step by tests: plain
Python integers (single-path use), vectorized numpy uint64 arrays
(the numpy kernel backend), and the numba kernels' scalar version.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def finalize(z: int) -> int:
    """splitmix64 output permutation on a 64-bit integer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def path_base(seed: int, index: int) -> int:
    """64-bit base state of the stream for one path."""
    return finalize((seed + (index + 1) * GAMMA) & _MASK)


def uniform(base: int, j: int) -> float:
    """j-th uniform [0, 1) draw of the stream with the given base."""
    z = finalize((base + (j + 1) * GAMMA) & _MASK)
    return (z >> 11) * _INV_2_53


def path_bases(seed: int, start: int, n: int) -> np.ndarray:
    """Vectorized ``path_base`` for indices ``start .. start+n-1``."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    return _finalize_u64(np.uint64(seed) + idx * np.uint64(GAMMA))


def uniforms(bases: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Vectorized ``uniform``; ``bases`` and ``j`` broadcast together."""
    z = _finalize_u64(bases + (j.astype(np.uint64) + np.uint64(1)) * np.uint64(GAMMA))
    return (z >> np.uint64(11)) * _INV_2_53


def _finalize_u64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))

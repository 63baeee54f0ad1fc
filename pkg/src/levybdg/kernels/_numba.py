"""Numba kernel backend: path-major @njit loops, parallel over paths.

Arithmetic mirrors ``_numpy`` operation for operation so the two
backends agree on event data exactly and on path functionals to the
last ulp for s in {1, 2, inf}.  All per-path state is private and every
write lands at the path's own index, which makes results independent
of the thread count.
"""

from __future__ import annotations

import math

import numpy as np
import numba
from numba import njit, prange

# workqueue is always present; avoids the TBB version probe warning
numba.config.THREADING_LAYER = "workqueue"

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV = 1.0 / 9007199254740992.0


@njit(inline="always")
def _finalize(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _uniform(base, j):
    z = _finalize(base + (np.uint64(j) + np.uint64(1)) * _GAMMA)
    return (z >> np.uint64(11)) * _INV


@njit(inline="always")
def _base(seed, idx):
    return _finalize(seed + np.uint64(idx + 1) * _GAMMA)


@njit(cache=True, parallel=True)
def _sample_counts(seed, start, n, count_cdf):
    out = np.empty(n, np.int64)
    for i in prange(n):
        u0 = _uniform(_base(seed, start + i), 0)
        out[i] = np.searchsorted(count_cdf, u0, side="right")
    return out


def sample_counts(seed, start, n, count_cdf):
    return _sample_counts(np.uint64(seed), start, n, count_cdf)


@njit(cache=True, parallel=True)
def _sample_events(seed, start, counts, offsets, horizon, wcdf, times, atoms):
    n = counts.shape[0]
    for i in prange(n):
        m = counts[i]
        if m == 0:
            continue
        base = _base(seed, start + i)
        ts = np.empty(m, np.float64)
        am = np.empty(m, np.int64)
        for k in range(m):
            ts[k] = horizon * (1.0 - _uniform(base, 1 + k))
        for k in range(m):
            am[k] = np.searchsorted(wcdf, _uniform(base, 1 + m + k), side="right")
        order = np.argsort(ts, kind="mergesort")
        o = offsets[i]
        prev = 0.0
        for k in range(m):
            t = ts[order[k]]
            if t <= prev:
                t = math.nextafter(prev, np.inf)
            times[o + k] = t
            atoms[o + k] = am[order[k]]
            prev = t


def sample_events(seed, start, counts, horizon, wcdf):
    total = int(counts.sum())
    times = np.empty(total, np.float64)
    atoms = np.empty(total, np.int64)
    if total:
        offsets = np.concatenate(([0], np.cumsum(counts)))
        _sample_events(
            np.uint64(seed), start, counts, offsets, horizon, wcdf, times, atoms
        )
    return times, atoms


@njit(inline="always")
def _norm_vec(v, s, d):
    acc = 0.0
    if s == 2.0:
        for l in range(d):
            acc += v[l] * v[l]
        return math.sqrt(acc)
    if s == 1.0:
        for l in range(d):
            acc += abs(v[l])
        return acc
    if s == np.inf:
        for l in range(d):
            a = abs(v[l])
            if a > acc:
                acc = a
        return acc
    for l in range(d):
        acc += abs(v[l]) ** s
    return acc ** (1.0 / s)


@njit(cache=True, parallel=True)
def scan_paths(counts, offsets, times, jvecs, partition, slopes, s):
    n = counts.shape[0]
    d = slopes.shape[2]
    nknots = partition.shape[0] - 1
    nseg = slopes.shape[1]
    sup = np.zeros(n)
    end = np.zeros(n)
    for i in prange(n):
        m = counts[i]
        o = offsets[i]
        cur = np.zeros(d)
        now = 0.0
        seg = 0
        best = 0.0
        e = 0
        pp = 1
        while e < m or pp <= nknots:
            ev_t = times[o + e] if e < m else np.inf
            kn_t = partition[pp] if pp <= nknots else np.inf
            if ev_t <= kn_t:
                b = ev_t
                is_ev = True
            else:
                b = kn_t
                is_ev = False
            dt = b - now
            sg = seg if seg < nseg else nseg - 1
            for l in range(d):
                cur[l] = cur[l] - slopes[i, sg, l] * dt
            c1 = _norm_vec(cur, s, d)
            if c1 > best:
                best = c1
            if is_ev:
                for l in range(d):
                    cur[l] = cur[l] + jvecs[o + e, l]
                e += 1
            else:
                seg += 1
                pp += 1
            c2 = _norm_vec(cur, s, d)
            if c2 > best:
                best = c2
            now = b
        sup[i] = best
        end[i] = _norm_vec(cur, s, d)
    return sup, end


def warmup():
    """Force JIT compilation of all kernels on tiny inputs."""
    cdf = np.array([0.5, 1.0])
    counts = sample_counts(1, 0, 2, cdf)
    counts = np.maximum(counts, 1)
    t, a = sample_events(1, 0, counts, 1.0, cdf)
    offs = np.concatenate(([0], np.cumsum(counts)))
    jv = np.ones((t.shape[0], 1))
    scan_paths(counts, offs, t, jv, np.array([0.0, 1.0]), np.ones((2, 1, 1)), 2.0)

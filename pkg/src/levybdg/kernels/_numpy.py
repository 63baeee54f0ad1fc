"""Pure-numpy kernel backend.

Paths have ragged event lists, so the vectorization axis is the event
rank: a Python loop over at most ``max(count) + intervals`` slots runs
one vectorized update per slot.  Per-path state is carried in arrays,
which reproduces the numba backend's per-path sequential arithmetic
operation for operation (same order, same rounding).
"""

from __future__ import annotations

import numpy as np

from .. import rng


def sample_counts(seed: int, start: int, n: int, count_cdf: np.ndarray) -> np.ndarray:
    bases = rng.path_bases(seed, start, n)
    u0 = rng.uniforms(bases, np.zeros(n, dtype=np.int64))
    return np.searchsorted(count_cdf, u0, side="right").astype(np.int64)


def sample_events(
    seed: int,
    start: int,
    counts: np.ndarray,
    horizon: float,
    wcdf: np.ndarray,
):
    n = counts.shape[0]
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.float64), np.empty(0, dtype=np.int64)
    maxc = int(counts.max())
    bases = rng.path_bases(seed, start, n)
    ranks = np.arange(maxc, dtype=np.int64)

    # draw 0 is the count; draws 1..m are times, m+1..2m are marks
    u_t = rng.uniforms(bases[:, None], 1 + ranks[None, :])
    times = horizon * (1.0 - u_t)  # u in [0,1) -> t in (0,T]
    valid = ranks[None, :] < counts[:, None]
    times[~valid] = np.inf

    u_m = rng.uniforms(bases[:, None], 1 + counts[:, None] + ranks[None, :])
    atoms = np.searchsorted(wcdf, u_m, side="right").astype(np.int64)

    order = np.argsort(times, axis=1, kind="stable")
    times = np.take_along_axis(times, order, axis=1)
    atoms = np.take_along_axis(atoms, order, axis=1)

    # strict ordering: bump float collisions by one ulp, rank-sequentially
    prev = np.zeros(n, dtype=np.float64)
    for c in range(maxc):
        col = times[:, c]
        act = counts > c
        fix = act & (col <= prev)
        if fix.any():
            col = np.where(fix, np.nextafter(prev, np.inf), col)
            times[:, c] = col
        prev = np.where(act, col, prev)

    keep = ranks[None, :] < counts[:, None]
    return times[keep], atoms[keep]


def scan_paths(
    counts: np.ndarray,
    offsets: np.ndarray,
    times: np.ndarray,
    jvecs: np.ndarray,
    partition: np.ndarray,
    slopes: np.ndarray,
    s: float,
):
    n = counts.shape[0]
    d = jvecs.shape[1] if jvecs.size else slopes.shape[2]
    nknots = partition.shape[0] - 1  # interior knots plus horizon
    maxc = int(counts.max()) if n else 0
    width = maxc + nknots

    # merged breakpoint table: events first so that stable sort keeps an
    # event ahead of a coinciding partition knot (the jump belongs to the
    # closing interval)
    t_pad = np.full((n, width), np.inf)
    jid_pad = np.full((n, width), -1, dtype=np.int64)
    if maxc:
        rows = np.repeat(np.arange(n, dtype=np.int64), counts)
        cols = _ragged_ranks(counts)
        t_pad[rows, cols] = times
        jid_pad[rows, cols] = np.arange(times.shape[0], dtype=np.int64)
    t_pad[:, maxc:] = partition[1:][None, :]

    order = np.argsort(t_pad, axis=1, kind="stable")
    t_pad = np.take_along_axis(t_pad, order, axis=1)
    jid_pad = np.take_along_axis(jid_pad, order, axis=1)

    entries = counts + nknots
    cur = np.zeros((n, d))
    now = np.zeros(n)
    seg = np.zeros(n, dtype=np.int64)
    sup = np.zeros(n)
    nseg = slopes.shape[1]

    for c in range(width):
        act = c < entries
        if not act.any():
            break
        b = t_pad[:, c]
        jid = jid_pad[:, c]
        is_ev = jid >= 0
        dt = np.where(act, b - now, 0.0)
        seg_g = np.minimum(seg, nseg - 1)
        slope = slopes[np.arange(n), seg_g]
        for l in range(d):
            cur[:, l] = cur[:, l] - slope[:, l] * dt
        cand = _norm(cur, s, d)
        sup = np.where(act, np.maximum(sup, cand), sup)
        if is_ev.any():
            jv = jvecs[np.maximum(jid, 0)]
            hit = act & is_ev
            for l in range(d):
                cur[:, l] = np.where(hit, cur[:, l] + jv[:, l], cur[:, l])
        cand = _norm(cur, s, d)
        sup = np.where(act, np.maximum(sup, cand), sup)
        seg = np.where(act & ~is_ev, seg + 1, seg)
        now = np.where(act, b, now)

    end = _norm(cur, s, d)
    return sup, end


def _ragged_ranks(counts: np.ndarray) -> np.ndarray:
    """[0..c0-1, 0..c1-1, ...] without a Python loop."""
    total = int(counts.sum())
    ids = np.repeat(np.arange(counts.shape[0], dtype=np.int64), counts)
    pos = np.arange(total, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(counts)))[:-1]
    return pos - starts[ids]


def _norm(v: np.ndarray, s: float, d: int) -> np.ndarray:
    if s == 2.0:
        acc = np.zeros(v.shape[0])
        for l in range(d):
            acc += v[:, l] * v[:, l]
        return np.sqrt(acc)
    if s == 1.0:
        acc = np.zeros(v.shape[0])
        for l in range(d):
            acc += np.abs(v[:, l])
        return acc
    if np.isinf(s):
        acc = np.zeros(v.shape[0])
        for l in range(d):
            acc = np.maximum(acc, np.abs(v[:, l]))
        return acc
    acc = np.zeros(v.shape[0])
    for l in range(d):
        acc += np.abs(v[:, l]) ** s
    return acc ** (1.0 / s)

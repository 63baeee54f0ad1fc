"""Bulk path simulation and exact path functionals.

A campaign fixes (mark measure, horizon, step integrand, norm); the
engine then evaluates any number of paths, each fully determined by
``(seed, path index)``.  Per-chunk work is fanned out to the active
kernel backend; everything that must be bit-reproducible across
backends, chunk sizes and thread counts (tables, jump vectors, interval
scales, reductions) is computed here in shared numpy code with fixed
operation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

POISSON_TAIL = 1e-17
_CHUNK = 1 << 14


def lnorm(v: np.ndarray, s: float) -> np.ndarray:
    """l_s norm over the last axis, s in [1, inf]."""
    v = np.asarray(v, dtype=np.float64)
    d = v.shape[-1]
    if s == 2.0:
        acc = np.zeros(v.shape[:-1])
        for l in range(d):
            acc += v[..., l] * v[..., l]
        return np.sqrt(acc)
    if s == 1.0:
        acc = np.zeros(v.shape[:-1])
        for l in range(d):
            acc += np.abs(v[..., l])
        return acc
    if np.isinf(s):
        acc = np.zeros(v.shape[:-1])
        for l in range(d):
            acc = np.maximum(acc, np.abs(v[..., l]))
        return acc
    if s < 1.0:
        raise ValueError("norm exponent must be >= 1")
    acc = np.zeros(v.shape[:-1])
    for l in range(d):
        acc += np.abs(v[..., l]) ** s
    return acc ** (1.0 / s)


def poisson_cdf_table(lam: float) -> np.ndarray:
    """CDF of Poisson(lam) up to the point where the tail is < 1e-17.

    The last entry is pinned to 1.0 so that CDF inversion of a uniform
    draw in [0, 1) always lands inside the table.
    """
    if lam < 0 or not np.isfinite(lam):
        raise ValueError(f"Poisson rate must be finite and >= 0, got {lam}")
    if lam == 0.0:
        return np.array([1.0])
    if lam > 700.0:
        raise ValueError(f"Poisson rate {lam} too large for pmf table")
    terms = [np.exp(-lam)]
    k = 0
    # past the mode the terms decay geometrically, so term < tail bound
    # implies the remaining mass is below ~2 * term
    while terms[-1] > POISSON_TAIL or k < lam + 10:
        k += 1
        terms.append(terms[-1] * lam / k)
        if k > 200000:
            raise RuntimeError("Poisson table did not converge")
    cdf = np.cumsum(np.asarray(terms))
    cdf = np.minimum(cdf, 1.0)
    cdf[-1] = 1.0
    return cdf


def weight_cdf(weights: np.ndarray) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    cdf = np.cumsum(w)
    cdf = cdf / cdf[-1]
    cdf[-1] = 1.0
    return cdf


@dataclass(frozen=True)
class IntegrandSpec:
    """Named predictable step-integrand forms understood by the engine.

    constant            xi(t, z) = value
    linear_in_mark      xi(t, z) = matrix @ z
    adapted_threshold   xi(t, z) = c_j * (matrix @ z) on interval j with
                        c_j = lo while fewer than ``threshold`` events
                        occurred up to the interval's left endpoint,
                        else hi (predictable by construction)
    matrix_per_interval xi(t, z) = matrices[j] @ z  (operator-valued h)
    table_per_interval  xi on interval j maps atom a to tables[j][a],
                        aligned with the measure's atom order
    """

    kind: str
    value: tuple = ()
    matrix: tuple = ()
    matrices: tuple = ()
    tables: tuple = ()
    threshold: int = 0
    lo: float = 1.0
    hi: float = 1.0
    n_intervals: int = 1

    def scaled(self, c: float) -> "IntegrandSpec":
        """Integrand multiplied by a scalar (used for homogeneity tests)."""
        if self.kind == "constant":
            return IntegrandSpec(
                "constant",
                value=tuple(c * x for x in self.value),
                n_intervals=self.n_intervals,
            )
        if self.kind == "linear_in_mark":
            return IntegrandSpec(
                "linear_in_mark",
                matrix=tuple(tuple(c * x for x in row) for row in self.matrix),
                n_intervals=self.n_intervals,
            )
        raise ValueError(f"cannot scale integrand kind {self.kind}")


@dataclass(frozen=True)
class Campaign:
    atoms: np.ndarray  # (A, dmark)
    weights: np.ndarray  # (A,)
    wcdf: np.ndarray
    mass: float
    horizon: float
    partition: np.ndarray  # (J+1,) with [0] = 0 and [-1] = horizon
    values: np.ndarray  # (J, A, d) deterministic integrand table
    slope_base: np.ndarray  # (J, d) sum_a values * w
    vnorm: np.ndarray  # (J, A) |values|_s
    s: float
    d: int
    adapted: bool
    threshold: int
    lo: float
    hi: float
    count_cdf: np.ndarray = field(repr=False)


def compile_campaign(
    atoms: np.ndarray,
    weights: np.ndarray,
    horizon: float,
    spec: IntegrandSpec,
    s: float = 2.0,
) -> Campaign:
    atoms = np.atleast_2d(np.asarray(atoms, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if atoms.shape[0] != weights.shape[0]:
        raise ValueError("atoms and weights length mismatch")
    if atoms.shape[0] and (weights <= 0).any():
        raise ValueError("mark weights must be positive")
    dmark = atoms.shape[1] if atoms.size else 1
    mass = float(weights.sum()) if weights.size else 0.0

    if spec.kind == "matrix_per_interval":
        nj = len(spec.matrices)
    elif spec.kind == "table_per_interval":
        nj = len(spec.tables)
    else:
        nj = spec.n_intervals
    if nj < 1:
        raise ValueError("integrand needs at least one interval")
    partition = np.linspace(0.0, horizon, nj + 1)

    amat = atoms if atoms.size else np.zeros((0, dmark))
    A = amat.shape[0]
    if spec.kind == "constant":
        vec = np.asarray(spec.value, dtype=np.float64)
        d = vec.shape[0]
        values = np.broadcast_to(vec, (nj, A, d)).copy()
        adapted = False
    elif spec.kind == "linear_in_mark":
        mat = np.asarray(spec.matrix, dtype=np.float64)
        values = _apply_matrix(mat, amat, nj)
        d = mat.shape[0]
        adapted = False
    elif spec.kind == "adapted_threshold":
        mat = (
            np.asarray(spec.matrix, dtype=np.float64)
            if spec.matrix
            else np.eye(dmark)
        )
        values = _apply_matrix(mat, amat, nj)
        d = mat.shape[0]
        adapted = True
    elif spec.kind == "matrix_per_interval":
        mats = [np.asarray(m, dtype=np.float64) for m in spec.matrices]
        d = mats[0].shape[0]
        values = np.zeros((nj, A, d))
        for j, m in enumerate(mats):
            values[j] = _apply_matrix(m, amat, 1)[0]
        adapted = False
    elif spec.kind == "table_per_interval":
        values = np.asarray(spec.tables, dtype=np.float64)
        if values.ndim == 2:  # scalar entries for d = 1
            values = values[:, :, None]
        if values.shape[:2] != (nj, A):
            raise ValueError(
                f"table shape {values.shape[:2]} does not match "
                f"({nj} intervals, {A} atoms)"
            )
        d = values.shape[2]
        adapted = False
    else:
        raise ValueError(f"unknown integrand kind {spec.kind!r}")

    slope_base = np.zeros((nj, d))
    for a in range(A):
        slope_base += values[:, a, :] * weights[a]
    vnorm = lnorm(values, s) if A else np.zeros((nj, 0))

    return Campaign(
        atoms=amat,
        weights=weights,
        wcdf=weight_cdf(weights) if A else np.array([1.0]),
        mass=mass,
        horizon=float(horizon),
        partition=partition,
        values=values,
        slope_base=slope_base,
        vnorm=vnorm,
        s=float(s),
        d=d,
        adapted=adapted,
        threshold=spec.threshold,
        lo=spec.lo,
        hi=spec.hi,
        count_cdf=poisson_cdf_table(mass * horizon),
    )


def _apply_matrix(mat: np.ndarray, atoms: np.ndarray, nj: int) -> np.ndarray:
    mat = np.atleast_2d(mat)
    d, dm = mat.shape
    if atoms.shape[0] and atoms.shape[1] != dm:
        raise ValueError("matrix column count does not match mark dimension")
    out = np.zeros((atoms.shape[0], d))
    for r in range(d):
        for c in range(dm):
            out[:, r] += mat[r, c] * atoms[:, c]
    return np.broadcast_to(out, (nj,) + out.shape).copy()


@dataclass
class PathStats:
    """Per-path functionals for one campaign evaluation."""

    counts: np.ndarray  # (N,) event counts
    sup: np.ndarray  # (N,) sup_{[0,T]} |I|_s
    end: np.ndarray  # (N,) |I(T)|_s
    jump_pows: np.ndarray  # (N, L) sum over events of |xi|^p_l
    nu_ints: np.ndarray  # (N, L) int_0^T int |xi|^p_l dnu ds
    exponents: tuple
    adapted: bool


def evaluate(
    campaign: Campaign,
    seed: int,
    n_paths: int,
    exponents=(),
    chunk: int = _CHUNK,
) -> PathStats:
    exps = tuple(float(p) for p in exponents)
    L = len(exps)
    nJ = campaign.partition.shape[0] - 1
    K = kernels.active_backend()

    dt = np.diff(campaign.partition)
    A = campaign.atoms.shape[0]
    nu_base = np.zeros((nJ, L))
    for l, p in enumerate(exps):
        for j in range(nJ):
            acc = 0.0
            for a in range(A):
                acc += campaign.vnorm[j, a] ** p * campaign.weights[a]
            nu_base[j, l] = dt[j] * acc

    counts = np.empty(n_paths, dtype=np.int64)
    sup = np.empty(n_paths)
    end = np.empty(n_paths)
    jump_pows = np.zeros((n_paths, L))
    nu_ints = np.zeros((n_paths, L))

    for c0 in range(0, max(n_paths, 1), chunk):
        nc = min(chunk, n_paths - c0)
        if nc <= 0:
            break
        cts = K.sample_counts(seed, c0, nc, campaign.count_cdf)
        offsets = np.concatenate(([0], np.cumsum(cts)))
        times, atom_ix = K.sample_events(
            seed, c0, cts, campaign.horizon, campaign.wcdf
        )
        pid = np.repeat(np.arange(nc, dtype=np.int64), cts)
        seg_e = np.searchsorted(campaign.partition, times, side="left") - 1
        np.clip(seg_e, 0, nJ - 1, out=seg_e)

        if campaign.adapted:
            hist = np.zeros((nc, nJ))
            np.add.at(hist, (pid, seg_e), 1.0)
            before = np.zeros((nc, nJ))
            before[:, 1:] = np.cumsum(hist, axis=1)[:, :-1]
            scale = np.where(before < campaign.threshold, campaign.lo, campaign.hi)
        else:
            scale = np.ones((nc, nJ))

        if times.size:
            scale_e = scale[pid, seg_e]
            jvecs = campaign.values[seg_e, atom_ix] * scale_e[:, None]
            jn = campaign.vnorm[seg_e, atom_ix] * scale_e
        else:
            jvecs = np.zeros((0, campaign.d))
            jn = np.zeros(0)
        slopes = campaign.slope_base[None, :, :] * scale[:, :, None]

        sp, en = K.scan_paths(
            cts, offsets, times, jvecs, campaign.partition, slopes, campaign.s
        )

        counts[c0 : c0 + nc] = cts
        sup[c0 : c0 + nc] = sp
        end[c0 : c0 + nc] = en
        for l, p in enumerate(exps):
            jp = np.zeros(nc)
            if jn.size:
                np.add.at(jp, pid, jn**p)
            jump_pows[c0 : c0 + nc, l] = jp
            nu = np.zeros(nc)
            for j in range(nJ):
                nu += scale[:, j] ** p * nu_base[j, l]
            nu_ints[c0 : c0 + nc, l] = nu

    return PathStats(
        counts=counts,
        sup=sup,
        end=end,
        jump_pows=jump_pows,
        nu_ints=nu_ints,
        exponents=exps,
        adapted=campaign.adapted,
    )


def sample_batch(seed: int, start: int, n: int, mass: float, horizon: float, wcdf):
    """Raw event batch: (counts, offsets, times, atom indices)."""
    K = kernels.active_backend()
    cdf = poisson_cdf_table(mass * horizon)
    counts = K.sample_counts(seed, start, n, cdf)
    offsets = np.concatenate(([0], np.cumsum(counts)))
    times, atoms = K.sample_events(seed, start, counts, horizon, wcdf)
    return counts, offsets, times, atoms

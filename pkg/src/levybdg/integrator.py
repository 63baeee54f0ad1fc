"""Stochastic integrals of predictable step processes, one path at a time.

The integral of a step integrand against the compensated measure is the
jump sum minus a compensator that is linear in time on each partition
cell, so the path is piecewise linear between breakpoints and every
functional here (values, supremum, jump sums) is computed exactly.

Predictability is structural: the mark map for the interval
(t_{j-1}, t_j] is produced by a builder that receives only the event
path restricted to [0, t_{j-1}].
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .engine import IntegrandSpec, lnorm
from .prm import MarkMeasure, PRMPath


class MarkMap:
    """Map from marks to integrand values on one partition interval."""

    def value(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ConstantMap(MarkMap):
    def __init__(self, vec):
        self.vec = np.atleast_1d(np.asarray(vec, dtype=np.float64))

    def value(self, z):
        return self.vec


class LinearMap(MarkMap):
    def __init__(self, matrix, scale: float = 1.0):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        self.scale = float(scale)

    def value(self, z):
        return self.scale * (self.matrix @ np.asarray(z, dtype=np.float64))


class TableMap(MarkMap):
    """Finite atom table; marks outside the table are rejected."""

    def __init__(self, table: dict):
        self.table = {
            tuple(np.atleast_1d(k).tolist()): np.atleast_1d(np.asarray(v, dtype=np.float64))
            for k, v in table.items()
        }

    def value(self, z):
        key = tuple(np.atleast_1d(z).tolist())
        if key not in self.table:
            raise KeyError(key)
        return self.table[key]


@dataclass(frozen=True)
class StepIntegrand:
    """Partition plus one mark-map builder per interval.

    ``builder(j, past)`` receives the interval index and the event path
    truncated to the interval's left endpoint and returns a MarkMap;
    this is what makes the integrand predictable by construction.
    """

    partition: np.ndarray  # (J+1,) knots, [0] == 0
    builder: object
    d: int

    @staticmethod
    def _check_partition(partition) -> np.ndarray:
        p = np.asarray(partition, dtype=np.float64)
        if p[0] != 0.0 or (np.diff(p) <= 0).any():
            raise ValueError("partition must be strictly increasing from 0")
        return p

    @staticmethod
    def constant(value, partition) -> "StepIntegrand":
        vec = np.atleast_1d(np.asarray(value, dtype=np.float64))
        p = StepIntegrand._check_partition(partition)
        return StepIntegrand(p, lambda j, past: ConstantMap(vec), vec.shape[0])

    @staticmethod
    def linear_in_mark(matrix, partition) -> "StepIntegrand":
        mat = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        p = StepIntegrand._check_partition(partition)
        return StepIntegrand(p, lambda j, past: LinearMap(mat), mat.shape[0])

    @staticmethod
    def matrices(mats, partition) -> "StepIntegrand":
        ms = [np.atleast_2d(np.asarray(m, dtype=np.float64)) for m in mats]
        p = StepIntegrand._check_partition(partition)
        if len(ms) != p.shape[0] - 1:
            raise ValueError("need one matrix per interval")
        return StepIntegrand(p, lambda j, past: LinearMap(ms[j]), ms[0].shape[0])

    @staticmethod
    def adapted_threshold(
        threshold: int, lo: float, hi: float, partition, matrix=None, dmark: int = 1
    ) -> "StepIntegrand":
        p = StepIntegrand._check_partition(partition)
        mat = np.eye(dmark) if matrix is None else np.atleast_2d(np.asarray(matrix))

        def build(j, past: PRMPath):
            scale = lo if past.count < threshold else hi
            return LinearMap(mat, scale=scale)

        return StepIntegrand(p, build, mat.shape[0])

    @staticmethod
    def from_table(tables, partition) -> "StepIntegrand":
        p = StepIntegrand._check_partition(partition)
        maps = [TableMap(t) for t in tables]
        if len(maps) != p.shape[0] - 1:
            raise ValueError("need one table per interval")
        d = next(iter(maps[0].table.values())).shape[0]
        return StepIntegrand(p, lambda j, past: maps[j], d)

    @staticmethod
    def from_spec(
        spec: IntegrandSpec, horizon: float, dmark: int = 1, atoms=None
    ) -> "StepIntegrand":
        """Object-level twin of the engine's compiled integrand forms."""
        if spec.kind == "matrix_per_interval":
            knots = np.linspace(0.0, horizon, len(spec.matrices) + 1)
            return StepIntegrand.matrices(spec.matrices, knots)
        if spec.kind == "table_per_interval":
            if atoms is None:
                raise ValueError("table integrands need the measure atoms")
            knots = np.linspace(0.0, horizon, len(spec.tables) + 1)
            atoms = np.atleast_2d(np.asarray(atoms, dtype=np.float64))
            tables = [
                {tuple(z.tolist()): np.atleast_1d(row[a]) for a, z in enumerate(atoms)}
                for row in np.asarray(spec.tables, dtype=np.float64)
            ]
            return StepIntegrand.from_table(tables, knots)
        knots = np.linspace(0.0, horizon, spec.n_intervals + 1)
        if spec.kind == "constant":
            return StepIntegrand.constant(spec.value, knots)
        if spec.kind == "linear_in_mark":
            return StepIntegrand.linear_in_mark(spec.matrix, knots)
        if spec.kind == "adapted_threshold":
            mat = spec.matrix if spec.matrix else None
            return StepIntegrand.adapted_threshold(
                spec.threshold, spec.lo, spec.hi, knots, matrix=mat, dmark=dmark
            )
        raise ValueError(f"unknown integrand kind {spec.kind!r}")

    def bound_maps(self, path: PRMPath) -> list:
        """One concrete MarkMap per interval, built from path prefixes."""
        return [
            self.builder(j, path.restrict(self.partition[j]))
            for j in range(self.partition.shape[0] - 1)
        ]


@dataclass(frozen=True)
class IntegralPath:
    """Cadlag piecewise-linear path of the compensated integral."""

    horizon: float
    times: np.ndarray  # (B,) breakpoints, starting at 0
    left: np.ndarray  # (B, d) limits from the left
    right: np.ndarray  # (B, d) values (right limits)
    slopes: np.ndarray  # (B, d) path slope on [times[k], times[k+1])

    @property
    def d(self) -> int:
        return self.right.shape[1]

    def value(self, t: float) -> np.ndarray:
        if t < 0 or t > self.horizon:
            raise ValueError("time outside [0, horizon]")
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.right[k] + self.slopes[k] * (t - self.times[k])

    def jumps(self) -> list:
        out = []
        for k in range(self.times.shape[0]):
            dz = self.right[k] - self.left[k]
            if np.any(dz != 0.0):
                out.append((float(self.times[k]), dz.copy()))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        d = self.d
        cols = [f"left_{i+1}" for i in range(d)] + [f"right_{i+1}" for i in range(d)]
        buf.write("t," + ",".join(cols) + "\n")
        for k in range(self.times.shape[0]):
            vals = [repr(float(v)) for v in self.left[k]] + [
                repr(float(v)) for v in self.right[k]
            ]
            buf.write(f"{self.times[k]!r}," + ",".join(vals) + "\n")
        return buf.getvalue()


def integrate(xi: StepIntegrand, path: PRMPath, nu: MarkMeasure) -> IntegralPath:
    """Exact path of the compensated integral: jump sum minus drift.

    The compensator slope on interval j is the nu-average of the mark
    map, closed form per cell.  Marks outside a table-kind map are
    rejected with the offending (t, z).
    """
    if nu.kind != "atoms":
        raise NotImplementedError("integration requires an atom measure")
    T = path.horizon
    knots = xi.partition
    if knots[-1] > T:
        raise ValueError("partition extends past the path horizon")
    maps = xi.bound_maps(path)
    J = len(maps)
    d = xi.d

    slope = np.zeros((J, d))
    for j, mp in enumerate(maps):
        for z, w in zip(nu.atoms, nu.weights):
            slope[j] += w * np.asarray(mp.value(z), dtype=np.float64)

    # merged breakpoints: t=0, events, interior knots, horizon
    ev_jump = np.zeros((path.count, d))
    for k in range(path.count):
        j = int(np.searchsorted(knots, path.times[k], side="left")) - 1
        if 0 <= j < J:
            try:
                ev_jump[k] = maps[j].value(path.marks[k])
            except KeyError:
                raise ValueError(
                    f"mark {path.marks[k]} at t={path.times[k]} outside integrand table"
                ) from None
        # events after the last knot fall where the integrand is 0

    def cell_slope(t: float) -> np.ndarray:
        # path slope of I on the cell whose right end is t (integrand is
        # 0 past its last knot, so the path is flat there)
        if t > knots[-1]:
            return np.zeros(d)
        j = min(max(int(np.searchsorted(knots, t, side="left")) - 1, 0), J - 1)
        return -slope[j]

    bk = [0.0]
    jump_at = [np.zeros(d)]
    srcs = sorted(
        [(float(t), k) for k, t in enumerate(path.times)]
        + [(float(t), -1) for t in knots[1:]]
        + ([] if knots[-1] == T else [(T, -1)]),
        key=lambda te: (te[0], 0 if te[1] >= 0 else 1),
    )
    for t, k in srcs:
        if bk[-1] == t and k < 0:
            continue  # knot coinciding with an event adds no breakpoint
        bk.append(t)
        jump_at.append(ev_jump[k] if k >= 0 else np.zeros(d))

    B = len(bk)
    times = np.asarray(bk)
    left = np.zeros((B, d))
    right = np.zeros((B, d))
    slopes_out = np.zeros((B, d))
    cur = np.zeros(d)
    for i in range(1, B):
        cur = cur + cell_slope(times[i]) * (times[i] - times[i - 1])
        left[i] = cur
        cur = cur + jump_at[i]
        right[i] = cur
    for i in range(B - 1):
        slopes_out[i] = cell_slope(times[i + 1])
    return IntegralPath(
        horizon=T, times=times, left=left, right=right, slopes=slopes_out
    )


def sup_norm(path: IntegralPath, t: float, s: float) -> float:
    """Exact sup of |I(u)|_s over [0, t]; attained at a breakpoint limit."""
    if t < 0 or t > path.horizon:
        raise ValueError("time outside [0, horizon]")
    keep = path.times <= t
    best = 0.0
    if keep.any():
        best = max(
            float(lnorm(path.left[keep], s).max()),
            float(lnorm(path.right[keep], s).max()),
        )
    return max(best, float(lnorm(path.value(t)[None, :], s)[0]))


def jump_power_sum(
    xi: StepIntegrand, path: PRMPath, p: float, t: float, s: float = 2.0
) -> float:
    """Pathwise sum over events up to t of |xi(t_i, z_i)|^p, exact."""
    maps = xi.bound_maps(path)
    knots = xi.partition
    total = 0.0
    for k in range(path.count):
        tk = path.times[k]
        if tk > t:
            break
        j = int(np.searchsorted(knots, tk, side="left")) - 1
        if 0 <= j < len(maps):
            v = np.asarray(maps[j].value(path.marks[k]), dtype=np.float64)
            total += float(lnorm(v[None, :], s)[0]) ** p
    return total


def nu_power_integral(
    xi: StepIntegrand,
    nu: MarkMeasure,
    p: float,
    t: float,
    path: PRMPath | None = None,
    s: float = 2.0,
) -> float:
    """int_0^t int |xi|^p dnu ds, closed form over intervals and atoms.

    Adapted integrands need the path their maps are built from.
    """
    if nu.kind != "atoms":
        raise NotImplementedError("needs an atom measure")
    if path is None:
        path = PRMPath(
            horizon=float(xi.partition[-1]),
            times=np.empty(0),
            marks=np.empty((0, nu.d)),
            seed=0,
            index=0,
        )
    maps = xi.bound_maps(path)
    knots = xi.partition
    total = 0.0
    for j, mp in enumerate(maps):
        dt = min(knots[j + 1], t) - min(knots[j], t)
        if dt <= 0:
            continue
        acc = 0.0
        for z, w in zip(nu.atoms, nu.weights):
            v = np.asarray(mp.value(z), dtype=np.float64)
            acc += w * float(lnorm(v[None, :], s)[0]) ** p
        total += dt * acc
    return total

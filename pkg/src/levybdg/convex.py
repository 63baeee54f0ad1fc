"""Young-conjugate convex function machinery.

A convex increasing function with F(0) = 0 is represented through its
density: F(t) = int_0^t f(s) ds with f nondecreasing.  Two kinds exist:

* ``power``: F(t) = scale * t**p with p >= 1 (closed forms throughout);
* ``table``: f piecewise linear on knots ``t`` with values ``phi``.
  Repeated knots encode jump discontinuities of the density, which is
  exactly what conjugation produces from flat segments, so the class is
  closed under Young conjugation with no approximation: the generalized
  inverse of a nondecreasing polyline is the coordinate-swapped
  polyline.

All integrals are per-segment closed forms (trapezoid-exact for a
piecewise-linear density); supremum-type constants over a continuum are
reported as grid suprema on a dense geometric grid, except for powers
where they are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_POINTS_PER_DECADE = 10_000
_GRID_DECADES = 6


@dataclass(frozen=True)
class ConvexFunction:
    """Convex increasing F with F(0) = 0, held via its density."""

    kind: str  # "power" | "table"
    p: float = 0.0
    scale: float = 1.0
    t: np.ndarray | None = None  # knots, nondecreasing, t[0] == 0
    f: np.ndarray | None = None  # density values at knots, nondecreasing
    cum: np.ndarray | None = None  # exact integral of the density up to t[k]

    # -- construction -------------------------------------------------

    @staticmethod
    def power(p: float, scale: float = 1.0) -> "ConvexFunction":
        if p < 1.0:
            raise ValueError(f"power exponent must be >= 1, got {p}")
        if scale <= 0.0:
            raise ValueError("scale must be positive")
        return ConvexFunction(kind="power", p=float(p), scale=float(scale))

    @staticmethod
    def table(t, f) -> "ConvexFunction":
        t = np.asarray(t, dtype=np.float64)
        f = np.asarray(f, dtype=np.float64)
        if t.ndim != 1 or t.shape != f.shape or t.shape[0] < 2:
            raise ValueError("table needs matching 1-d knot and density arrays")
        if t[0] != 0.0:
            raise ValueError("knot grid must start at 0")
        if not (np.isfinite(t).all() and np.isfinite(f).all()):
            raise ValueError("table entries must be finite")
        if (np.diff(t) < 0).any():
            raise ValueError("knots must be nondecreasing")
        if (np.diff(f) < 0).any() or f[0] < 0:
            raise ValueError("density values must be nonnegative and nondecreasing")
        keep = np.ones(t.shape[0], dtype=bool)
        keep[1:] = (np.diff(t) > 0) | (np.diff(f) > 0)
        t, f = t[keep], f[keep]
        seg = 0.5 * (f[:-1] + f[1:]) * np.diff(t)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        return ConvexFunction(kind="table", t=t, f=f, cum=cum)

    # -- evaluation ---------------------------------------------------

    @property
    def t_end(self) -> float:
        """Right end of the valid argument range (inf for powers)."""
        return np.inf if self.kind == "power" else float(self.t[-1])

    def value(self, x):
        """F(x); array friendly."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "power":
            return self.scale * x**self.p
        self._check_range(x)
        i, hit = self._locate(x)
        out = np.empty_like(x)
        out[hit] = self.cum[i[hit]]
        m = ~hit
        if m.any():
            k = i[m] - 1
            dt = self.t[k + 1] - self.t[k]
            h = x[m] - self.t[k]
            df = self.f[k + 1] - self.f[k]
            out[m] = self.cum[k] + self.f[k] * h + 0.5 * df * h * h / dt
        return out if out.ndim else float(out)

    def density(self, x):
        """f(x); left-continuous at jump knots (inf convention)."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "power":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = self.scale * self.p * x ** (self.p - 1.0)
            if self.p == 1.0:
                out = np.broadcast_to(np.float64(self.scale), x.shape).copy()
            return out if out.ndim else float(out)
        self._check_range(x)
        i, hit = self._locate(x)
        out = np.empty_like(x)
        out[hit] = self.f[i[hit]]
        m = ~hit
        if m.any():
            k = i[m] - 1
            dt = self.t[k + 1] - self.t[k]
            w = (x[m] - self.t[k]) / dt
            out[m] = self.f[k] + (self.f[k + 1] - self.f[k]) * w
        return out if out.ndim else float(out)

    def t_dphi(self, x) -> float:
        """Stieltjes integral int_0^x t df(t) (exact)."""
        if self.kind == "power":
            if self.p == 1.0:
                return 0.0
            return self.scale * (self.p - 1.0) * float(x) ** self.p
        x = float(x)
        self._check_range(np.asarray(x))
        total = 0.0
        for k in range(self.t.shape[0] - 1):
            a, b = self.t[k], self.t[k + 1]
            if a >= x and b > x:
                break
            df = self.f[k + 1] - self.f[k]
            if df == 0.0:
                continue
            if b == a:  # density jump at a
                if a <= x:
                    total += a * df
                continue
            hi = min(b, x)
            if hi > a:
                slope = df / (b - a)
                total += 0.5 * slope * (hi * hi - a * a)
        return total

    def _check_range(self, x) -> None:
        if (x < 0).any() or (x > self.t[-1]).any():
            raise ValueError(
                f"argument outside tabulated range [0, {self.t[-1]}]"
            )

    def _locate(self, x):
        i = np.searchsorted(self.t, x, side="left")
        hit = (i < self.t.shape[0]) & (np.take(self.t, np.minimum(i, self.t.shape[0] - 1)) == x)
        return i, hit

    # -- config -------------------------------------------------------

    def to_config(self) -> dict:
        if self.kind == "power":
            cfg = {"kind": "power", "p": self.p}
            if self.scale != 1.0:
                cfg["scale"] = self.scale
            return cfg
        return {"kind": "table", "t": self.t.tolist(), "phi": self.f.tolist()}

    @staticmethod
    def from_config(cfg: dict) -> "ConvexFunction":
        kind = cfg.get("kind")
        if kind == "power":
            return ConvexFunction.power(cfg["p"], cfg.get("scale", 1.0))
        if kind == "table":
            return ConvexFunction.table(cfg["t"], cfg["phi"])
        raise ValueError(f"unknown convex function kind {kind!r}")


@dataclass(frozen=True)
class ConjugatePair:
    """A function, its Young conjugate, and their supremum constants."""

    primal: ConvexFunction
    dual: ConvexFunction
    c_star_primal: float
    c_star_dual: float


def power_phi(p: float, scale: float = 1.0) -> ConvexFunction:
    """Canonical power instance F(t) = scale * t**p, p >= 1."""
    return ConvexFunction.power(p, scale)


def conjugate(f: ConvexFunction) -> ConjugatePair:
    """Build the Young conjugate via the generalized inverse of the density.

    At flat density segments the inverse takes the infimum endpoint
    (left-continuous choice); flats and jumps swap roles, so tables stay
    exact.  ``power`` with p > 1 conjugates to a scaled power in closed
    form; p = 1 yields the degenerate flat conjugate on [0, scale].
    """
    if f.kind == "power":
        if f.p > 1.0:
            q = f.p / (f.p - 1.0)
            b = (f.scale * f.p) ** (-1.0 / (f.p - 1.0)) / q
            dual = ConvexFunction.power(q, b)
        else:
            dual = ConvexFunction.table([0.0, f.scale], [0.0, 0.0])
    else:
        pts_s = [0.0]
        pts_g = [0.0]
        if f.f[0] > 0.0:
            pts_s.append(float(f.f[0]))
            pts_g.append(0.0)
        for k in range(1, f.t.shape[0]):
            pts_s.append(float(f.f[k]))
            pts_g.append(float(f.t[k]))
        dual = ConvexFunction.table(pts_s, pts_g)
    return ConjugatePair(
        primal=f,
        dual=dual,
        c_star_primal=_c_star_or_nan(f),
        c_star_dual=_c_star_or_nan(dual),
    )


def _c_star_or_nan(f: ConvexFunction) -> float:
    # degenerate conjugates (F identically 0 near 0) have no finite c*
    try:
        return c_star(f, _default_tmax(f))
    except ValueError:
        return np.nan


def _default_tmax(f: ConvexFunction) -> float:
    return 10.0 if f.kind == "power" else f.t_end


def _geometric_grid(t_max: float) -> np.ndarray:
    n = _GRID_DECADES * GRID_POINTS_PER_DECADE
    return np.geomspace(t_max * 10.0**-_GRID_DECADES, t_max, n)


def growth_constant(f: ConvexFunction, t_max: float) -> float:
    """Grid supremum of F(2 lam) / F(lam) on (0, t_max]; 2**p for powers.

    For tables the ratio is only defined while 2 lam stays inside the
    tabulated range, so the scan stops at min(t_max, t_end / 2).  The
    value is a lower bound for the true supremum (grid documented in the
    module header); it is exact for powers.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if f.kind == "power":
        return 2.0**f.p
    lam_max = min(t_max, f.t_end / 2.0)
    grid = np.concatenate(
        (_geometric_grid(lam_max), f.t[(f.t > 0) & (f.t <= lam_max)])
    )
    num = f.value(2.0 * grid)
    den = f.value(grid)
    ok = den > 0.0
    if (~ok & (num > 0.0)).any():
        return np.inf
    if not ok.any():
        return np.inf
    return float(np.max(num[ok] / den[ok]))


def c_star(f: ConvexFunction, t_max: float | None = None) -> float:
    """Grid supremum of u f(u) / F(u) on (0, t_max]; exactly p for powers."""
    if t_max is None:
        t_max = _default_tmax(f)
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if f.kind == "power":
        return float(f.p)
    lam_max = min(t_max, f.t_end)
    grid = np.concatenate(
        (_geometric_grid(lam_max), f.t[(f.t > 0) & (f.t <= lam_max)])
    )
    val = f.value(grid)
    if (val == 0.0).any():
        raise ValueError("degenerate table: F vanishes at positive arguments")
    return float(np.max(grid * f.density(grid) / val))


def check_identities(pair: ConjugatePair, grid) -> dict:
    """Max violations of the conjugate-pair identities over a grid.

    Violations are data, not errors.  The product bound F(ua) <= a F(a)
    appears dimensionally off; the standard convexity consequence
    F(a u) <= a F(u), 0 < a <= 1, is checked instead and the report
    carries a flag saying so.
    """
    g = np.asarray(grid, dtype=np.float64)
    g = g[(g > 0) & (g <= min(pair.primal.t_end, _default_tmax(pair.primal)))]
    if g.size == 0:
        raise ValueError("grid has no points inside the valid range")
    F, G = pair.primal, pair.dual
    cs = pair.c_star_primal

    phi_g = F.density(g)
    v_dual = np.minimum(phi_g, G.t_end)
    product = np.max(np.abs(g * phi_g - (F.value(g) + G.value(v_dual))))

    vg = g[g <= G.t_end]
    young = 0.0
    for u in g:
        if vg.size:
            young = max(young, np.max(u * vg - (F.value(u) + G.value(vg))))

    a_grid = np.linspace(0.05, 1.0, 20)
    unit_scaling = 0.0
    for a in a_grid:
        unit_scaling = max(unit_scaling, np.max(F.value(a * g) - a * F.value(g)))

    max_subadd = 0.0
    for u in g:
        max_subadd = max(
            max_subadd, np.max(F.value(np.maximum(u, g)) - (F.value(u) + F.value(g)))
        )

    r_grid = np.array([1.0, 1.5, 2.0, 3.0, 5.0])
    power_scaling = 0.0
    for r in r_grid:
        rg = g[r * g <= F.t_end]
        if rg.size:
            power_scaling = max(
                power_scaling, np.max(F.value(r * rg) - r**cs * F.value(rg))
            )

    tg = g[g <= G.t_end]
    dual_dom = 0.0
    if tg.size:
        psi_t = G.density(tg)
        psi_t = np.minimum(psi_t, F.t_end)
        dual_dom = float(np.max(G.value(tg) - (cs - 1.0) * F.value(psi_t)))

    return {
        "density_product_identity": float(product),
        "young_gap": float(max(young, 0.0)),
        "unit_scaling": float(max(unit_scaling, 0.0)),
        "unit_scaling_corrected_form": True,
        "max_subadditivity": float(max(max_subadd, 0.0)),
        "power_scaling": float(max(power_scaling, 0.0)),
        "dual_domination": float(max(dual_dom, 0.0)),
    }

"""Explicit constants and Monte Carlo verdicts for the moment bounds.

Three bounds are verified for the compensated-measure integral I:

  (i)   E sup |I|^q  against  (int int E|xi|^p dnu ds)^(q/p),  0 < q <= p
  (ii)  E sup |I|^r  against  E (int int |xi|^p deta)^(r/p),   r >= p
  (iii) E sup |I|^(p^n)  against a weighted sum of nu-integral powers

plus the pure-jump corollary with Delta X = h Delta L.  Left sides are
seeded Monte Carlo means with standard errors; right-side nu-integrals
are exact for deterministic integrands.  Verdicts are noise-aware:
pass requires lhs <= C rhs + 3 (se_lhs + C se_rhs).

The stated constants can vanish (the (m0 - 1) factor at r = p, and
bar-C factors through m(i) = 1); the formulas are evaluated verbatim,
zero factors raise a degeneracy flag, and the measured minimal constant
is always reported so a vanished bound is never silently repaired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .engine import IntegrandSpec
from .prm import LevyTriplet, MarkMeasure

_M0_TOL = 1e-12


@dataclass(frozen=True)
class BanachModel:
    """Finite-dimensional l_s model of the ambient space.

    c_p = 1 is exact for the Euclidean case s = 2, p = 2; other
    combinations need a user-supplied type constant.
    """

    d: int = 1
    s: float = 2.0
    p: float = 2.0
    c_p: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise ValueError("martingale-type exponent p must lie in (1, 2]")
        if self.c_p <= 0:
            raise ValueError("type constant must be positive")
        if self.s < 1.0:
            raise ValueError("norm exponent must be >= 1")


def compute_m0(p: float, r: float) -> int:
    """Smallest n >= 1 with p - n p / r <= 1."""
    if not 1.0 < p <= 2.0:
        raise ValueError("p must lie in (1, 2]")
    if r < p:
        raise ValueError("r must be >= p")
    n = 1
    while p - n * p / r > 1.0 + _M0_TOL:
        n += 1
        if n > 10**6:
            raise RuntimeError("m0 search did not terminate")
    return n


def m_sequence(p: float, i: int) -> int:
    """m(i) = floor(p^(i-1) (p-1)) + 1."""
    return int(math.floor(p ** (i - 1) * (p - 1.0) + _M0_TOL)) + 1


@dataclass(frozen=True)
class ConstantsTable:
    p: float
    r: float
    n: int
    c_p: float
    m0: int
    const_i: float
    const_ii: float
    const_ii_degenerate: bool
    m_values: tuple  # m(0) .. m(n)
    level_r: tuple  # exponent r used at recursion level i = 1..n
    bar_c_statement: tuple  # bar C(1) .. bar C(n)
    bar_c_proof: tuple
    degenerate_statement: tuple
    degenerate_proof: tuple
    notes: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "r": self.r,
            "n": self.n,
            "c_p": self.c_p,
            "m0": self.m0,
            "const_i": self.const_i,
            "const_ii": self.const_ii,
            "const_ii_degenerate": self.const_ii_degenerate,
            "m_values": list(self.m_values),
            "level_r": list(self.level_r),
            "bar_c_statement": list(self.bar_c_statement),
            "bar_c_proof": list(self.bar_c_proof),
            "degenerate_statement": list(self.degenerate_statement),
            "degenerate_proof": list(self.degenerate_proof),
            "notes": list(self.notes),
        }


def constants(model: BanachModel, r: float, n: int = 1) -> ConstantsTable:
    """Evaluate the stated constants for all three bounds.

    The bar-C recursion is reported in two variants that circulate for
    this bound: one carries the factor (m(n-i) - 1)^((p-1) r / p), the
    other (m0 - 1)^((p-1) r / p) * m(n-i).  The exponent r at recursion
    level i is not otherwise pinned down; it is taken as p^(n-i+1), the
    exponent at which bound (ii) is invoked at that level.
    """
    p, c_p = model.p, model.c_p
    if n < 1:
        raise ValueError("n must be >= 1")
    m0 = compute_m0(p, r)
    const_i = c_p * 2.0 ** (2.0 - p)
    fac_ii = float(m0 - 1) ** ((p - 1.0) * r / p)
    const_ii = c_p * 2.0 ** (r * (2.0 + 1.0 / p)) * fac_ii
    m_vals = tuple(m_sequence(p, i) for i in range(n + 1))

    bc_s, bc_p = [1.0], [1.0]
    deg_s, deg_p = [], []
    level_r = []
    for i in range(1, n + 1):
        r_i = p ** (n - i + 1)
        level_r.append(r_i)
        expo = (p - 1.0) * r_i / p
        pow2 = 2.0 ** (p ** (n - i + 1) + 2.0 * p ** (n - 1))
        m_ni = m_vals[n - i]
        bc_s.append(bc_s[-1] * pow2 * float(m_ni - 1) ** expo)
        deg_s.append(m_ni == 1)
        m0_i = compute_m0(p, r_i)
        bc_p.append(bc_p[-1] * pow2 * float(m0_i - 1) ** expo * m_ni)
        deg_p.append(m0_i == 1)
    notes = (
        "bar-C level exponent resolved as r = p^(n-i+1)",
        "floor assumed in m(i) = [p^(i-1)(p-1)] + 1",
    )
    return ConstantsTable(
        p=p,
        r=r,
        n=n,
        c_p=c_p,
        m0=m0,
        const_i=const_i,
        const_ii=const_ii,
        const_ii_degenerate=m0 == 1,
        m_values=m_vals,
        level_r=tuple(level_r),
        bar_c_statement=tuple(bc_s[1:]),
        bar_c_proof=tuple(bc_p[1:]),
        degenerate_statement=tuple(deg_s),
        degenerate_proof=tuple(deg_p),
        notes=notes,
    )


@dataclass
class InequalityReport:
    inequality: str
    p: float
    exponent: float
    n_paths: int
    seed: int
    lhs: float
    se_lhs: float
    rhs: float
    se_rhs: float
    constant: float
    ratio: float
    minimal_constant: float
    verdict: str
    degenerate: bool
    variant: str
    max_contribution: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "inequality": self.inequality,
            "p": self.p,
            "exponent": self.exponent,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "lhs": self.lhs,
            "se_lhs": self.se_lhs,
            "rhs": self.rhs,
            "se_rhs": self.se_rhs,
            "constant": self.constant,
            "ratio": self.ratio,
            "minimal_constant": self.minimal_constant,
            "verdict": self.verdict,
            "degenerate": self.degenerate,
            "variant": self.variant,
            "max_contribution": self.max_contribution,
        }
        out.update({f"x_{k}": _jsonable(v) for k, v in self.extras.items()})
        return out


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _mc_mean(samples: np.ndarray):
    m = float(samples.mean())
    se = float(samples.std(ddof=1) / np.sqrt(samples.shape[0])) if samples.shape[0] > 1 else 0.0
    return m, se


def _contribution(samples: np.ndarray) -> float:
    tot = float(samples.sum())
    return float(samples.max() / tot) if tot > 0 else 0.0


def _passes(lhs, se_lhs, rhs, se_rhs, c) -> bool:
    return lhs <= c * rhs + 3.0 * (se_lhs + c * se_rhs)


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0.0 else np.inf


def _campaign(model: BanachModel, xi_spec: IntegrandSpec, nu: MarkMeasure, horizon: float):
    if nu.kind != "atoms":
        raise ValueError("Monte Carlo campaigns need an atom measure (truncate first)")
    camp = engine.compile_campaign(nu.atoms, nu.weights, horizon, xi_spec, s=model.s)
    if camp.d != model.d:
        raise ValueError(f"integrand produces dimension {camp.d}, model has {model.d}")
    return camp


def _nu_term(stats: engine.PathStats, l: int):
    """Mean and SE of the nu-integral; exact when the integrand is static."""
    if not stats.adapted:
        return float(stats.nu_ints[0, l]) if stats.nu_ints.shape[0] else 0.0, 0.0
    return _mc_mean(stats.nu_ints[:, l])


def mc_verify_i(
    model: BanachModel,
    xi_spec: IntegrandSpec,
    nu: MarkMeasure,
    horizon: float,
    q: float,
    n_paths: int,
    seed: int,
) -> InequalityReport:
    """Bound (i) at moment q <= p.

    The stated bound carries a supremum on the left but the available
    derivation controls the plain q-th moment, so both left variants
    are measured; the verdict keys on the no-sup variant and the
    sup-variant ratio is reported alongside.
    """
    p = model.p
    if not 0 < q <= p:
        raise ValueError("need 0 < q <= p")
    camp = _campaign(model, xi_spec, nu, horizon)
    st = engine.evaluate(camp, seed, n_paths, exponents=[p])
    lhs_nosup, se_nosup = _mc_mean(st.end**q)
    lhs_sup, se_sup = _mc_mean(st.sup**q)
    A, se_A = _nu_term(st, 0)
    rhs = A ** (q / p)
    se_rhs = (q / p) * A ** (q / p - 1.0) * se_A if A > 0 else 0.0
    c = model.c_p * 2.0 ** (2.0 - p)
    verdict = "pass" if _passes(lhs_nosup, se_nosup, rhs, se_rhs, c) else "fail"
    return InequalityReport(
        inequality="i",
        p=p,
        exponent=q,
        n_paths=n_paths,
        seed=seed,
        lhs=lhs_nosup,
        se_lhs=se_nosup,
        rhs=rhs,
        se_rhs=se_rhs,
        constant=c,
        ratio=_ratio(lhs_nosup, rhs),
        minimal_constant=_ratio(lhs_nosup, rhs),
        verdict=verdict,
        degenerate=False,
        variant="nosup-basis",
        max_contribution=_contribution(st.end**q),
        extras={
            "lhs_sup": lhs_sup,
            "se_lhs_sup": se_sup,
            "ratio_sup": _ratio(lhs_sup, rhs),
            "sup_variant_passes": bool(_passes(lhs_sup, se_sup, rhs, se_rhs, c)),
            "note": "sup-variant measured; verdict keys on the proven no-sup moment",
        },
    )


def mc_verify_ii(
    model: BanachModel,
    xi_spec: IntegrandSpec,
    nu: MarkMeasure,
    horizon: float,
    r: float,
    n_paths: int,
    seed: int,
) -> InequalityReport:
    """Bound (ii) at moment r >= p against the pathwise jump p-sum."""
    p = model.p
    if r < p:
        raise ValueError("need r >= p")
    camp = _campaign(model, xi_spec, nu, horizon)
    st = engine.evaluate(camp, seed, n_paths, exponents=[p])
    lhs_samp = st.sup**r
    rhs_samp = st.jump_pows[:, 0] ** (r / p)
    lhs, se_lhs = _mc_mean(lhs_samp)
    rhs, se_rhs = _mc_mean(rhs_samp)
    table = constants(model, r)
    c = table.const_ii
    minimal = _ratio(lhs, rhs)
    if table.const_ii_degenerate:
        verdict = (
            "pass-with-degenerate-constant" if np.isfinite(minimal) else "fail"
        )
    else:
        verdict = "pass" if _passes(lhs, se_lhs, rhs, se_rhs, c) else "fail"
    return InequalityReport(
        inequality="ii",
        p=p,
        exponent=r,
        n_paths=n_paths,
        seed=seed,
        lhs=lhs,
        se_lhs=se_lhs,
        rhs=rhs,
        se_rhs=se_rhs,
        constant=c,
        ratio=minimal,
        minimal_constant=minimal,
        verdict=verdict,
        degenerate=table.const_ii_degenerate,
        variant="m0=%d" % table.m0,
        max_contribution=_contribution(lhs_samp),
        extras={"m0": table.m0},
    )


def mc_verify_iii(
    model: BanachModel,
    xi_spec: IntegrandSpec,
    nu: MarkMeasure,
    horizon: float,
    n: int,
    n_paths: int,
    seed: int,
) -> InequalityReport:
    """Bound (iii) at moment q = p^n against weighted nu-integral powers."""
    p = model.p
    if n < 1:
        raise ValueError("need n >= 1")
    q = p**n
    camp = _campaign(model, xi_spec, nu, horizon)
    exps = [p**l for l in range(1, n + 1)]
    st = engine.evaluate(camp, seed, n_paths, exponents=exps)
    lhs_samp = st.sup**q
    lhs, se_lhs = _mc_mean(lhs_samp)
    table = constants(model, r=q, n=n)
    pref = 2.0 ** (2.0 - p)
    rhs = 0.0
    rhs_unit = 0.0
    se_rhs = 0.0
    se_unit = 0.0
    terms = []
    for l in range(1, n + 1):
        A, se_A = _nu_term(st, l - 1)
        e = p ** (n - l)
        term = A**e
        se_term = e * A ** (e - 1.0) * se_A if A > 0 else 0.0
        bc = table.bar_c_statement[l - 1]
        rhs += pref * bc * term
        se_rhs += pref * bc * se_term
        rhs_unit += pref * term
        se_unit += pref * se_term
        terms.append({"l": l, "bar_c": bc, "nu_term": A, "powered": term})
    minimal = _ratio(lhs, rhs_unit)
    degenerate = any(table.degenerate_statement)
    if degenerate:
        verdict = "pass-with-degenerate-constant" if np.isfinite(minimal) else "fail"
    else:
        verdict = "pass" if _passes(lhs, se_lhs, rhs, se_rhs, 1.0) else "fail"
    return InequalityReport(
        inequality="iii",
        p=p,
        exponent=q,
        n_paths=n_paths,
        seed=seed,
        lhs=lhs,
        se_lhs=se_lhs,
        rhs=rhs,
        se_rhs=se_rhs,
        constant=1.0,
        ratio=_ratio(lhs, rhs),
        minimal_constant=minimal,
        verdict=verdict,
        degenerate=degenerate,
        variant="statement",
        max_contribution=_contribution(lhs_samp),
        extras={
            "terms": terms,
            "rhs_unit_coefficients": rhs_unit,
            "stated_bound_holds": bool(_passes(lhs, se_lhs, rhs, se_rhs, 1.0)),
            "bar_c_statement": list(table.bar_c_statement),
            "bar_c_proof": list(table.bar_c_proof),
            "notes": list(table.notes),
        },
    )


def mc_verify_corollary(
    model: BanachModel,
    h_spec: IntegrandSpec,
    triplet: LevyTriplet,
    horizon: float,
    r: float,
    n_paths: int,
    seed: int,
) -> InequalityReport:
    """Corollary form (ii) for X = int h dL on the compensated jump part.

    With xi(s, z) = h(s) z the jump of X at an event is h Delta L, so
    this is bound (ii) verbatim; the previsible conditional form
    sum_j dt_j int |h_j z|^p dnu is exact and reported alongside.
    """
    if h_spec.kind not in ("matrix_per_interval", "linear_in_mark"):
        raise ValueError("corollary needs an operator-valued step integrand")
    p = model.p
    rep = mc_verify_ii(model, h_spec, triplet.jumps, horizon, r, n_paths, seed)
    camp = _campaign(model, h_spec, triplet.jumps, horizon)
    st0 = engine.evaluate(camp, seed, 1, exponents=[p])
    rep.inequality = "corollary"
    rep.extras["conditional_form_value"] = float(st0.nu_ints[0, 0])
    rep.extras["drift_ignored"] = "X is the compensated jump integral"
    return rep

"""Exact finite-filtration probability spaces and martingale checks.

A filtration tree holds one node per atom of F_k at each depth k; all
expectations are probability-weighted sums over atoms, so the discrete
inequalities are verified without sampling error.  Trees are capped at
1e5 atoms per check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convex import ConjugatePair, ConvexFunction
from .engine import lnorm

MAX_ATOMS = 100_000
PROB_TOL = 1e-12


@dataclass(frozen=True)
class FiltrationTree:
    """Rooted tree; level k nodes are the atoms of F_k."""

    probs: tuple  # probs[k]: (n_k,) absolute probability of each atom
    parents: tuple  # parents[k]: (n_k,) parent index at level k-1, k >= 1
    ancestors: tuple = field(repr=False, default=())

    @staticmethod
    def build(probs, parents) -> "FiltrationTree":
        probs = [np.asarray(p, dtype=np.float64) for p in probs]
        parents = [np.asarray(p, dtype=np.int64) for p in parents]
        if len(parents) != len(probs) - 1:
            raise ValueError("need one parent array per non-root level")
        if probs[0].shape != (1,) or abs(probs[0][0] - 1.0) > PROB_TOL:
            raise ValueError("root probability must be 1")
        if sum(p.shape[0] for p in probs) > MAX_ATOMS:
            raise ValueError(f"tree exceeds {MAX_ATOMS} atoms")
        for k in range(1, len(probs)):
            if (probs[k] <= 0).any():
                raise ValueError(f"level {k} has nonpositive atom masses")
            agg = np.zeros(probs[k - 1].shape[0])
            np.add.at(agg, parents[k - 1], probs[k])
            if np.max(np.abs(agg - probs[k - 1])) > PROB_TOL:
                raise ValueError(f"level {k} masses do not sum to parents")
            present = np.zeros(probs[k - 1].shape[0], dtype=bool)
            present[parents[k - 1]] = True
            if not present.all():
                raise ValueError(f"level {k - 1} has childless interior nodes")
        depth = len(probs) - 1
        anc = [None] * (depth + 1)
        anc[depth] = np.arange(probs[depth].shape[0], dtype=np.int64)
        for k in range(depth - 1, -1, -1):
            anc[k] = parents[k][anc[k + 1]]
        return FiltrationTree(
            probs=tuple(probs), parents=tuple(parents), ancestors=tuple(anc)
        )

    @property
    def depth(self) -> int:
        return len(self.probs) - 1

    @property
    def n_leaves(self) -> int:
        return self.probs[-1].shape[0]

    @property
    def leaf_probs(self) -> np.ndarray:
        return self.probs[-1]

    def width(self, k: int) -> int:
        return self.probs[k].shape[0]

    def to_leaves(self, level: int, values: np.ndarray) -> np.ndarray:
        """Expand level-k node values to one row per leaf atom."""
        return values[self.ancestors[level]]

    def node_expectation(self, level: int, values: np.ndarray, k: int) -> np.ndarray:
        """E[values | F_k] as level-k node values, exact atom averaging."""
        if not 0 <= k <= level <= self.depth:
            raise ValueError(f"levels out of range: {k} <= {level} <= {self.depth}")
        out = np.asarray(values, dtype=np.float64)
        for j in range(level, k, -1):
            par = self.parents[j - 1]
            agg = np.zeros((self.width(j - 1),) + out.shape[1:])
            if out.ndim == 1:
                np.add.at(agg, par, self.probs[j] * out)
            else:
                np.add.at(agg, par, self.probs[j][:, None] * out)
            shape = (-1,) + (1,) * (out.ndim - 1)
            out = agg / self.probs[j - 1].reshape(shape)
        return out


def binary_tree(depth: int) -> FiltrationTree:
    """Balanced binary tree with equal branch probabilities."""
    probs = [np.ones(1)]
    parents = []
    for k in range(1, depth + 1):
        n = 2**k
        probs.append(np.full(n, 2.0**-k))
        parents.append(np.arange(n, dtype=np.int64) // 2)
    return FiltrationTree.build(probs, parents)


def explicit_tree(branching) -> FiltrationTree:
    """Fixed branching factor per level, equal child masses."""
    probs = [np.ones(1)]
    parents = []
    for b in branching:
        n_par = probs[-1].shape[0]
        par = np.repeat(np.arange(n_par, dtype=np.int64), b)
        probs.append(probs[-1][par] / b)
        parents.append(par)
    return FiltrationTree.build(probs, parents)


def random_tree(seed: int, depth: int, max_branching: int = 3) -> FiltrationTree:
    """Seeded random tree: branching 1..max_branching, random masses."""
    rng = np.random.default_rng(seed)
    probs = [np.ones(1)]
    parents = []
    for _ in range(depth):
        n_par = probs[-1].shape[0]
        nch = rng.integers(1, max_branching + 1, size=n_par)
        par = np.repeat(np.arange(n_par, dtype=np.int64), nch)
        w = rng.uniform(0.2, 1.0, size=par.shape[0])
        wsum = np.zeros(n_par)
        np.add.at(wsum, par, w)
        probs.append(probs[-1][par] * (w / wsum[par]))
        parents.append(par)
    return FiltrationTree.build(probs, parents)


@dataclass(frozen=True)
class AdaptedProcess:
    """Process values per node for levels 0..top; norm is l_s on R^d."""

    tree: FiltrationTree
    values: tuple  # values[k]: (n_k, d)
    d: int
    s: float = 2.0

    @staticmethod
    def build(tree, values, s: float = 2.0) -> "AdaptedProcess":
        vals = []
        for k, v in enumerate(values):
            v = np.atleast_2d(np.asarray(v, dtype=np.float64))
            if v.shape[0] == 1 and tree.width(k) != 1:
                v = v.T
            if v.shape[0] != tree.width(k):
                raise ValueError(f"level {k}: {v.shape[0]} values for {tree.width(k)} nodes")
            vals.append(v)
        d = vals[0].shape[1]
        if any(v.shape[1] != d for v in vals):
            raise ValueError("inconsistent value dimension across levels")
        return AdaptedProcess(tree=tree, values=tuple(vals), d=d, s=float(s))

    @property
    def top(self) -> int:
        return len(self.values) - 1

    def leaf_matrix(self) -> np.ndarray:
        """(n_leaves, top+1, d) values along each leaf's path."""
        t = self.tree
        return np.stack(
            [t.to_leaves(k, self.values[k]) for k in range(self.top + 1)], axis=1
        )

    def norms(self, k: int) -> np.ndarray:
        return lnorm(self.values[k], self.s)


def constant_process(tree, value, levels=None, s: float = 2.0) -> AdaptedProcess:
    value = np.atleast_1d(np.asarray(value, dtype=np.float64))
    top = tree.depth if levels is None else levels
    vals = [np.tile(value, (tree.width(k), 1)) for k in range(top + 1)]
    return AdaptedProcess.build(tree, vals, s=s)


def binary_walk(depth: int, s: float = 2.0) -> AdaptedProcess:
    """Fair +-1 walk started at 0 on the balanced binary tree."""
    tree = binary_tree(depth)
    vals = [np.zeros((1, 1))]
    for k in range(1, depth + 1):
        step = np.where(np.arange(2**k) % 2 == 0, 1.0, -1.0)[:, None]
        vals.append(vals[-1][tree.parents[k - 1]] + step)
    return AdaptedProcess.build(tree, vals, s=s)


def random_martingale(
    tree: FiltrationTree, seed: int, d: int = 1, s: float = 2.0, zero_root: bool = False
) -> AdaptedProcess:
    """Exact martingale with random increments, recentered per node."""
    rng = np.random.default_rng(seed)
    root = np.zeros((1, d)) if zero_root else rng.normal(size=(1, d))
    vals = [root]
    for k in range(1, tree.depth + 1):
        par = tree.parents[k - 1]
        x = rng.normal(size=(tree.width(k), d))
        q = tree.probs[k] / tree.probs[k - 1][par]
        mean = np.zeros((tree.width(k - 1), d))
        np.add.at(mean, par, q[:, None] * x)
        vals.append(vals[-1][par] + x - mean[par])
    return AdaptedProcess.build(tree, vals, s=s)


def conditional_expectation(X: AdaptedProcess, k: int) -> AdaptedProcess:
    """E[X_top | F_i] for i <= k (the martingale closure of X up to k)."""
    j = X.top
    if not 0 <= k <= j:
        raise ValueError(f"target depth {k} out of range 0..{j}")
    top_vals = X.values[j]
    vals = [X.tree.node_expectation(j, top_vals, i) for i in range(k + 1)]
    return AdaptedProcess.build(X.tree, vals, s=X.s)


def is_martingale(M: AdaptedProcess, tol: float = 1e-12) -> bool:
    """True iff E[M_{k+1} | F_k] = M_k at every node, within tol."""
    return martingale_deviation(M) <= tol


def martingale_deviation(M: AdaptedProcess) -> float:
    """Largest one-step deviation |E[M_{k+1} | F_k] - M_k| over all nodes."""
    worst = 0.0
    for k in range(M.top):
        cond = M.tree.node_expectation(k + 1, M.values[k + 1], k)
        worst = max(worst, float(np.max(np.abs(cond - M.values[k]))))
    return worst


def is_submartingale(X: AdaptedProcess, tol: float = 1e-12) -> bool:
    for k in range(X.top):
        cond = X.tree.node_expectation(k + 1, X.values[k + 1], k)
        if np.min(cond - X.values[k]) < -tol:
            return False
    return True


def abs_process(M: AdaptedProcess) -> AdaptedProcess:
    """|M|_s, a nonnegative real submartingale when M is a martingale."""
    vals = [lnorm(v, M.s)[:, None] for v in M.values]
    return AdaptedProcess.build(M.tree, vals, s=2.0)


def expectation(tree: FiltrationTree, leaf_values: np.ndarray) -> float:
    return float(np.sum(tree.leaf_probs * np.asarray(leaf_values, dtype=np.float64)))


@dataclass(frozen=True)
class MartingaleStats:
    """Per-atom statistics of a finite martingale, exact.

    Rows index leaves, columns time 0..N.  ``maximal`` is the running
    max of |M_k|; ``diff_maximal`` the running max of the difference
    norms |m_k| (with m_0 = M_0); ``s_p`` the p-sum of differences,
    ``s_cond`` its previsible counterpart built from E[|m_k|^p | F_{k-1}].
    """

    diffs: np.ndarray  # (L, N+1, d)
    maximal: np.ndarray  # (L, N+1)
    diff_maximal: np.ndarray  # (L, N+1)
    s_p: np.ndarray  # (L, N+1)
    s_cond: np.ndarray  # (L, N+1)
    p: float
    leaf_probs: np.ndarray


def stats(M: AdaptedProcess, p: float) -> MartingaleStats:
    if not 1.0 <= p <= 2.0:
        raise ValueError("p must lie in [1, 2]")
    tree = M.tree
    path = M.leaf_matrix()  # (L, N+1, d)
    n = M.top
    diffs = np.empty_like(path)
    diffs[:, 0] = path[:, 0]
    diffs[:, 1:] = path[:, 1:] - path[:, :-1]
    normM = lnorm(path, M.s)
    normd = lnorm(diffs, M.s)
    maximal = np.maximum.accumulate(normM, axis=1)
    diff_maximal = np.maximum.accumulate(normd, axis=1)
    s_p = np.cumsum(normd**p, axis=1) ** (1.0 / p)

    cond_terms = np.empty_like(normd)
    for k in range(n + 1):
        dk = lnorm(M.values[k] - (M.values[k - 1][tree.parents[k - 1]] if k else 0.0), M.s)
        pk = dk**p
        if k == 0:
            cond_terms[:, 0] = float(np.sum(tree.probs[0] * pk))
        else:
            ck = tree.node_expectation(k, pk, k - 1)
            cond_terms[:, k] = tree.to_leaves(k - 1, ck)
    s_cond = np.cumsum(cond_terms, axis=1) ** (1.0 / p)
    return MartingaleStats(
        diffs=diffs,
        maximal=maximal,
        diff_maximal=diff_maximal,
        s_p=s_p,
        s_cond=s_cond,
        p=p,
        leaf_probs=tree.leaf_probs,
    )


@dataclass(frozen=True)
class DavisParts:
    """Per-level pieces of the decomposition, for bound checks."""

    y: tuple
    z: tuple
    g: tuple
    h: tuple
    cond_y: tuple  # E[y_k | F_{k-1}] at level k-1 (scalar row for k = 0)
    diff_max_prev: tuple  # m*_{k-1} per level-k node (0 for k = 0)


def davis_decompose(M: AdaptedProcess):
    """Split M = G + H with small-increment part G and summable part H.

    The split condition at step k compares |m_k| against twice the
    previous running maximum of difference norms; the k = 0 step uses
    m*_{-1} = 0 so that the identity M = G + H holds from the start.
    Returns (G, H, parts).
    """
    if not is_martingale(M):
        raise ValueError("davis decomposition needs a martingale")
    tree = M.tree
    y_l, z_l, g_l, h_l, ey_l, msp_l = [], [], [], [], [], []
    G_vals, H_vals = [], []
    ms_prev = np.zeros(1)  # m*_{k-1} at level k-1
    for k in range(M.top + 1):
        par = tree.parents[k - 1] if k else None
        m_k = M.values[k] - (M.values[k - 1][par] if k else 0.0)
        nd = lnorm(m_k, M.s)
        ms_here = ms_prev[par] if k else np.zeros(tree.width(0))
        on = nd <= 2.0 * ms_here
        y_k = np.where(on[:, None], m_k, 0.0)
        z_k = np.where(on[:, None], 0.0, m_k)
        if k:
            ey = tree.node_expectation(k, y_k, k - 1)
            ey_leafed = ey[par]
        else:
            ey = np.sum(tree.probs[0][:, None] * y_k, axis=0, keepdims=True)
            ey_leafed = np.broadcast_to(ey, y_k.shape)
        g_k = y_k - ey_leafed
        h_k = z_k + ey_leafed
        G_vals.append((G_vals[-1][par] if k else 0.0) + g_k)
        H_vals.append((H_vals[-1][par] if k else 0.0) + h_k)
        y_l.append(y_k)
        z_l.append(z_k)
        g_l.append(g_k)
        h_l.append(h_k)
        ey_l.append(ey)
        msp_l.append(ms_here)
        ms_prev = np.maximum(ms_here, nd)
    G = AdaptedProcess.build(tree, G_vals, s=M.s)
    H = AdaptedProcess.build(tree, H_vals, s=M.s)
    parts = DavisParts(
        y=tuple(y_l),
        z=tuple(z_l),
        g=tuple(g_l),
        h=tuple(h_l),
        cond_y=tuple(ey_l),
        diff_max_prev=tuple(msp_l),
    )
    return G, H, parts


def _require_doob_input(X: AdaptedProcess):
    if X.d != 1:
        raise ValueError("need a real-valued process")
    if np.max(np.abs(X.values[0])) > PROB_TOL:
        raise ValueError("X_0 must be 0")
    if min(float(v.min()) for v in X.values) < 0.0:
        raise ValueError("X must be nonnegative")
    if not is_submartingale(X):
        raise ValueError("X must be a submartingale")


def doob_phi_check(X: AdaptedProcess, pair: ConjugatePair) -> dict:
    """E F(sup X) against 4 (C_Psi* - 1) E F(X_N), exact on the tree."""
    _require_doob_input(X)
    tree = X.tree
    path = X.leaf_matrix()[:, :, 0]
    xstar = path.max(axis=1)
    lhs = expectation(tree, pair.primal.value(xstar))
    c = 4.0 * (pair.c_star_dual - 1.0)
    rhs = c * expectation(tree, pair.primal.value(path[:, -1]))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "constant": c,
        "pass": bool(lhs <= rhs + 1e-10),
    }


def doob_lp_check(X: AdaptedProcess, p: float) -> dict:
    """Simple power form: E sup X^p <= q^p E X_N^p with q = p / (p-1)."""
    _require_doob_input(X)
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    tree = X.tree
    path = X.leaf_matrix()[:, :, 0]
    q = p / (p - 1.0)
    lhs = expectation(tree, path.max(axis=1) ** p)
    rhs = q**p * expectation(tree, path[:, -1] ** p)
    return {"lhs": lhs, "rhs": rhs, "constant": q**p, "pass": bool(lhs <= rhs + 1e-10)}


def garsia_gap(X: AdaptedProcess, f: ConvexFunction) -> dict:
    """E int_0^{X*} t dphi(t) vs E X_N phi(X*).

    Sometimes stated as an equality, but a 2-atom example already gives
    a strict gap, so the check asserts the <= direction and reports the
    measured gap.
    """
    _require_doob_input(X)
    tree = X.tree
    path = X.leaf_matrix()[:, :, 0]
    xstar = path.max(axis=1)
    lhs = expectation(tree, np.array([f.t_dphi(x) for x in xstar]))
    rhs = expectation(tree, path[:, -1] * f.density(xstar))
    return {"lhs": lhs, "rhs": rhs, "gap": rhs - lhs}


def conditional_sum_check(z: AdaptedProcess, pair: ConjugatePair) -> dict:
    """Compare F of the previsible-projection sum against F of the raw sum.

    The constant is (c*)^(2 c*) with c* of the primal function.
    """
    if z.d != 1:
        raise ValueError("need real-valued summands")
    if min(float(v.min()) for v in z.values) < 0.0:
        raise ValueError("summands must be nonnegative")
    tree = z.tree
    raw = z.leaf_matrix()[:, :, 0].sum(axis=1)
    proj = np.zeros(tree.n_leaves)
    for k in range(z.top + 1):
        vk = z.values[k][:, 0]
        if k == 0:
            proj += float(np.sum(tree.probs[0] * vk))
        else:
            ck = tree.node_expectation(k, vk, k - 1)
            proj += tree.to_leaves(k - 1, ck)
    cs = pair.c_star_primal
    c = cs ** (2.0 * cs)
    lhs = expectation(tree, pair.primal.value(proj))
    rhs = c * expectation(tree, pair.primal.value(raw))
    return {"lhs": lhs, "rhs": rhs, "constant": c, "pass": bool(lhs <= rhs + 1e-10)}


def _phi_scaling_constant(f: ConvexFunction, factor: float, support: np.ndarray) -> float:
    """Smallest gamma on the grid with F(factor * lam) <= gamma F(lam)."""
    if f.kind == "power":
        return factor**f.p
    grid = support[(support > 0)]
    grid = grid[factor * grid <= f.t_end]
    if grid.size == 0:
        raise ValueError("scaling constant undefined: empty grid")
    num = f.value(factor * grid)
    den = f.value(grid)
    if (den == 0).any():
        raise ValueError("scaling constant undefined: F vanishes on grid")
    return float(np.max(num / den))


def good_lambda_check(
    xs, ys, ps, f: ConvexFunction, beta: float, delta: float, eps: float
) -> dict:
    """Distributional hypothesis and moment conclusion on a finite law.

    Hypothesis: P(y > beta lam, x <= delta lam) <= eps P(y > lam) for all
    lam > 0, checked exactly at the finitely many breakpoints.  When it
    holds and gamma * eps < 1 the conclusion
    E F(y) <= gamma eta / (1 - gamma eps) E F(x) is asserted, where
    gamma, eta are the minimal grid constants for F(beta lam) <= gamma
    F(lam) and F(lam / delta) <= eta F(lam).  The strict form takes
    delta > 1, but applications need arbitrarily small delta; any
    positive delta is accepted and the regime recorded.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    ps = np.asarray(ps, dtype=np.float64)
    if beta <= 1.0:
        raise ValueError("beta must exceed 1")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if (xs < 0).any() or (ys < 0).any():
        raise ValueError("x and y must be nonnegative")
    if abs(ps.sum() - 1.0) > 1e-9 or (ps < 0).any():
        raise ValueError("probabilities must be a distribution")

    cands = np.unique(
        np.concatenate((ys / beta, xs / delta, ys, [np.max(ys) + 1.0 if ys.size else 1.0]))
    )
    cands = cands[cands > 0]
    lams = np.unique(np.concatenate((cands, 0.5 * (cands[1:] + cands[:-1]), 0.5 * cands[:1])))
    worst = 0.0
    ok = True
    for lam in lams:
        lhs = float(ps[(ys > beta * lam) & (xs <= delta * lam)].sum())
        rhs = float(ps[ys > lam].sum())
        if lhs > eps * rhs + 1e-15:
            ok = False
        if rhs > 0:
            worst = max(worst, lhs / rhs)
        elif lhs > 0:
            worst = np.inf

    support = np.concatenate((xs, ys, xs / delta, beta * ys))
    support = np.unique(support[support > 0])
    report = {
        "hypothesis_holds": ok,
        "measured_eps": worst,
        "regime": "strict (delta > 1)" if delta > 1.0 else "small-delta (0 < delta <= 1)",
        "applicable": False,
        "pass": None,
    }
    if not ok:
        report["note"] = "lemma not applicable: hypothesis fails"
        return report
    gamma = _phi_scaling_constant(f, beta, support)
    eta = _phi_scaling_constant(f, 1.0 / delta, support)
    report["gamma"] = gamma
    report["eta"] = eta
    if gamma * eps >= 1.0:
        report["note"] = "lemma not applicable: gamma * eps >= 1"
        return report
    bound = gamma * eta / (1.0 - gamma * eps)
    ey = float(np.sum(ps * f.value(ys)))
    ex = float(np.sum(ps * f.value(xs)))
    report.update(
        {
            "applicable": True,
            "lhs": ey,
            "rhs": bound * ex,
            "constant": bound,
            "pass": bool(ey <= bound * ex + 1e-10),
        }
    )
    return report


def previsible_control_check(
    M: AdaptedProcess,
    w: AdaptedProcess,
    f: ConvexFunction,
    p: float,
    C: float | None = None,
) -> dict:
    """E F(M*) <= C E F(S_p(M)) + C E F(w*) for previsible dominating w.

    Statements of this bound sometimes mix F and its density on the
    right side; uppercase F is used on both sides here and noted in the
    report.  The default C is assembled from the good-lambda route; the
    measured minimal constant is always included.
    """
    if not is_martingale(M):
        raise ValueError("M must be a martingale")
    if w.d != 1 or min(float(v.min()) for v in w.values) < 0.0:
        raise ValueError("w must be nonnegative and real-valued")
    tree = M.tree
    for k in range(1, w.top + 1):
        par = tree.parents[k - 1]
        vk = w.values[k][:, 0]
        agg_min = np.full(tree.width(k - 1), np.inf)
        agg_max = np.full(tree.width(k - 1), -np.inf)
        np.minimum.at(agg_min, par, vk)
        np.maximum.at(agg_max, par, vk)
        if np.max(agg_max - agg_min) > PROB_TOL:
            raise ValueError(f"w is not previsible at step {k}")
    st = stats(M, p)
    wpath = w.leaf_matrix()[:, :, 0]
    if (lnorm(st.diffs, M.s) > wpath + PROB_TOL).any():
        raise ValueError("w does not dominate the martingale differences")
    lhs = expectation(tree, f.value(st.maximal[:, -1]))
    rhs_s = expectation(tree, f.value(st.s_p[:, -1]))
    rhs_w = expectation(tree, f.value(wpath.max(axis=1)))
    if C is None:
        C = default_previsible_constant(f, p)
    denom = rhs_s + rhs_w
    minimal = lhs / denom if denom > 0 else (0.0 if lhs == 0.0 else np.inf)
    return {
        "lhs": lhs,
        "rhs_s": rhs_s,
        "rhs_w": rhs_w,
        "constant": C,
        "minimal_constant": minimal,
        "pass": bool(lhs <= C * (rhs_s + rhs_w) + 1e-10),
        "note": "uppercase F used on both sides",
    }


def default_previsible_constant(f: ConvexFunction, p: float, type_const: float = 1.0) -> float:
    """Assemble a valid constant via the good-lambda route.

    With beta = 4 the distributional estimate gives
    eps(delta) = 2 L delta^p / (beta - delta - 1)^p; shrink delta until
    gamma * eps < 1/2 and take gamma * eta / (1 - gamma * eps).
    """
    beta = 4.0
    support = np.geomspace(1e-6, 1e6, 1201) if f.kind == "power" else f.t[f.t > 0]
    gamma = _phi_scaling_constant(f, beta, support)
    best = np.inf
    delta = 0.5
    for _ in range(60):
        eps = 2.0 * type_const * delta**p / (beta - delta - 1.0) ** p
        if gamma * eps < 0.5:
            eta = _phi_scaling_constant(f, 1.0 / delta, support)
            best = min(best, gamma * eta / (1.0 - gamma * eps))
        delta *= 0.5
    if not np.isfinite(best):
        raise ValueError("could not assemble a finite constant")
    return best


def bdg_phi_check(
    M: AdaptedProcess, f: ConvexFunction, p: float, C: float
) -> dict:
    """E F(sup |M|) against C E F(S_p(M)); reports the minimal constant."""
    if not is_martingale(M):
        raise ValueError("M must be a martingale")
    st = stats(M, p)
    tree = M.tree
    lhs = expectation(tree, f.value(st.maximal[:, -1]))
    rhs = expectation(tree, f.value(st.s_p[:, -1]))
    minimal = lhs / rhs if rhs > 0 else (0.0 if lhs == 0.0 else np.inf)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "constant": C,
        "minimal_constant": minimal,
        "pass": bool(lhs <= C * rhs + 1e-10),
    }

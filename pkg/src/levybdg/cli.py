"""Experiment runner: config in, deterministic JSON/CSV reports out.

Exit status: 0 when every verdict is pass or
pass-with-degenerate-constant, 2 on any fail, 1 on config or runtime
errors (schema violations name the field, non-finite estimates abort).

Report files contain no wall-clock fields so that identical
(config, seed) runs are byte-identical regardless of thread count;
runtimes go to stdout only.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import config as cfgmod
from . import filtration as ft
from . import kernels
from .convex import conjugate
from .inequalities import (
    constants,
    mc_verify_corollary,
    mc_verify_i,
    mc_verify_ii,
    mc_verify_iii,
)
from .prm import LevyTriplet, cf_check, poisson_lemma_grid

CSV_COLUMNS = [
    "id",
    "kind",
    "p",
    "exponent",
    "N",
    "seed",
    "lhs",
    "se_lhs",
    "rhs",
    "se_rhs",
    "constant",
    "variant",
    "ratio",
    "verdict",
    "config_hash",
]

_TOL = 1e-10


@dataclass
class ExperimentResult:
    exp_id: str
    kind: str
    verdict: str
    row: dict
    detail: dict = field(default_factory=dict)


def set_threads(k: int | None) -> None:
    """Pin the worker count; results must not depend on it."""
    if k is None:
        k = int(os.environ.get("LEVY_BDG_THREADS", "0")) or None
    if k is None or not kernels.HAVE_NUMBA:
        return
    import numba

    numba.set_num_threads(min(max(k, 1), numba.config.NUMBA_NUM_THREADS))


def _phi_pair(exp, path):
    phi = cfgmod.parse_phi(exp.get("phi", {"kind": "power", "p": 2.0}), path)
    pair = conjugate(phi)
    return phi, pair


def _tree_instances(tcfg, seed):
    """Yield one martingale per requested tree."""
    if tcfg["generator"] == "binary_walk":
        for _ in range(tcfg["count"]):
            yield ft.binary_walk(tcfg["depth"], s=tcfg["s"])
        return
    if tcfg["generator"] == "explicit":
        for i in range(tcfg["count"]):
            tree = ft.explicit_tree(tcfg["branching"])
            if tcfg["increments"] == "rademacher":
                vals = [np.zeros((1, 1))]
                for k in range(tree.depth):
                    par = tree.parents[k]
                    first = np.concatenate(([True], par[1:] != par[:-1]))
                    step = np.where(first, 1.0, -1.0)[:, None]
                    vals.append(vals[-1][par] + step)
                yield ft.AdaptedProcess.build(tree, vals, s=tcfg["s"])
            else:
                yield ft.random_martingale(
                    tree, seed + i + 1_000_000, d=tcfg["d"], s=tcfg["s"], zero_root=True
                )
        return
    for i in range(tcfg["count"]):
        tree = ft.random_tree(seed + i, tcfg["depth"], tcfg["branching"])
        yield ft.random_martingale(
            tree, seed + i + 1_000_000, d=tcfg["d"], s=tcfg["s"], zero_root=True
        )


def run_experiment(exp: dict, default_seed: int) -> ExperimentResult:
    kind = exp["kind"]
    seed = int(exp.get("seed", default_seed))
    exp_id = exp.get("id", kind)
    path = f"$.experiments.{exp_id}"
    row = {c: "" for c in CSV_COLUMNS}
    row.update({"id": exp_id, "kind": kind, "seed": seed})

    if kind == "constants":
        model = cfgmod.parse_model(
            {"p": exp["p"], "c_p": exp.get("c_p", 1.0)}, path + ".model"
        )
        table = constants(model, float(exp["r"]), int(exp.get("n", 1)))
        row.update(
            {
                "p": model.p,
                "exponent": table.r,
                "constant": table.const_ii,
                "variant": f"m0={table.m0}",
                "verdict": "pass",
            }
        )
        return ExperimentResult(exp_id, kind, "pass", row, table.to_dict())

    if kind.startswith("verify-continuous"):
        model = cfgmod.parse_model(exp["model"], path + ".model")
        nu = cfgmod.parse_measure(exp["measure"], path + ".measure")
        spec = cfgmod.parse_integrand(exp["integrand"], path + ".integrand")
        T = float(exp["T"])
        N = int(exp["N"])
        if kind == "verify-continuous-i":
            rep = mc_verify_i(model, spec, nu, T, float(exp["q"]), N, seed)
        elif kind == "verify-continuous-ii":
            rep = mc_verify_ii(model, spec, nu, T, float(exp["r"]), N, seed)
        elif kind == "verify-continuous-iii":
            rep = mc_verify_iii(model, spec, nu, T, int(exp["n"]), N, seed)
        else:
            triplet = LevyTriplet.build(exp["drift"], nu)
            rep = mc_verify_corollary(model, spec, triplet, T, float(exp["r"]), N, seed)
        row.update(
            {
                "p": rep.p,
                "exponent": rep.exponent,
                "N": rep.n_paths,
                "lhs": rep.lhs,
                "se_lhs": rep.se_lhs,
                "rhs": rep.rhs,
                "se_rhs": rep.se_rhs,
                "constant": rep.constant,
                "variant": rep.variant,
                "ratio": rep.ratio,
                "verdict": rep.verdict,
            }
        )
        return ExperimentResult(exp_id, kind, rep.verdict, row, rep.to_dict())

    if kind.startswith("verify-discrete"):
        return _run_discrete(exp, kind, seed, exp_id, row, path)

    if kind == "cf-check":
        nu = cfgmod.parse_measure(exp["measure"], path + ".measure")
        triplet = LevyTriplet.build(exp["drift"], nu)
        thetas = cfgmod.parse_thetas(exp["thetas"], path + ".thetas")
        rep = cf_check(triplet, float(exp["t"]), thetas, int(exp["N"]), seed)
        verdict = "pass" if rep["pass"] else "fail"
        row.update(
            {
                "N": rep["n_paths"],
                "lhs": rep["sup_error"],
                "rhs": rep["bound"],
                "constant": 1.0,
                "variant": f"grid={thetas.shape[0]}",
                "ratio": rep["sup_error"] / rep["bound"],
                "verdict": verdict,
            }
        )
        detail = {
            "thetas": rep["thetas"].ravel().tolist(),
            "empirical_re": np.real(rep["empirical"]).tolist(),
            "empirical_im": np.imag(rep["empirical"]).tolist(),
            "analytic_re": np.real(rep["analytic"]).tolist(),
            "analytic_im": np.imag(rep["analytic"]).tolist(),
            "se": rep["se"].tolist(),
            "sup_error": rep["sup_error"],
            "bound": rep["bound"],
        }
        return ExperimentResult(exp_id, kind, verdict, row, detail)

    if kind == "poisson-lemma":
        rep = poisson_lemma_grid(exp["lambdas"], exp["ps"])
        verdict = "pass" if rep["pass"] else "fail"
        row.update(
            {
                "lhs": rep["max_ratio"],
                "rhs": 1.0,
                "variant": f"grid={len(rep['rows'])}",
                "ratio": rep["max_ratio"],
                "verdict": verdict,
            }
        )
        return ExperimentResult(exp_id, kind, verdict, row, rep)

    raise cfgmod.ConfigError(f"{path}.kind: unhandled kind {kind!r}")


def _run_discrete(exp, kind, seed, exp_id, row, path) -> ExperimentResult:
    tcfg = cfgmod.parse_trees(exp["trees"], path + ".trees")
    p = float(exp.get("p", 2.0))
    detail: dict = {"trees": tcfg["count"]}
    verdict = "pass"

    if kind == "verify-discrete-davis":
        worst = 0.0
        for M in _tree_instances(tcfg, seed):
            G, H, parts = ft.davis_decompose(M)
            st = ft.stats(M, p)
            v = max(
                max(
                    float(np.max(np.abs(G.values[k] + H.values[k] - M.values[k])))
                    for k in range(M.top + 1)
                ),
                ft.martingale_deviation(G),
                ft.martingale_deviation(H),
            )
            for k in range(M.top + 1):
                gn = ft.lnorm(parts.g[k], M.s)
                v = max(v, float(np.max(gn - 4.0 * parts.diff_max_prev[k])))
            zsum = sum(
                ft.lnorm(parts.z[k], M.s)[M.tree.ancestors[k]]
                for k in range(M.top + 1)
            )
            v = max(v, float(np.max(zsum - 2.0 * st.diff_maximal[:, -1])))
            worst = max(worst, v)
        verdict = "pass" if worst <= _TOL else "fail"
        row.update(
            {"p": p, "lhs": worst, "rhs": _TOL, "variant": f"trees={tcfg['count']}"}
        )
        detail["max_violation"] = worst

    elif kind in ("verify-discrete-doob", "verify-discrete-garsia"):
        phi, pair = _phi_pair(exp, path + ".phi")
        agg = -np.inf if kind == "verify-discrete-doob" else np.inf
        for M in _tree_instances(tcfg, seed):
            X = ft.abs_process(M)
            if kind == "verify-discrete-doob":
                rep = ft.doob_phi_check(X, pair)
                if not rep["pass"]:
                    verdict = "fail"
                agg = max(agg, rep["lhs"] / rep["rhs"] if rep["rhs"] > 0 else 0.0)
                row.update({"lhs": rep["lhs"], "rhs": rep["rhs"], "constant": rep["constant"]})
            else:
                rep = ft.garsia_gap(X, phi)
                if rep["gap"] < -_TOL:
                    verdict = "fail"
                agg = min(agg, rep["gap"])
                row.update({"lhs": rep["lhs"], "rhs": rep["rhs"]})
        row.update({"p": p, "ratio": agg, "variant": f"trees={tcfg['count']}"})
        detail["worst"] = agg

    elif kind == "verify-discrete-conditional-sum":
        _, pair = _phi_pair(exp, path + ".phi")
        worst = 0.0
        for M in _tree_instances(tcfg, seed):
            z = ft.AdaptedProcess.build(
                M.tree,
                [ft.lnorm(v - (M.values[k - 1][M.tree.parents[k - 1]] if k else 0.0), M.s)[:, None]
                 for k, v in enumerate(M.values)],
            )
            rep = ft.conditional_sum_check(z, pair)
            if not rep["pass"]:
                verdict = "fail"
            worst = max(worst, rep["lhs"] / rep["rhs"] if rep["rhs"] > 0 else 0.0)
            row.update({"lhs": rep["lhs"], "rhs": rep["rhs"], "constant": rep["constant"]})
        row.update({"ratio": worst, "variant": f"trees={tcfg['count']}"})
        detail["worst_ratio"] = worst

    elif kind == "verify-discrete-good-lambda":
        phi, _ = _phi_pair(exp, path + ".phi")
        beta = float(exp.get("beta", 4.0))
        delta = float(exp.get("delta", 0.5))
        eps = float(exp.get("eps", 0.125))
        n_applicable = 0
        for M in _tree_instances(tcfg, seed):
            st = ft.stats(M, p)
            rep = ft.good_lambda_check(
                st.s_p[:, -1], st.maximal[:, -1], M.tree.leaf_probs, phi, beta, delta, eps
            )
            if rep["applicable"]:
                n_applicable += 1
                if not rep["pass"]:
                    verdict = "fail"
                row.update(
                    {"lhs": rep["lhs"], "rhs": rep["rhs"], "constant": rep["constant"]}
                )
        row.update({"p": p, "variant": f"applicable={n_applicable}/{tcfg['count']}"})
        detail["n_applicable"] = n_applicable

    elif kind == "verify-discrete-bdg":
        phi, _ = _phi_pair(exp, path + ".phi")
        C = float(exp["C"])
        worst = 0.0
        for M in _tree_instances(tcfg, seed):
            rep = ft.bdg_phi_check(M, phi, p, C)
            if not rep["pass"]:
                verdict = "fail"
            worst = max(worst, rep["minimal_constant"])
            row.update({"lhs": rep["lhs"], "rhs": rep["rhs"]})
        row.update(
            {"p": p, "constant": C, "ratio": worst, "variant": f"trees={tcfg['count']}"}
        )
        detail["worst_minimal_constant"] = worst

    elif kind == "verify-discrete-previsible":
        phi, _ = _phi_pair(exp, path + ".phi")
        C = float(exp["C"]) if "C" in exp else None
        worst = 0.0
        for M in _tree_instances(tcfg, seed):
            w = _smallest_previsible_dominator(M)
            rep = ft.previsible_control_check(M, w, phi, p, C=C)
            if not rep["pass"]:
                verdict = "fail"
            worst = max(worst, rep["minimal_constant"])
            row.update(
                {
                    "lhs": rep["lhs"],
                    "rhs": rep["rhs_s"] + rep["rhs_w"],
                    "constant": rep["constant"],
                }
            )
        row.update({"p": p, "ratio": worst, "variant": f"trees={tcfg['count']}"})
        detail["worst_minimal_constant"] = worst

    else:
        raise cfgmod.ConfigError(f"{path}.kind: unhandled kind {kind!r}")

    row["verdict"] = verdict
    return ExperimentResult(exp_id, kind, verdict, row, detail)


def _smallest_previsible_dominator(M: ft.AdaptedProcess) -> ft.AdaptedProcess:
    """w_k = per-parent max of |m_k|: previsible and dominating."""
    tree = M.tree
    vals = []
    for k in range(M.top + 1):
        m_k = M.values[k] - (M.values[k - 1][tree.parents[k - 1]] if k else 0.0)
        nd = ft.lnorm(m_k, M.s)
        if k == 0:
            vals.append(np.full((1, 1), float(nd.max())))
        else:
            par = tree.parents[k - 1]
            mx = np.zeros(tree.width(k - 1))
            np.maximum.at(mx, par, nd)
            vals.append(mx[par][:, None])
    return ft.AdaptedProcess.build(tree, vals)


# -- report assembly ----------------------------------------------------


def _fmt(v) -> str:
    if v == "":
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def render_csv(rows: list) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(row[c]) for c in CSV_COLUMNS) + "\n")
    return buf.getvalue()


def _check_finite(result: ExperimentResult) -> None:
    for key in ("lhs", "se_lhs", "rhs", "se_rhs"):
        v = result.row.get(key)
        if isinstance(v, float) and np.isnan(v):
            raise RuntimeError(
                f"experiment {result.exp_id}: estimate {key} is NaN"
            )


def run_config(cfg: dict, seed_override=None, threads=None) -> tuple:
    """Run every experiment (or the sweep) in a validated config.

    Returns (exit_code, report_dict, csv_text).
    """
    cfgmod.validate(cfg)
    set_threads(threads)
    seed = int(seed_override if seed_override is not None else cfg.get("seed", 0))
    chash = cfgmod.config_hash(cfg, seed)
    ranges = cfgmod.find_ranges(cfg)

    rows, details, verdicts = [], [], []
    sweep_summary = None
    timings = []

    if ranges:
        rpath, values = ranges[0]
        series = []
        for v in values:
            sub = cfgmod.substitute_range(cfg, v)
            exp = sub["experiments"][0]
            exp = dict(exp, id=f"{exp.get('id', exp['kind'])}@{rpath.rsplit('.', 1)[-1]}={v}")
            t0 = time.perf_counter()
            res = run_experiment(exp, seed)
            timings.append((res.exp_id, time.perf_counter() - t0))
            _check_finite(res)
            res.row["config_hash"] = chash
            res.row["variant"] = f"{rpath.rsplit('.', 1)[-1]}={v}"
            rows.append(res.row)
            details.append({"id": res.exp_id, "kind": res.kind, **res.detail})
            verdicts.append(res.verdict)
            series.append(res)
        sweep_summary = _trend_summary(rpath, values, series)
    else:
        for i, exp in enumerate(cfg["experiments"]):
            exp = dict(exp)
            exp.setdefault("id", f"{exp['kind']}#{i}")
            t0 = time.perf_counter()
            res = run_experiment(exp, seed)
            timings.append((res.exp_id, time.perf_counter() - t0))
            _check_finite(res)
            res.row["config_hash"] = chash
            rows.append(res.row)
            details.append({"id": res.exp_id, "kind": res.kind, **res.detail})
            verdicts.append(res.verdict)

    report = {
        "schema": cfgmod.SCHEMA_VERSION,
        "config_hash": chash,
        "seed": seed,
        "experiments": details,
        "verdicts": verdicts,
    }
    if sweep_summary is not None:
        report["sweep"] = sweep_summary
    code = 0 if all(v in ("pass", "pass-with-degenerate-constant") for v in verdicts) else 2
    return code, report, render_csv(rows), timings


def _trend_summary(rpath: str, values: list, series: list) -> dict:
    lhs = [r.row.get("lhs") for r in series]
    se = [r.row.get("se_lhs") for r in series]
    ratios = [r.row.get("ratio") for r in series]
    pairs = []
    numeric = all(isinstance(x, float) for x in lhs)
    se_ok = all(isinstance(x, float) for x in se)
    if numeric and se_ok:
        for a, b in zip(range(len(lhs) - 1), range(1, len(lhs))):
            delta = abs(lhs[b] - lhs[a])
            bound = 3.0 * (se[a] + se[b])
            pairs.append(
                {"from": values[a], "to": values[b], "delta": delta, "bound": bound,
                 "cauchy_ok": bool(delta <= bound)}
            )
    mono = None
    if all(isinstance(x, float) for x in ratios):
        diffs = np.diff(ratios)
        mono = (
            "nonincreasing"
            if (diffs <= 0).all()
            else "nondecreasing" if (diffs >= 0).all() else "mixed"
        )
    return {
        "parameter": rpath,
        "values": list(values),
        "lhs": lhs,
        "se_lhs": se,
        "cauchy_pairs": pairs,
        "all_cauchy": bool(all(p["cauchy_ok"] for p in pairs)) if pairs else None,
        "ratio_trend": mono,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="levybdg", description="Run verification campaigns from a config file."
    )
    ap.add_argument("--config", required=True, help="path to the JSON config")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument(
        "--threads", type=int, default=None, help="worker count (never changes results)"
    )
    ap.add_argument("--out", default="reports", help="output directory")
    ap.add_argument(
        "--format", choices=("json", "csv", "both"), default="both", dest="fmt"
    )
    args = ap.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 1

    try:
        code, report, csv_text, timings = run_config(
            cfg, seed_override=args.seed, threads=args.threads
        )
    except (cfgmod.ConfigError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    os.makedirs(args.out, exist_ok=True)
    base = cfg.get("out", "report")
    if args.fmt in ("json", "both"):
        with open(os.path.join(args.out, base + ".json"), "w") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    if args.fmt in ("csv", "both"):
        with open(os.path.join(args.out, base + ".csv"), "w") as fh:
            fh.write(csv_text)

    for exp_id, dt in timings:
        print(f"{exp_id}: {dt * 1000.0:.1f} ms")
    n_fail = sum(1 for v in report["verdicts"] if v == "fail")
    print(
        f"{len(report['verdicts'])} experiment(s), {n_fail} failed; reports in {args.out}/"
    )
    return code


if __name__ == "__main__":
    sys.exit(main())

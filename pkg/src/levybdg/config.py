"""Experiment config files: versioned JSON schema, strict validation.

Unknown keys are rejected and every error names the offending field
path.  Exactly one leaf may be declared as a sweep range
(``{"range": [...]}``) among: path count N, truncation radius eps,
partition fineness n_intervals, and the intensity scale rate_scale.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .convex import ConvexFunction
from .engine import IntegrandSpec
from .prm import MarkMeasure

SCHEMA_VERSION = 1

_RANGEABLE = {"N", "eps", "n_intervals", "rate_scale"}

# kind -> (required keys, optional keys)
_KINDS = {
    "constants": ({"p", "r"}, {"n", "c_p"}),
    "verify-continuous-i": ({"model", "measure", "integrand", "T", "q", "N"}, set()),
    "verify-continuous-ii": ({"model", "measure", "integrand", "T", "r", "N"}, set()),
    "verify-continuous-iii": ({"model", "measure", "integrand", "T", "n", "N"}, set()),
    "verify-continuous-corollary": (
        {"model", "drift", "measure", "integrand", "T", "r", "N"},
        set(),
    ),
    "verify-discrete-davis": ({"trees"}, {"p"}),
    "verify-discrete-doob": ({"trees"}, {"phi"}),
    "verify-discrete-garsia": ({"trees"}, {"phi"}),
    "verify-discrete-conditional-sum": ({"trees"}, {"phi"}),
    "verify-discrete-good-lambda": ({"trees"}, {"phi", "p", "beta", "delta", "eps"}),
    "verify-discrete-bdg": ({"trees", "C"}, {"phi", "p"}),
    "verify-discrete-previsible": ({"trees"}, {"phi", "p", "C"}),
    "cf-check": ({"drift", "measure", "t", "thetas", "N"}, set()),
    "poisson-lemma": ({"lambdas", "ps"}, set()),
}

_COMMON = {"id", "kind", "seed"}


class ConfigError(ValueError):
    """Schema violation; message carries the field path."""


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _require_keys(d: dict, allowed: set, required: set, path: str):
    if not isinstance(d, dict):
        _fail(path, "must be an object")
    for k in d:
        if k not in allowed:
            _fail(f"{path}.{k}", "unknown key")
    for k in required:
        if k not in d:
            _fail(f"{path}.{k}", "missing required key")


def _number(v, path, lo=None, hi=None, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, "must be a number")
    if integer and int(v) != v:
        _fail(path, "must be an integer")
    if lo is not None and v < lo:
        _fail(path, f"must be >= {lo}")
    if hi is not None and v > hi:
        _fail(path, f"must be <= {hi}")
    return int(v) if integer else float(v)


def _norm_exponent(v, path) -> float:
    if v == "inf":
        return np.inf
    return _number(v, path, lo=1.0)


def validate(cfg: dict) -> dict:
    """Structural validation; returns the config unchanged."""
    _require_keys(
        cfg, {"schema", "seed", "out", "experiments"}, {"schema", "experiments"}, "$"
    )
    if cfg["schema"] != SCHEMA_VERSION:
        _fail("$.schema", f"unsupported schema version {cfg['schema']!r}")
    if "seed" in cfg:
        _number(cfg["seed"], "$.seed", lo=0, integer=True)
    exps = cfg["experiments"]
    if not isinstance(exps, list) or not exps:
        _fail("$.experiments", "must be a non-empty list")
    for i, exp in enumerate(exps):
        path = f"$.experiments[{i}]"
        if not isinstance(exp, dict):
            _fail(path, "must be an object")
        kind = exp.get("kind")
        if kind not in _KINDS:
            _fail(f"{path}.kind", f"unknown experiment kind {kind!r}")
        required, optional = _KINDS[kind]
        _require_keys(exp, _COMMON | required | optional, {"kind"} | required, path)
        if "seed" in exp:
            _number(exp["seed"], f"{path}.seed", lo=0, integer=True)
    ranges = find_ranges(cfg)
    if len(ranges) > 1:
        _fail(ranges[1][0], "only one parameter may carry a range")
    if ranges and len(exps) != 1:
        _fail(ranges[0][0], "sweeps need a single-experiment config")
    return cfg


def find_ranges(node, path="$"):
    """All {'range': [...]} leaves with their field paths."""
    found = []
    if isinstance(node, dict):
        if set(node.keys()) == {"range"}:
            leaf = path.rsplit(".", 1)[-1]
            if leaf not in _RANGEABLE:
                _fail(path, f"field is not sweepable (allowed: {sorted(_RANGEABLE)})")
            if not isinstance(node["range"], list) or not node["range"]:
                _fail(path, "range must be a non-empty list")
            found.append((path, node["range"]))
        else:
            for k, v in node.items():
                found.extend(find_ranges(v, f"{path}.{k}"))
    elif isinstance(node, list):
        for i, v in enumerate(node):
            found.extend(find_ranges(v, f"{path}[{i}]"))
    return found


def substitute_range(cfg: dict, value):
    """Copy of the config with its single range leaf replaced by value."""

    def sub(node):
        if isinstance(node, dict):
            if set(node.keys()) == {"range"}:
                return value
            return {k: sub(v) for k, v in node.items()}
        if isinstance(node, list):
            return [sub(v) for v in node]
        return node

    return sub(cfg)


def config_hash(cfg: dict, seed: int) -> str:
    """Hash of the resolved config; excludes execution-only parameters."""
    resolved = {k: v for k, v in cfg.items() if k not in ("out",)}
    resolved["seed"] = seed
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- typed parsers used by the runners --------------------------------


def parse_model(d: dict, path: str):
    from .inequalities import BanachModel

    _require_keys(d, {"d", "s", "p", "c_p"}, {"p"}, path)
    try:
        return BanachModel(
            d=_number(d.get("d", 1), f"{path}.d", lo=1, integer=True),
            s=_norm_exponent(d.get("s", 2.0), f"{path}.s"),
            p=_number(d["p"], f"{path}.p"),
            c_p=_number(d.get("c_p", 1.0), f"{path}.c_p"),
        )
    except ValueError as e:
        _fail(path, str(e))


def parse_measure(d: dict, path: str) -> MarkMeasure:
    keys = {"atoms", "density", "mass", "lo", "hi", "scale", "eps", "rate_scale"}
    _require_keys(d, keys, set(), path)
    if "atoms" in d and "density" in d:
        _fail(path, "atoms and density are mutually exclusive")
    eps = _number(d.get("eps", 0.0), f"{path}.eps", lo=0.0)
    rate = _number(d.get("rate_scale", 1.0), f"{path}.rate_scale", lo=0.0)
    if "atoms" in d:
        entries = d["atoms"]
        if not isinstance(entries, list):
            _fail(f"{path}.atoms", "must be a list")
        zs, ws = [], []
        for i, e in enumerate(entries):
            _require_keys(e, {"z", "w"}, {"z", "w"}, f"{path}.atoms[{i}]")
            z = e["z"] if isinstance(e["z"], list) else [e["z"]]
            zs.append([_number(v, f"{path}.atoms[{i}].z") for v in z])
            ws.append(_number(e["w"], f"{path}.atoms[{i}].w", lo=0.0) * rate)
        if not zs:
            return MarkMeasure.from_atoms(np.zeros((0, 1)), np.zeros(0))
        try:
            return MarkMeasure.from_atoms(np.array(zs), np.array(ws), eps=eps)
        except ValueError as e:
            _fail(path, str(e))
    if "density" not in d:
        _fail(path, "need either atoms or density")
    mass = _number(d.get("mass", 1.0), f"{path}.mass", lo=0.0) * rate
    if d["density"] == "uniform":
        nu = MarkMeasure.uniform_density(
            _number(d.get("lo", 0.0), f"{path}.lo", lo=0.0),
            _number(d.get("hi", 1.0), f"{path}.hi"),
            mass,
        )
    elif d["density"] == "exponential":
        nu = MarkMeasure.exponential_density(
            _number(d.get("scale", 1.0), f"{path}.scale"), mass
        )
    else:
        _fail(f"{path}.density", f"unknown density {d['density']!r}")
    from .prm import truncate

    return truncate(nu, eps) if eps > 0 else nu


def parse_integrand(d: dict, path: str) -> IntegrandSpec:
    keys = {
        "kind",
        "value",
        "matrix",
        "matrices",
        "values",
        "threshold",
        "lo",
        "hi",
        "n_intervals",
    }
    _require_keys(d, keys, {"kind"}, path)
    kind = d["kind"]
    nj = _number(d.get("n_intervals", 1), f"{path}.n_intervals", lo=1, integer=True)
    if kind == "constant":
        if "value" not in d:
            _fail(f"{path}.value", "missing required key")
        val = d["value"] if isinstance(d["value"], list) else [d["value"]]
        return IntegrandSpec("constant", value=tuple(val), n_intervals=nj)
    if kind == "linear_in_mark":
        if "matrix" not in d:
            _fail(f"{path}.matrix", "missing required key")
        return IntegrandSpec(
            "linear_in_mark", matrix=_matrix(d["matrix"], f"{path}.matrix"), n_intervals=nj
        )
    if kind == "adapted_threshold":
        spec = IntegrandSpec(
            "adapted_threshold",
            matrix=_matrix(d["matrix"], f"{path}.matrix") if "matrix" in d else (),
            threshold=_number(d.get("threshold", 1), f"{path}.threshold", lo=0, integer=True),
            lo=_number(d.get("lo", 1.0), f"{path}.lo"),
            hi=_number(d.get("hi", 1.0), f"{path}.hi"),
            n_intervals=nj,
        )
        return spec
    if kind == "matrix_per_interval":
        if "matrices" not in d:
            _fail(f"{path}.matrices", "missing required key")
        mats = tuple(_matrix(m, f"{path}.matrices[{i}]") for i, m in enumerate(d["matrices"]))
        return IntegrandSpec("matrix_per_interval", matrices=mats)
    if kind == "table_per_interval":
        if "values" not in d:
            _fail(f"{path}.values", "missing required key")
        tabs = tuple(
            _matrix(row, f"{path}.values[{i}]") for i, row in enumerate(d["values"])
        )
        return IntegrandSpec("table_per_interval", tables=tabs)
    _fail(f"{path}.kind", f"unknown integrand kind {kind!r}")


def _matrix(m, path):
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        _fail(path, "must be a list of rows")
    return tuple(tuple(_number(v, path) for v in row) for row in m)


def parse_phi(d: dict, path: str) -> ConvexFunction:
    _require_keys(d, {"kind", "p", "scale", "t", "phi"}, {"kind"}, path)
    try:
        return ConvexFunction.from_config(d)
    except (ValueError, KeyError) as e:
        _fail(path, str(e))


def parse_trees(d: dict, path: str) -> dict:
    keys = {"generator", "seed", "count", "depth", "branching", "d", "s", "increments"}
    _require_keys(d, keys, {"generator"}, path)
    gen = d["generator"]
    if gen not in ("random_tree", "binary_walk", "explicit"):
        _fail(f"{path}.generator", f"unknown generator {gen!r}")
    if gen == "explicit":
        br = d.get("branching")
        if not isinstance(br, list) or not br:
            _fail(f"{path}.branching", "explicit trees need per-level branching factors")
        branching = [
            _number(b, f"{path}.branching[{i}]", lo=1, hi=3, integer=True)
            for i, b in enumerate(br)
        ]
        if len(branching) > 5:
            _fail(f"{path}.branching", "at most 5 levels")
        incr = d.get("increments", "normal")
        if incr not in ("normal", "rademacher"):
            _fail(f"{path}.increments", f"unknown increment law {incr!r}")
        if incr == "rademacher" and any(b != 2 for b in branching):
            _fail(f"{path}.increments", "rademacher steps need branching 2")
    else:
        branching = _number(
            d.get("branching", 3), f"{path}.branching", lo=1, hi=3, integer=True
        )
        incr = "normal"
    return {
        "generator": gen,
        "seed": _number(d.get("seed", 0), f"{path}.seed", lo=0, integer=True),
        "count": _number(d.get("count", 1), f"{path}.count", lo=1, integer=True),
        "depth": _number(d.get("depth", 3), f"{path}.depth", lo=1, hi=5, integer=True),
        "branching": branching,
        "increments": incr,
        "d": _number(d.get("d", 1), f"{path}.d", lo=1, hi=3, integer=True),
        "s": _norm_exponent(d.get("s", 2.0), f"{path}.s"),
    }


def parse_thetas(d: dict, path: str) -> np.ndarray:
    _require_keys(d, {"count", "lo", "hi"}, {"count", "lo", "hi"}, path)
    count = _number(d["count"], f"{path}.count", lo=2, integer=True)
    lo = _number(d["lo"], f"{path}.lo")
    hi = _number(d["hi"], f"{path}.hi")
    return np.linspace(lo, hi, count)[:, None]

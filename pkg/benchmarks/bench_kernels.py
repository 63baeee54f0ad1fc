"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the full per-path pipeline (sampling, event build, path scan) on
identical inputs under both backends, reports wall times, and asserts
that the outputs agree so a speedup never comes from divergence.

    python benchmarks/bench_kernels.py [n_paths]
"""

import sys
import time

import numpy as np

from levybdg import kernels
from levybdg.engine import IntegrandSpec, compile_campaign, evaluate

CASES = {
    "constant/delta1": (
        np.array([[1.0]]),
        np.array([1.0]),
        IntegrandSpec("constant", value=(1.0,)),
    ),
    "mark-linear/3atom": (
        np.array([[0.5], [1.0], [2.0]]),
        np.array([1.0, 0.5, 0.25]),
        IntegrandSpec("linear_in_mark", matrix=((1.0,),)),
    ),
    "adapted/3atom/J=8": (
        np.array([[0.5], [1.0], [2.0]]),
        np.array([1.0, 0.5, 0.25]),
        IntegrandSpec("adapted_threshold", threshold=1, lo=1.0, hi=2.0, n_intervals=8),
    ),
}


def run(backend: str, camp, n_paths: int):
    kernels.set_backend(backend)
    t0 = time.perf_counter()
    st = evaluate(camp, seed=7, n_paths=n_paths, exponents=[2.0, 4.0])
    return time.perf_counter() - t0, st


def main(n_paths: int = 200_000) -> None:
    if not kernels.HAVE_NUMBA:
        print("numba not available; nothing to compare")
        return
    kernels.set_backend("numba")
    kernels.numba_backend.warmup()
    print(f"{'case':24s} {'numpy':>10s} {'numba':>10s} {'speedup':>9s}  agree")
    for name, (atoms, w, spec) in CASES.items():
        camp = compile_campaign(atoms, w, 1.0, spec, s=2.0)
        t_np, a = run("numpy", camp, n_paths)
        t_nb, b = run("numba", camp, n_paths)
        same = (
            np.array_equal(a.counts, b.counts)
            and np.array_equal(a.sup, b.sup)
            and np.array_equal(a.end, b.end)
            and np.array_equal(a.jump_pows, b.jump_pows)
            and np.array_equal(a.nu_ints, b.nu_ints)
        )
        print(
            f"{name:24s} {t_np:9.3f}s {t_nb:9.3f}s {t_np / t_nb:8.1f}x  {same}"
        )
        if not same:
            raise SystemExit(f"backend outputs diverged on {name}")
    kernels.set_backend("auto")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 200_000)

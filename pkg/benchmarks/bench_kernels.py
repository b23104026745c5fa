"""Compare the jitted and pure-numpy kernel paths.

Kernel timings call both implementations in one process. The end-to-end
timing runs a bootstrap in two subprocesses, one with
``PDEBOUNDS_DISABLE_NUMBA=1``, so the dispatch flag itself is exercised.

    python benchmarks/bench_kernels.py [--repeat 5] [--json]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from pdebounds import kernels, oracle_sim
from pdebounds.lp import equality_system, build_cross_world_lp

E2E_SNIPPET = """
import time
from pdebounds import kernels, oracle_sim
from pdebounds.bounds import Assumption
from pdebounds.inference import regime_estimator, weighted_bootstrap_ci
spec = oracle_sim.random_world(5, kind="npsem", n_r=3, n_m=3)
data = oracle_sim.sample_dataset(spec, 2000, seed=1)
est = regime_estimator(Assumption.NPSEM_IE_LP)
weighted_bootstrap_ci(data, est, B=5, seed=0)
t = time.perf_counter()
res = weighted_bootstrap_ci(data, est, B={B}, seed=0)
print(kernels.backend(), time.perf_counter() - t, res.ci_lower, res.ci_upper)
"""


def best_of(fn, repeat: int, number: int = 1) -> float:
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_counts(repeat: int) -> list[dict]:
    rng = np.random.default_rng(0)
    rows = []
    for n, B, size in ((2000, 200, 32), (20000, 200, 128)):
        idx = rng.integers(0, size, n)
        W = rng.exponential(size=(B, n))
        ref = kernels.weighted_counts_batch_numpy(idx, W, size)
        assert np.allclose(kernels.weighted_counts_batch_numba(idx, W, size), ref)
        rows.append({"kernel": "weighted_counts_batch", "case": f"n={n} B={B} cells={size}",
                     "numpy_s": best_of(lambda: kernels.weighted_counts_batch_numpy(idx, W, size), repeat),
                     "numba_s": best_of(lambda: kernels.weighted_counts_batch_numba(idx, W, size), repeat)})
    return rows


def bench_simplex(repeat: int) -> list[dict]:
    rows = []
    for p in (3, 5, 8):
        spec = oracle_sim.random_world(p, kind="npsem", n_r=p, n_m=3)
        lp = build_cross_world_lp(oracle_sim.enumerate_truth(spec).law)
        A, b = equality_system(lp)
        c, lo, hi = lp.x, lp.full_box[:, 0], lp.full_box[:, 1]
        z_np, s_np = kernels.simplex_numpy(c, A, b, lo, hi)
        z_nb, s_nb = kernels.simplex_numba(c, A, b, lo, hi)
        assert s_np == s_nb == kernels.OPTIMAL and abs(c @ z_np - c @ z_nb) < 1e-9
        rows.append({"kernel": "bounded_simplex", "case": f"p={p} vars={len(c)}",
                     "numpy_s": best_of(lambda: kernels.simplex_numpy(c, A, b, lo, hi), repeat, 5),
                     "numba_s": best_of(lambda: kernels.simplex_numba(c, A, b, lo, hi), repeat, 5)})
    return rows


def bench_end_to_end(B: int) -> list[dict]:
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, PDEBOUNDS_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, "-c", E2E_SNIPPET.format(B=B)], env=env, capture_output=True,
                              text=True, check=True)
        name, secs, lo, hi = proc.stdout.split()
        out[name] = (float(secs), float(lo), float(hi))
    assert out["numba"][1:] == out["numpy"][1:], "backends disagree"
    return [{"kernel": "bootstrap NpsemIeLp", "case": f"n=2000 p=3 B={B}",
             "numpy_s": out["numpy"][0], "numba_s": out["numba"][0]}]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--B", type=int, default=200)
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args(argv)
    if not kernels.USE_NUMBA:
        print("numba path disabled; unset PDEBOUNDS_DISABLE_NUMBA to compare", file=sys.stderr)
        return 1
    rows = bench_counts(args.repeat) + bench_simplex(args.repeat) + bench_end_to_end(args.B)
    for r in rows:
        r["speedup"] = r["numpy_s"] / r["numba_s"]
    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    print(f"{'kernel':<24}{'case':<26}{'numpy ms':>11}{'numba ms':>11}{'speedup':>9}")
    for r in rows:
        print(f"{r['kernel']:<24}{r['case']:<26}{1e3 * r['numpy_s']:>11.3f}{1e3 * r['numba_s']:>11.3f}"
              f"{r['speedup']:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

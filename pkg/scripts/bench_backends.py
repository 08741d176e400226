#!/usr/bin/env python3
"""Time the numba and numpy kernel lanes on identical workloads.

Runs the hot paths (center assignment via Lloyd, full coreset builds, a
streaming pass) at a few sizes and prints per-lane wall times plus the
speedup. The first numba call pays JIT compilation; a warmup solve keeps
that out of the timings.

    python3 scripts/bench_backends.py            # default sizes
    python3 scripts/bench_backends.py --n 50000 --dim 1000 --nnz 8
"""

import argparse
import time

import numpy as np

from kmcoreset import (
    CoresetConfig,
    CoresetTree,
    SolverConfig,
    SparseVector,
    WeightedSet,
    kmean_coreset,
    set_backend,
    solve_kmeans,
)


def make_data(rng, n, dim, nnz):
    pts = []
    for _ in range(n):
        idx = np.sort(rng.choice(dim, size=nnz, replace=False)).astype(np.int64)
        pts.append(SparseVector(dim, idx, rng.standard_normal(nnz)))
    return WeightedSet(pts)


def timed(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(name, fn, repeats):
    rows = {}
    for lane in ("numpy", "numba"):
        set_backend(lane)
        fn()  # warm caches (and JIT on the numba lane)
        rows[lane] = timed(fn, repeats)
    set_backend(None)
    speedup = rows["numpy"] / rows["numba"] if rows["numba"] > 0 else float("inf")
    print(f"{name:<46} numpy {rows['numpy'] * 1e3:9.1f} ms   "
          f"numba {rows['numba'] * 1e3:9.1f} ms   x{speedup:.1f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--dim", type=int, default=500)
    ap.add_argument("--nnz", type=int, default=6)
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"data: n={args.n} dim={args.dim} nnz={args.nnz}")
    P = make_data(rng, args.n, args.dim, args.nnz)
    small = P.subset(list(range(min(2000, P.n))))

    solver = SolverConfig(iterations=5, rng_seed=1)
    bench_case(
        f"solve_kmeans k={args.k}, 5 Lloyd iterations",
        lambda: solve_kmeans(P, args.k, solver), args.repeats)

    cfg = CoresetConfig(epsilon=0.2, k=args.k, fixed_m=8 * args.k, solver=solver)
    bench_case(
        f"kmean_coreset fixed_m={8 * args.k}",
        lambda: kmean_coreset(P, cfg), args.repeats)

    fw_cfg = CoresetConfig(epsilon=0.2, k=args.k, fixed_m=4 * args.k,
                           one_mean_method="frank_wolfe", solver=solver)
    bench_case(
        f"kmean_coreset frank_wolfe fixed_m={4 * args.k} (n=2000)",
        lambda: kmean_coreset(small, fw_cfg), args.repeats)

    stream_cfg = CoresetConfig(epsilon=0.3, k=args.k, fixed_m=4 * args.k,
                               solver=solver)

    def stream():
        tree = CoresetTree(stream_cfg, leaf_size=512)
        tree.extend(P)
        tree.finalize()

    bench_case("streaming pass, leaf_size=512", stream, args.repeats)


if __name__ == "__main__":
    main()

"""Command-line driver: build coresets, run streams, evaluate, sweep.

Exit codes: 0 success, 2 bad flags, 3 input/parse failure, 4 algorithm
failure. Every command is deterministic given --seed.

The evaluation metric is the relative error of clustering-on-the-coreset:
solve k-means on the coreset, price those centers on the full data (C_t),
divide by the full-data solve C_k, subtract one. C_k is the best of
--restarts kmeans++ starts each run to convergence, optionally cached.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .baselines import SamplingConfig, sensitivity_coreset, uniform_coreset
from .coreset import Coreset, CoresetConfig, kmean_coreset
from .io import ParseError, StreamFormat, read_points, read_weighted_set, write_coreset, read_coreset
from .kmeans import SolverConfig, cost, solve_kmeans
from .sparse_core import WeightedSet
from .streaming import CoresetTree, combine_shard_coresets

METHODS = ("ours", "uniform", "sensitivity")

GT_TOL = 1e-9


@dataclass
class EvalReport:
    method: str
    coreset_size: int
    k: int
    cost_on_full: float
    baseline_cost: float
    eps_hat: float
    wall_times: dict
    seed: int
    ground_truth: dict = field(default_factory=dict)


def eps_hat_of(cost_on_full: float, baseline_cost: float) -> float:
    if baseline_cost == 0.0:
        return 0.0 if cost_on_full == 0.0 else math.inf
    return cost_on_full / baseline_cost - 1.0


def _ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _fmt_from_args(args) -> StreamFormat:
    return StreamFormat(kind=args.format, dim=args.dim, index_base=args.index_base)


def _load_input(args) -> WeightedSet:
    return read_weighted_set(args.input, _fmt_from_args(args))


def _build_solver(args, seed: int) -> SolverConfig:
    method = "exact" if args.opt == "exact" else "kmeanspp_then_lloyd"
    return SolverConfig(method=method, iterations=args.build_iters,
                        restarts=args.build_restarts, rng_seed=seed)


def _coreset_config(args, seed: int) -> CoresetConfig:
    # --size on method=ours pins m directly; epsilon then only labels the
    # output, so a default label is fine when the flag is absent
    eps = args.epsilon if args.epsilon is not None else 0.1
    return CoresetConfig(epsilon=eps, k=args.k, one_mean_method=args.one_mean,
                         solver=_build_solver(args, seed),
                         fixed_m=args.size if args.method == "ours" else None)


def _build_offline(P: WeightedSet, args, seed: int) -> Coreset:
    if args.method == "ours":
        return kmean_coreset(P, _coreset_config(args, seed))
    sampling = SamplingConfig(size=args.size, rng_seed=seed,
                              bicriteria_k=args.bicriteria_k or args.k,
                              solver=_build_solver(args, seed))
    if args.method == "uniform":
        return uniform_coreset(P, sampling)
    return sensitivity_coreset(P, sampling)


def _check_build_flags(parser: argparse.ArgumentParser, args) -> None:
    if args.method == "ours":
        if args.epsilon is None and args.size is None:
            parser.error("method 'ours' needs --epsilon or --size")
        if args.epsilon is not None and not (0.0 < args.epsilon < 1.0):
            parser.error("--epsilon must lie in (0, 1)")
    else:
        if args.size is None:
            parser.error(f"method {args.method!r} needs --size")
        if args.epsilon is not None:
            parser.error(f"--epsilon does not apply to method {args.method!r}")
    if args.size is not None and args.size < 1:
        parser.error("--size must be >= 1")


def cmd_build(parser, args) -> int:
    _check_build_flags(parser, args)
    t0 = time.perf_counter()
    try:
        P = _load_input(args)
    except (OSError, ParseError, ValueError) as exc:
        return _fail(3, f"reading {args.input}: {exc}")
    load_ms = _ms(t0)
    t0 = time.perf_counter()
    try:
        S = _build_offline(P, args, args.seed)
    except Exception as exc:
        return _fail(4, f"coreset construction failed: {exc}")
    build_ms = _ms(t0)
    try:
        write_coreset(S, args.out)
    except OSError as exc:
        return _fail(3, f"writing {args.out}: {exc}")
    print(json.dumps({"command": "build", "method": args.method,
                      "n": len(P.points), "coreset_size": S.size,
                      "out": args.out,
                      "wall_times": {"load_ms": load_ms, "build_ms": build_ms}}))
    return 0


def cmd_stream(parser, args) -> int:
    if args.method != "ours":
        parser.error("cmd stream builds only method 'ours'")
    _check_build_flags(parser, args)
    if args.machines < 1:
        parser.error("--machines must be >= 1")
    if args.trace and args.machines != 1:
        parser.error("--trace requires --machines 1")
    cfg = _coreset_config(args, args.seed)
    trace_file = None
    hook = None
    if args.trace:
        trace_file = open(args.trace, "w", encoding="utf-8")
        trace_file.write("points_seen,live_buckets,resident_points\n")

        def hook(seen: int, buckets: int, resident: int) -> None:
            trace_file.write(f"{seen},{buckets},{resident}\n")

    t0 = time.perf_counter()
    try:
        trees = [CoresetTree(cfg, leaf_size=args.leaf_size,
                             instrument=hook if m == 0 else None)
                 for m in range(args.machines)]
        shard_sizes = [0] * args.machines
        i = 0
        try:
            for p, w in read_points(args.input, _fmt_from_args(args)):
                m = i % args.machines
                trees[m].insert(p, w)
                shard_sizes[m] += 1
                i += 1
        except (OSError, ParseError, ValueError) as exc:
            return _fail(3, f"reading {args.input}: {exc}")
        if i == 0:
            return _fail(3, f"reading {args.input}: no points in input")
        try:
            finalized = [t.finalize() for t in trees if t.points_seen > 0]
            S = combine_shard_coresets(finalized, cfg)
        except Exception as exc:
            return _fail(4, f"streaming construction failed: {exc}")
    finally:
        if trace_file is not None:
            trace_file.close()
    stream_ms = _ms(t0)
    try:
        write_coreset(S, args.out)
    except OSError as exc:
        return _fail(3, f"writing {args.out}: {exc}")
    summary = {"command": "stream", "machines": args.machines,
               "points_seen": i, "coreset_size": S.size,
               "epsilon_label": S.epsilon, "out": args.out,
               "wall_times": {"stream_ms": stream_ms}}
    if args.machines > 1:
        summary["communicated_points"] = sum(c.size for c in finalized)
        summary["shard_sizes"] = shard_sizes
    print(json.dumps(summary))
    return 0


def _eval_solver(args, seed: int) -> SolverConfig:
    return SolverConfig(method="kmeanspp_then_lloyd", iterations=args.solver_iters,
                        restarts=args.restarts, rng_seed=seed,
                        convergence_tol=GT_TOL)


def _gt_key(P: WeightedSet, k: int, cfg: SolverConfig) -> dict:
    return {"n": len(P.points), "dim": P.dim, "total_weight": repr(P.total_weight),
            "additive": repr(P.additive), "k": k, "seed": cfg.rng_seed,
            "restarts": cfg.restarts, "iterations": cfg.iterations,
            "tol": cfg.convergence_tol}


def ground_truth_cost(P: WeightedSet, k: int, cfg: SolverConfig,
                      cache_path: str | None = None) -> tuple[float, dict]:
    """Full-data C_k: best of cfg.restarts seeded runs to convergence."""
    key = _gt_key(P, k, cfg)
    meta = {"restarts": cfg.restarts, "convergence_tol": cfg.convergence_tol,
            "max_iterations": cfg.iterations, "cached": False}
    if cache_path and os.path.exists(cache_path):
        with open(cache_path, encoding="utf-8") as f:
            entry = json.load(f)
        if entry.get("key") == key:
            meta["cached"] = True
            return float(entry["cost"]), meta
    _, best = solve_kmeans(P, k, cfg)
    if cache_path:
        with open(cache_path, "w", encoding="utf-8") as f:
            json.dump({"key": key, "cost": best}, f)
    return best, meta


def evaluate_coreset(P: WeightedSet, S: Coreset, k: int, method: str,
                     seed: int, eval_cfg: SolverConfig,
                     baseline_cost: float, gt_meta: dict,
                     extra_times: dict | None = None) -> EvalReport:
    t0 = time.perf_counter()
    centers, _ = solve_kmeans(S.base, k, eval_cfg)
    solve_ms = _ms(t0)
    t0 = time.perf_counter()
    cost_on_full = cost(P, centers)
    eval_ms = _ms(t0)
    times = dict(extra_times or {})
    times.update({"coreset_solve_ms": solve_ms, "eval_ms": eval_ms})
    return EvalReport(method=method, coreset_size=S.size, k=k,
                      cost_on_full=cost_on_full, baseline_cost=baseline_cost,
                      eps_hat=eps_hat_of(cost_on_full, baseline_cost),
                      wall_times=times, seed=seed, ground_truth=gt_meta)


def cmd_eval(parser, args) -> int:
    t0 = time.perf_counter()
    try:
        P = _load_input(args)
        S = read_coreset(args.coreset)
    except (OSError, ParseError, ValueError) as exc:
        return _fail(3, str(exc))
    load_ms = _ms(t0)
    eval_cfg = _eval_solver(args, args.seed)
    try:
        t0 = time.perf_counter()
        baseline, gt_meta = ground_truth_cost(P, args.k, eval_cfg,
                                              args.baseline_cache)
        gt_ms = _ms(t0)
        report = evaluate_coreset(P, S, args.k, args.method, args.seed,
                                  eval_cfg, baseline, gt_meta,
                                  {"load_ms": load_ms, "baseline_ms": gt_ms})
    except Exception as exc:
        return _fail(4, f"evaluation failed: {exc}")
    payload = json.dumps(dataclasses.asdict(report), indent=2)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as f:
                f.write(payload + "\n")
        except OSError as exc:
            return _fail(3, f"writing {args.out}: {exc}")
    else:
        print(payload)
    return 0


def _compare_cell(P: WeightedSet, method: str, size: int, k: int, seed: int,
                  args, baseline: float, gt_meta: dict) -> EvalReport:
    cfg_args = argparse.Namespace(**vars(args))
    cfg_args.method = method
    cfg_args.size = size
    cfg_args.k = k
    cfg_args.epsilon = args.epsilon
    t0 = time.perf_counter()
    if method == "ours" and args.streaming:
        tree = CoresetTree(_coreset_config(cfg_args, seed),
                           leaf_size=args.leaf_size)
        tree.extend(P)
        S = tree.finalize()
    else:
        S = _build_offline(P, cfg_args, seed)
    build_ms = _ms(t0)
    return evaluate_coreset(P, S, k, method, seed, _eval_solver(args, args.seed),
                            baseline, gt_meta, {"build_ms": build_ms})


def _aggregate_rows(reports: list[EvalReport]) -> list[dict]:
    cells: dict[tuple, list[EvalReport]] = {}
    for r in reports:
        cells.setdefault((r.method, r.coreset_size, r.k), []).append(r)
    rows = []
    for (method, size, k), group in sorted(cells.items()):
        eps = sorted(r.eps_hat for r in group)
        ms = sorted(sum(r.wall_times.values()) for r in group)
        if len(eps) >= 2:
            q1, med, q3 = statistics.quantiles(eps, n=4, method="inclusive")
        else:
            q1 = med = q3 = eps[0]
        rows.append({"method": method, "size": size, "k": k,
                     "seed_count": len(group), "median_eps": med,
                     "q1_eps": q1, "q3_eps": q3,
                     "median_ms": statistics.median(ms)})
    return rows


def cmd_compare(parser, args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            parser.error(f"unknown method {m!r}")
    try:
        sizes = [int(s) for s in args.sizes.split(",")]
        k_list = [int(s) for s in args.k_list.split(",")]
    except ValueError:
        parser.error("--sizes and --k-list take comma-separated integers")
    if args.seeds < 1:
        parser.error("--seeds must be >= 1")
    if args.epsilon is not None and not (0.0 < args.epsilon < 1.0):
        parser.error("--epsilon must lie in (0, 1)")
    try:
        P = _load_input(args)
    except (OSError, ParseError, ValueError) as exc:
        return _fail(3, f"reading {args.input}: {exc}")
    os.makedirs(args.out, exist_ok=True)

    baselines: dict[int, tuple[float, dict]] = {}
    for k in k_list:
        cache = os.path.join(args.out, f"gt_k{k}.json")
        try:
            baselines[k] = ground_truth_cost(P, k, _eval_solver(args, args.seed), cache)
        except Exception as exc:
            return _fail(4, f"ground truth solve failed for k={k}: {exc}")

    grid = [(method, size, k, args.seed + s)
            for method in methods for size in sizes for k in k_list
            for s in range(args.seeds)]

    def run_cell(cell):
        method, size, k, seed = cell
        baseline, gt_meta = baselines[k]
        return _compare_cell(P, method, size, k, seed, args, baseline, gt_meta)

    reports: list[EvalReport] = []
    failures = 0
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(lambda c: _try_cell(run_cell, c), grid))
    else:
        outcomes = [_try_cell(run_cell, c) for c in grid]
    for cell, outcome in zip(grid, outcomes):
        method, size, k, seed = cell
        name = f"{method}_m{size}_k{k}_s{seed}.json"
        path = os.path.join(args.out, name)
        with open(path, "w", encoding="utf-8") as f:
            if isinstance(outcome, EvalReport):
                json.dump(dataclasses.asdict(outcome), f, indent=2)
                reports.append(outcome)
            else:
                json.dump({"error": outcome, "method": method, "size": size,
                           "k": k, "seed": seed}, f, indent=2)
                failures += 1
    if not reports:
        return _fail(4, "all sweep cells failed")
    rows = _aggregate_rows(reports)
    agg_path = os.path.join(args.out, "aggregate.csv")
    with open(agg_path, "w", encoding="utf-8") as f:
        f.write("method,size,k,seed_count,median_eps,q1_eps,q3_eps,median_ms\n")
        for r in rows:
            f.write(f"{r['method']},{r['size']},{r['k']},{r['seed_count']},"
                    f"{r['median_eps']!r},{r['q1_eps']!r},{r['q3_eps']!r},"
                    f"{r['median_ms']!r}\n")
    print(json.dumps({"command": "compare", "cells": len(grid),
                      "failed": failures, "aggregate": agg_path}))
    return 0


def _try_cell(fn, cell):
    try:
        return fn(cell)
    except Exception as exc:
        return f"{type(exc).__name__}: {exc}"


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="point stream file (gzip ok)")
    p.add_argument("--format", default="pairs",
                   choices=["pairs", "triplets", "dense_csv"])
    p.add_argument("--dim", type=int, default=None,
                   help="ambient dimension (required for pairs/triplets)")
    p.add_argument("--index-base", type=int, default=0, choices=[0, 1])


def _add_build_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--size", type=int, default=None,
                   help="sampling size, or fixed part count for method ours")
    p.add_argument("--method", default="ours", choices=list(METHODS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--one-mean", default="exact_mean",
                   choices=["exact_mean", "frank_wolfe"])
    p.add_argument("--opt", default="heuristic", choices=["heuristic", "exact"],
                   help="per-m k-means solver used inside the construction")
    p.add_argument("--build-iters", type=int, default=3,
                   help="Lloyd iterations inside the construction")
    p.add_argument("--build-restarts", type=int, default=1)
    p.add_argument("--bicriteria-k", type=int, default=None,
                   help="reference centers for sensitivity sampling (default k)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmcoreset",
        description="Sparse k-means coresets: build, stream, evaluate, compare.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a coreset offline")
    _add_input_flags(p_build)
    _add_build_flags(p_build)
    p_build.add_argument("--out", required=True)

    p_stream = sub.add_parser("stream", help="build via the streaming tree")
    _add_input_flags(p_stream)
    _add_build_flags(p_stream)
    p_stream.add_argument("--out", required=True)
    p_stream.add_argument("--leaf-size", type=int, default=None)
    p_stream.add_argument("--machines", type=int, default=1)
    p_stream.add_argument("--trace", default=None,
                          help="CSV of (points_seen,live_buckets,resident_points)")

    p_eval = sub.add_parser("eval", help="evaluate a coreset file")
    _add_input_flags(p_eval)
    p_eval.add_argument("--coreset", required=True)
    p_eval.add_argument("--k", type=int, required=True)
    p_eval.add_argument("--method", default="ours", choices=list(METHODS),
                        help="method label recorded in the report")
    p_eval.add_argument("--solver-iters", type=int, default=100)
    p_eval.add_argument("--restarts", type=int, default=25)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--baseline-cache", default=None)
    p_eval.add_argument("--out", default=None)

    p_cmp = sub.add_parser("compare", help="sweep methods x sizes x k x seeds")
    _add_input_flags(p_cmp)
    p_cmp.add_argument("--methods", default="ours,uniform,sensitivity")
    p_cmp.add_argument("--sizes", required=True)
    p_cmp.add_argument("--k-list", required=True)
    p_cmp.add_argument("--seeds", type=int, default=10,
                       help="number of seeds (seed, seed+1, ...)")
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--epsilon", type=float, default=None)
    p_cmp.add_argument("--one-mean", default="exact_mean",
                       choices=["exact_mean", "frank_wolfe"])
    p_cmp.add_argument("--opt", default="heuristic", choices=["heuristic", "exact"])
    p_cmp.add_argument("--build-iters", type=int, default=3)
    p_cmp.add_argument("--build-restarts", type=int, default=1)
    p_cmp.add_argument("--bicriteria-k", type=int, default=None)
    p_cmp.add_argument("--streaming", action="store_true",
                       help="build 'ours' through the streaming tree")
    p_cmp.add_argument("--leaf-size", type=int, default=None)
    p_cmp.add_argument("--solver-iters", type=int, default=100)
    p_cmp.add_argument("--restarts", type=int, default=25)
    p_cmp.add_argument("--jobs", type=int, default=1)
    p_cmp.add_argument("--out", required=True, help="output directory")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"build": cmd_build, "stream": cmd_stream,
                "eval": cmd_eval, "compare": cmd_compare}
    return handlers[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())

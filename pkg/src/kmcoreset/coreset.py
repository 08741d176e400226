"""Deterministic coreset construction for k-means over sparse data.

The construction picks a cluster count m (a power of k chosen by a cost-gap
rule), partitions the input by an m-means solution, and collapses every part
to a single weighted point: either the exact part mean, or a sparse
surrogate of the mean built by Frank-Wolfe over the part's convex hull. The
parts' internal variances accumulate into the additive offset, so the output
answers cost queries for any k centers within a small relative error.

The cost-gap rule: the smallest t >= 0 with

    opt(P, k^t) - opt(P, k^(t+1)) <= eps^2 * opt(P, k)

and m = k^t (capped at n). With an exact solver the selected t stays below
1 + 1/eps^2 and the output is a (k, 15*eps)-coreset; with heuristics the
same pipeline runs without the formal guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._kernels import get_backend
from .kmeans import (SolverConfig, approx_opt, cost, exact_opt_curve,
                     partition, solve_kmeans)
from .sparse_core import (SparseVector, WeightedSet, dist_sq, point_dist_sq,
                          sparse_combine, sparse_dot, weighted_mean,
                          weighted_variance)


def fw_default_max_iter(epsilon: float) -> int:
    return math.ceil(16.0 / (epsilon * epsilon))


def support_cap(epsilon: float) -> int:
    """Largest combination length a construction at this epsilon may emit."""
    return fw_default_max_iter(epsilon) + 1


@dataclass(frozen=True)
class CoresetConfig:
    """Construction parameters.

    epsilon: target relative error knob in (0, 1). The 15*eps guarantee
        regime is eps < 1/4; larger values still run (useful for probing the
        cluster-count rule) without the formal bound.
    k: number of centers the coreset must answer for.
    one_mean_method: "exact_mean" collapses parts to their true means;
        "frank_wolfe" builds sparse surrogate means with provenance.
    solver: how opt(P, m) estimates and the partition solution are computed.
    max_t: hard cap on the cost-gap scan (interacts with ceil(1/eps^2)).
    fixed_m: skip the scan and partition straight into min(fixed_m, n) parts.
    """

    epsilon: float
    k: int
    one_mean_method: str = "exact_mean"
    solver: SolverConfig = field(default_factory=SolverConfig)
    max_t: int = 64
    fixed_m: int | None = None

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.one_mean_method not in ("exact_mean", "frank_wolfe"):
            raise ValueError("one_mean_method must be 'exact_mean' or 'frank_wolfe'")
        if self.max_t < 1:
            raise ValueError("max_t must be >= 1")
        if self.fixed_m is not None and self.fixed_m < 1:
            raise ValueError("fixed_m must be >= 1")


@dataclass(frozen=True)
class Coreset:
    """A weighted summary standing in for a larger weighted set.

    base: the summary points, weights, and accumulated additive offset.
    epsilon: the error label it was built for (None for sampling baselines,
        scaled by the tree depth for streaming outputs).
    built_for_k: the center count the label refers to (None when no k
        entered the construction).
    provenance: optionally, for every base point, the convex combination
        ((input_index, coefficient), ...) of construction-input points that
        produced it.
    """

    base: WeightedSet
    epsilon: float | None = None
    built_for_k: int | None = None
    provenance: tuple[tuple[tuple[int, float], ...], ...] | None = None

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon >= 0.0:
            raise ValueError("epsilon label must be >= 0 when present")
        if self.provenance is not None:
            if len(self.provenance) != self.base.n:
                raise ValueError("provenance must cover every coreset point")
            for combo in self.provenance:
                if not combo:
                    raise ValueError("empty provenance combination")
                s = math.fsum(c for _, c in combo)
                if any(c <= 0.0 for _, c in combo) or abs(s - 1.0) > 1e-12:
                    raise ValueError("provenance coefficients must be positive and sum to 1")

    @property
    def size(self) -> int:
        return self.base.n

    def verify_provenance(self, source: WeightedSet, rel_tol: float = 1e-10) -> None:
        """Check every point really is its recorded combination of source points."""
        if self.provenance is None:
            raise ValueError("coreset carries no provenance")
        for point, combo in zip(self.base.points, self.provenance):
            vecs = [source.points[i] for i, _ in combo]
            rebuilt = sparse_combine(vecs, [c for _, c in combo])
            err = dist_sq(point, rebuilt)
            scale = max(point.norm_sq(), 1.0)
            if err > (rel_tol ** 2) * scale * len(combo):
                raise AssertionError(
                    f"provenance mismatch: |point - combination|^2 = {err:g}")


@dataclass(frozen=True)
class MSelection:
    """Outcome of the cluster-count scan.

    opt_estimates[i] is the opt(P, k^i) estimate for i = 0..t+1. forced means
    no gap in range passed the test and the smallest-gap t was taken.
    """

    t: int
    m: int
    opt_estimates: tuple[float, ...]
    forced: bool = False


def select_m(P: WeightedSet, cfg: CoresetConfig) -> MSelection:
    """Scan t = 0, 1, ... for the first sufficiently flat cost gap.

    Estimates come from cfg.solver (exact solvers make the termination bound
    t < 1 + 1/eps^2 guaranteed; heuristics make it a heuristic). The scan is
    capped at min(cfg.max_t, ceil(1/eps^2)); if nothing passes, the t with
    the smallest observed gap is returned with forced=True.
    """
    n = P.n
    k = cfg.k
    eps_sq = cfg.epsilon * cfg.epsilon
    t_cap = min(cfg.max_t, math.ceil(1.0 / eps_sq))

    if cfg.solver.method == "exact":
        curve = exact_opt_curve(P)

        def opt_of(m: int) -> float:
            return P.additive if m >= n else float(curve[m])
    else:
        def opt_of(m: int) -> float:
            return P.additive if m >= n else approx_opt(P, m, cfg.solver)

    ests: list[float] = []

    def est(i: int) -> float:
        while len(ests) <= i:
            ests.append(opt_of(k ** len(ests)))
        return ests[i]

    threshold = eps_sq * est(1)  # eps^2 * opt(P, k)
    best_t = 0
    best_gap = math.inf
    chosen = None
    for t in range(t_cap + 1):
        gap = est(t) - est(t + 1)
        if gap < best_gap:
            best_gap = gap
            best_t = t
        if gap <= threshold:
            chosen = t
            break
    forced = chosen is None
    t = best_t if forced else chosen
    return MSelection(t=t, m=min(k ** t, n),
                      opt_estimates=tuple(ests), forced=forced)


@dataclass(frozen=True)
class FrankWolfeResult:
    """Sparse approximate mean as a convex combination of input points.

    coeffs pairs (point index, coefficient); achieved is |x - mean|^2 for the
    combination x; target_met is False when the iteration cap struck first.
    """

    coeffs: tuple[tuple[int, float], ...]
    achieved: float
    target_met: bool
    iterations: int


def frank_wolfe_mean(P: WeightedSet, epsilon: float,
                     max_iter: int | None = None) -> FrankWolfeResult:
    """Approximate the weighted mean inside the convex hull of P's points.

    Minimizes f(x) = |x - mean(P)|^2 by Frank-Wolfe: each step moves toward
    the hull vertex minimizing the linearized objective, with the exact
    line-search step for this quadratic (clipped to [0, 1]; it dominates the
    standard 2/(iter+2) schedule, so f(x_T) <= 4*diam^2/(T+2) still holds).
    Stops once total_weight * f(x) <= (eps^2/16) * weighted_variance(P), at
    a vanishing improvement direction, or after max_iter steps (default
    ceil(16/eps^2)). The support grows by at most one point per step.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    cap = fw_default_max_iter(epsilon) if max_iter is None else max_iter
    if cap < 1:
        raise ValueError("max_iter must be >= 1")
    mu = weighted_mean(P)
    var = weighted_variance(P, mean=mu)
    target = (epsilon * epsilon / 16.0) * var
    W = P.total_weight

    start = int(np.argmin(point_dist_sq(P, mu)))
    coeffs = {start: 1.0}
    x = P.points[start]
    achieved = dist_sq(x, mu)
    indptr, indices, values = P.csr()
    be = get_backend()
    steps = 0
    while steps < cap and W * achieved > target:
        g = sparse_combine([x, mu], [1.0, -1.0])
        if g.nnz == 0:
            break
        dots = be.dots_with_vector(indptr, indices, values, g.indices, g.values)
        s = int(np.argmin(dots))
        vertex = P.points[s]
        denom = dist_sq(vertex, x)
        if denom == 0.0:
            break
        # gamma* = <mu - x, s - x> / |s - x|^2 for f(x) = |x - mu|^2
        numer = (sparse_dot(mu, vertex) - sparse_dot(mu, x)
                 - sparse_dot(x, vertex) + x.norm_sq())
        gamma = min(max(numer / denom, 0.0), 1.0)
        if gamma == 0.0:
            break
        steps += 1
        for i in list(coeffs):
            coeffs[i] *= (1.0 - gamma)
            if coeffs[i] == 0.0:
                del coeffs[i]
        coeffs[s] = coeffs.get(s, 0.0) + gamma
        x = sparse_combine([x, vertex], [1.0 - gamma, gamma])
        achieved = dist_sq(x, mu)
    met = W * achieved <= target
    ordered = tuple(sorted(coeffs.items()))
    return FrankWolfeResult(coeffs=ordered, achieved=achieved,
                            target_met=met, iterations=steps)


def _one_mean_base(P: WeightedSet, point: SparseVector) -> WeightedSet:
    phi = weighted_variance(P) + P.additive
    return WeightedSet([point], [P.total_weight], additive=phi)


def one_mean_coreset_exact(P: WeightedSet) -> Coreset:
    """Collapse P to its exact mean; additive picks up the variance.

    Exact for single-center queries: cost(S, {q}) = cost(P, {q}) for every q.
    """
    mu = weighted_mean(P)
    return Coreset(base=_one_mean_base(P, mu), epsilon=0.0, built_for_k=1)


def one_mean_coreset_sparse(P: WeightedSet, epsilon: float,
                            max_iter: int | None = None) -> Coreset:
    """Collapse P to a sparse surrogate mean with provenance.

    The surrogate is a convex combination of at most min(n, iterations + 1)
    input points, so its support is bounded by the combination length times
    the input sparsity, independent of the part size.
    """
    fw = frank_wolfe_mean(P, epsilon, max_iter)
    point = sparse_combine([P.points[i] for i, _ in fw.coeffs],
                           [c for _, c in fw.coeffs])
    return Coreset(base=_one_mean_base(P, point), epsilon=epsilon,
                   built_for_k=1, provenance=(fw.coeffs,))


def kmean_coreset(P: WeightedSet, cfg: CoresetConfig) -> Coreset:
    """The full construction: select m, partition, collapse, reassemble.

    Output size is at most m; multiplicative and additive mass are conserved
    (asserted). With cfg.fixed_m the cluster-count scan is skipped.
    """
    n = P.n
    if cfg.fixed_m is not None:
        m = min(cfg.fixed_m, n)
    else:
        m = select_m(P, cfg).m
    centers, _ = solve_kmeans(P, m, cfg.solver)
    split = partition(P, centers)

    points = []
    weights = []
    phis = []
    provenance = [] if cfg.one_mean_method == "frank_wolfe" else None
    rows_by_part = _rows_by_part(split)
    for part, rows in zip(split.parts, rows_by_part):
        if cfg.one_mean_method == "frank_wolfe":
            piece = one_mean_coreset_sparse(part, cfg.epsilon)
            local = piece.provenance[0]
            provenance.append(tuple((int(rows[i]), c) for i, c in local))
        else:
            piece = one_mean_coreset_exact(part)
        points.append(piece.base.points[0])
        weights.append(piece.base.weights[0])
        phis.append(piece.base.additive)

    total_in = P.total_weight
    total_out = math.fsum(weights)
    assert abs(total_out - total_in) <= 1e-9 * max(total_in, 1.0), \
        "multiplicative mass must be conserved"
    phi = math.fsum(phis)
    assert phi >= P.additive - 1e-9 * max(P.additive, 1.0), \
        "additive mass must not be dropped"

    base = WeightedSet(points, weights, additive=phi)
    return Coreset(base=base, epsilon=cfg.epsilon, built_for_k=cfg.k,
                   provenance=tuple(provenance) if provenance is not None else None)


def _rows_by_part(split) -> list[np.ndarray]:
    order = np.argsort(split.assignment, kind="stable")
    sorted_assign = split.assignment[order]
    boundaries = np.flatnonzero(np.diff(sorted_assign)) + 1
    return np.split(order, boundaries)

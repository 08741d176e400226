"""Weighted k-means machinery: cost, partition, Lloyd, seeding, solvers.

Everything is deterministic given config seeds. The randomized solver splits
its seed per restart through numpy's SeedSequence, so results do not depend
on platform or on how many restarts run.

Besides the usual heuristics there is an exact solver (subset DP over all
partitions) for small instances; it is what turns the construction's
guarantees into assertable facts in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import get_backend
from .sparse_core import (SparseVector, WeightedSet, point_dist_sq,
                          sparse_combine, weighted_mean)

EXACT_SOLVER_MAX_N = 16

SOLVER_METHODS = ("lloyd", "kmeanspp_then_lloyd", "exact")


class CenterSet:
    """Immutable set of candidate centers. Duplicates are allowed."""

    __slots__ = ("points", "dim", "_csr")

    def __init__(self, points: Sequence[SparseVector]):
        points = tuple(points)
        if not points:
            raise ValueError("a center set needs at least one center")
        dim = points[0].dim
        for p in points:
            if p.dim != dim:
                raise ValueError("all centers must share one dim")
        self.points = points
        self.dim = dim
        self._csr = None

    @property
    def k(self) -> int:
        return len(self.points)

    def csr(self):
        if self._csr is None:
            counts = np.fromiter((p.nnz for p in self.points), dtype=np.int64,
                                 count=len(self.points))
            indptr = np.zeros(len(self.points) + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            if indptr[-1]:
                indices = np.concatenate([p.indices for p in self.points])
                values = np.concatenate([p.values for p in self.points])
            else:
                indices = np.array([], dtype=np.int64)
                values = np.array([], dtype=np.float64)
            self._csr = (indptr, indices.astype(np.int64, copy=False),
                         values.astype(np.float64, copy=False))
        return self._csr

    def __repr__(self) -> str:
        return f"CenterSet(k={self.k}, dim={self.dim})"


@dataclass(frozen=True)
class Partition:
    """Nonempty parts of a weighted set, one per center that owns points.

    parts[i] holds the points assigned to center center_indices[i] and
    carries additive weight rho / len(parts), so additive mass is conserved
    even when some centers own nothing. assignment maps every input point to
    its owning center index (ties to the lowest center index).
    """

    parts: tuple[WeightedSet, ...]
    assignment: np.ndarray
    center_indices: tuple[int, ...]


@dataclass(frozen=True)
class SolverConfig:
    """How solve_kmeans runs.

    method: "kmeanspp_then_lloyd" (default), "lloyd" (weighted random init),
        or "exact" (partition DP, small n only; ignores iterations/restarts).
    iterations: Lloyd iteration cap per restart.
    restarts: independent seeded restarts; best (cost, restart index) wins.
    rng_seed: base seed; restart r runs on SeedSequence((seed, r)).
    convergence_tol: stop a restart when the relative cost improvement drops
        to or below this; 0 stops only at an exact fixed point.
    """

    method: str = "kmeanspp_then_lloyd"
    iterations: int = 10
    restarts: int = 1
    rng_seed: int = 0
    convergence_tol: float = 0.0

    def __post_init__(self):
        if self.method not in SOLVER_METHODS:
            raise ValueError(f"method must be one of {SOLVER_METHODS}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.convergence_tol < 0.0:
            raise ValueError("convergence_tol must be >= 0")


def _seed_entropy(seed: int) -> int:
    return int(seed) & 0xFFFF_FFFF_FFFF_FFFF


def rng_from(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for (seed, stream...) via SeedSequence."""
    return np.random.default_rng(np.random.SeedSequence((_seed_entropy(seed),) + stream))


def derive_seed(seed: int, *stream: int) -> int:
    """A 64-bit child seed for handing to nested seeded APIs."""
    ss = np.random.SeedSequence((_seed_entropy(seed),) + stream)
    return int(ss.generate_state(1, np.uint64)[0])


def _assign(P: WeightedSet, Q: CenterSet):
    if P.dim != Q.dim:
        raise ValueError("dimension mismatch between points and centers")
    indptr, indices, values = P.csr()
    c_indptr, c_indices, c_values = Q.csr()
    return get_backend().assign_points(indptr, indices, values,
                                       c_indptr, c_indices, c_values)


def cost(P: WeightedSet, Q: CenterSet) -> float:
    """sum_p u(p) * dist^2(p, Q) + P.additive."""
    _, dsq = _assign(P, Q)
    return float(P.weights @ dsq) + P.additive


def partition(P: WeightedSet, Q: CenterSet) -> Partition:
    """Split P among the centers of Q.

    Every point goes to its nearest center (ties to the lowest index); only
    centers owning at least one point produce a part, and each produced part
    receives additive weight P.additive / #parts.
    """
    assign, _ = _assign(P, Q)
    order = np.argsort(assign, kind="stable")
    sorted_assign = assign[order]
    boundaries = np.flatnonzero(np.diff(sorted_assign)) + 1
    groups = np.split(order, boundaries)
    share = P.additive / len(groups)
    parts = []
    owners = []
    for rows in groups:
        owners.append(int(assign[rows[0]]))
        parts.append(P.subset(rows, share))
    assign.setflags(write=False)
    return Partition(parts=tuple(parts), assignment=assign,
                     center_indices=tuple(owners))


def lloyd_step(P: WeightedSet, Q: CenterSet) -> CenterSet:
    """One Lloyd update: means of the induced parts; empty centers persist."""
    part = partition(P, Q)
    new_points = list(Q.points)
    for ws, owner in zip(part.parts, part.center_indices):
        new_points[owner] = weighted_mean(ws)
    return CenterSet(new_points)


def _draw_index(rng: np.random.Generator, raw_weights: np.ndarray) -> int:
    total = float(raw_weights.sum())
    if total <= 0.0 or not math.isfinite(total):
        raise ValueError("cannot draw from a non-positive weight vector")
    cum = np.cumsum(raw_weights)
    r = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, r, side="right"), raw_weights.shape[0] - 1))


def kmeanspp_seed(P: WeightedSet, k: int, rng_seed: int) -> CenterSet:
    """Weighted D^2 seeding.

    First center drawn with probability proportional to u(p); each next one
    proportional to u(p) * dist^2(p, chosen so far). When every remaining
    distance is zero (fewer distinct points than k) it falls back to drawing
    by weight alone, so duplicate centers can appear.
    """
    if not 1 <= k <= P.n:
        raise ValueError("need 1 <= k <= n for seeding")
    rng = rng_from(rng_seed)
    chosen = [_draw_index(rng, P.weights)]
    if k > 1:
        dsq = point_dist_sq(P, P.points[chosen[0]])
        while len(chosen) < k:
            raw = P.weights * dsq
            if float(raw.sum()) > 0.0:
                idx = _draw_index(rng, raw)
            else:
                idx = _draw_index(rng, P.weights)
            chosen.append(idx)
            np.minimum(dsq, point_dist_sq(P, P.points[idx]), out=dsq)
    return CenterSet([P.points[i] for i in chosen])


def _random_init(P: WeightedSet, k: int, rng: np.random.Generator) -> CenterSet:
    probs = P.weights / P.weights.sum()
    idx = rng.choice(P.n, size=k, replace=False, p=probs)
    return CenterSet([P.points[i] for i in sorted(int(i) for i in idx)])


def _lloyd_descent(P: WeightedSet, Q: CenterSet, cfg: SolverConfig) -> tuple[CenterSet, float]:
    prev = cost(P, Q)
    for _ in range(cfg.iterations):
        Q2 = lloyd_step(P, Q)
        c2 = cost(P, Q2)
        if c2 >= prev:
            break  # no strict improvement: keep the pre-step state
        rel = (prev - c2) / prev
        Q, prev = Q2, c2
        if cfg.convergence_tol > 0.0 and rel <= cfg.convergence_tol:
            break
    return Q, prev


def solve_kmeans(P: WeightedSet, k: int, cfg: SolverConfig) -> tuple[CenterSet, float]:
    """Best-of-restarts k-means. Returns (centers, cost(P, centers)).

    k is capped at n (n distinct-enough points already realize the optimum).
    More restarts can only lower the returned cost for a fixed seed, since
    restart seeds do not depend on the restart count.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    k_eff = min(k, P.n)
    if cfg.method == "exact":
        return exact_kmeans(P, k_eff)
    best_q = None
    best_c = math.inf
    for r in range(cfg.restarts):
        seed_r = derive_seed(cfg.rng_seed, r)
        if cfg.method == "kmeanspp_then_lloyd":
            Q0 = kmeanspp_seed(P, k_eff, seed_r)
        else:
            Q0 = _random_init(P, k_eff, rng_from(seed_r))
        Q, c = _lloyd_descent(P, Q0, cfg)
        if c < best_c:
            best_q, best_c = Q, c
    return best_q, best_c


def approx_opt(P: WeightedSet, m: int, cfg: SolverConfig) -> float:
    """Estimated optimal m-means cost; exactly P.additive once m >= n."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m >= P.n:
        return P.additive
    return solve_kmeans(P, m, cfg)[1]


def _dense_view(P: WeightedSet):
    """Points projected onto their union support, as a dense matrix."""
    indptr, indices, values = P.csr()
    union = np.unique(indices)
    dense = np.zeros((P.n, union.shape[0]), dtype=np.float64)
    if union.shape[0]:
        col = np.searchsorted(union, indices)
        row = np.repeat(np.arange(P.n), np.diff(indptr))
        dense[row, col] = values
    return dense


def _exact_tables(P: WeightedSet, m_max: int):
    """Cached DP tables for P, extended on demand to larger m_max."""
    cache = P._cache
    hit = cache.get("exact_dp")
    if hit is not None and hit[0] >= m_max:
        return hit[1], hit[2]
    if P.n > EXACT_SOLVER_MAX_N:
        raise ValueError(
            f"exact solver handles at most n = {EXACT_SOLVER_MAX_N} points, got {P.n}")
    dense = _dense_view(P)
    u = np.ascontiguousarray(P.weights, dtype=np.float64)
    s2 = np.einsum("ij,ij->i", dense, dense)
    H = (dense @ dense.T) * u[None, :]
    curve, choice = get_backend().exact_partition_dp(u, s2, np.ascontiguousarray(H), m_max)
    curve = np.asarray(curve)
    choice = np.asarray(choice)
    cache["exact_dp"] = (m_max, curve, choice)
    return curve, choice


def exact_opt_curve(P: WeightedSet, m_max: int | None = None) -> np.ndarray:
    """Exact optimal costs for m = 1..m_max; entry [m] includes P.additive.

    Entry [0] is +inf. O(m_max * 3^n): practical n <= 16 on the numba lane,
    n around 12 on the numpy lane.
    """
    m_max = P.n if m_max is None else min(m_max, P.n)
    curve, _ = _exact_tables(P, m_max)
    out = curve[:m_max + 1].copy()
    out[1:] += P.additive
    return out


def exact_kmeans(P: WeightedSet, k: int) -> tuple[CenterSet, float]:
    """Exact k-means by partition DP. Returns (centers, exact cost).

    Centers are the means of an optimal partition into at most k blocks, so
    fewer than k centers can come back when the optimum needs fewer.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    k_eff = min(k, P.n)
    curve, choice = _exact_tables(P, k_eff)
    full = (1 << P.n) - 1
    blocks = []
    mask = full
    j = k_eff
    while mask:
        if j <= 1:
            blocks.append(mask)
            break
        t = int(choice[j, mask])
        if t == 0:
            j -= 1
            continue
        blocks.append(t)
        mask ^= t
        j -= 1
    centers = []
    for block in blocks:
        rows = [i for i in range(P.n) if (block >> i) & 1]
        w = P.weights[rows]
        centers.append(sparse_combine([P.points[i] for i in rows], w / w.sum()))
    return CenterSet(centers), float(curve[k_eff]) + P.additive

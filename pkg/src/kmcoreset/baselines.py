"""Sampling baselines: uniform and sensitivity-based coresets.

Both draw m points i.i.d. with replacement and reweight so the estimator is
unbiased for any fixed center set Q: E[cost(S, Q)] = cost(P, Q). Repeats stay
separate points (multiset semantics), the additive offset passes through, and
every output carries singleton provenance back to its source point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coreset import Coreset
from .kmeans import SolverConfig, rng_from, solve_kmeans, _assign
from .sparse_core import WeightedSet


@dataclass(frozen=True)
class SamplingConfig:
    """size: number of draws; bicriteria_k: centers for the sensitivity
    reference solution (defaults to the evaluation k the caller has in mind);
    solver: how that reference solution is computed."""

    size: int
    rng_seed: int = 0
    bicriteria_k: int = 1
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(iterations=3))

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("size must be >= 1")
        if self.bicriteria_k < 1:
            raise ValueError("bicriteria_k must be >= 1")


def _draw_many(rng: np.random.Generator, probs: np.ndarray, m: int) -> np.ndarray:
    cum = np.cumsum(probs)
    r = rng.random(m) * cum[-1]
    return np.minimum(np.searchsorted(cum, r, side="right"), probs.shape[0] - 1)


def uniform_coreset(P: WeightedSet, cfg: SamplingConfig) -> Coreset:
    """m i.i.d. draws with probability proportional to u(p), weight W/m each."""
    rng = rng_from(cfg.rng_seed, 0)
    idx = _draw_many(rng, P.weights / P.total_weight, cfg.size)
    w = P.total_weight / cfg.size
    base = WeightedSet([P.points[i] for i in idx],
                       np.full(cfg.size, w), additive=P.additive)
    prov = tuple(((int(i), 1.0),) for i in idx)
    return Coreset(base=base, epsilon=None, built_for_k=None, provenance=prov)


def sensitivity_probabilities(P: WeightedSet, cfg: SamplingConfig) -> np.ndarray:
    """Per-point draw probabilities against a bicriteria reference solution.

    pr(p) is proportional to the point's share of the reference clustering
    cost plus its weight share within its own reference cluster:

        u(p) * d^2(p, B) / cost'(P, B)  +  u(p) / W_cluster(p)

    normalized over P (the two terms integrate to 1 and #clusters). The
    cluster-share floor keeps small isolated clusters sampleable even when
    the reference solution sits right on them; with a single reference
    center and equidistant points it reduces to plain weight-proportional
    (uniform) sampling. cost' here excludes the additive offset; when it is
    zero only the floor term remains.
    """
    B, _ = solve_kmeans(P, cfg.bicriteria_k, cfg.solver)
    assign, dsq = _assign(P, B)
    dist_mass = P.weights * dsq
    total = float(dist_mass.sum())
    cluster_w = np.bincount(assign, weights=P.weights, minlength=B.k)
    raw = P.weights / cluster_w[assign]
    if total > 0.0:
        raw = raw + dist_mass / total
    return raw / raw.sum()


def sensitivity_coreset(P: WeightedSet, cfg: SamplingConfig) -> Coreset:
    """m i.i.d. draws by sensitivity; draw i gets weight u(p_i)/(m * pr(p_i))."""
    probs = sensitivity_probabilities(P, cfg)
    rng = rng_from(cfg.rng_seed, 1)
    idx = _draw_many(rng, probs, cfg.size)
    w = P.weights[idx] / (cfg.size * probs[idx])
    base = WeightedSet([P.points[i] for i in idx], w, additive=P.additive)
    prov = tuple(((int(i), 1.0),) for i in idx)
    return Coreset(base=base, epsilon=None, built_for_k=cfg.bicriteria_k,
                   provenance=prov)

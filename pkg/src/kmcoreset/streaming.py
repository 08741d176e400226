"""Merge-and-reduce streaming tree and a simulated distributed mode.

The tree keeps at most one coreset bucket per level (binary counter). Each
full chunk of ``leaf_size`` raw points is compressed to a level-0 coreset;
whenever a level is already occupied the two buckets merge and re-compress
one level up. Live buckets therefore never exceed
ceil(log2(points_seen / leaf_size)) + 1.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .coreset import Coreset, CoresetConfig, kmean_coreset
from .sparse_core import SparseVector, WeightedSet

# callback(points_seen, live_buckets, resident_points), invoked after insert
InstrumentHook = Callable[[int, int, int], None]

LEAF_SIZE_CAP = 4096


def default_leaf_size(cfg: CoresetConfig) -> int:
    """Twice the worst-case coreset size k^ceil(1/eps^2), capped at 4096.

    The theoretical chunk size blows up fast for small epsilon, so the cap
    keeps the default usable; pass leaf_size explicitly to override.
    """
    t_max = math.ceil(1.0 / (cfg.epsilon * cfg.epsilon))
    size = 2
    for _ in range(t_max):
        size *= cfg.k
        if size >= LEAF_SIZE_CAP:
            return LEAF_SIZE_CAP
    return max(size, 2)


def merge(a: Optional[Coreset], b: Optional[Coreset]) -> WeightedSet:
    """Concatenate two coresets' weighted sets; additive offsets add.

    For every center set Q, cost(merge(a,b), Q) = cost(a, Q) + cost(b, Q).
    Either side may be None (empty), in which case the other passes through.
    Provenance does not survive a merge: rows of the two inputs index into
    different source sets.
    """
    if a is None and b is None:
        raise ValueError("merge of two empty coresets")
    if a is None:
        return b.base
    if b is None:
        return a.base
    pa, pb = a.base, b.base
    return WeightedSet(
        list(pa.points) + list(pb.points),
        np.concatenate([pa.weights, pb.weights]),
        additive=pa.additive + pb.additive,
    )


def _label(cfg: CoresetConfig, n_leaves: int) -> float:
    return cfg.epsilon * max(1, math.ceil(math.log2(max(n_leaves, 1))))


class CoresetTree:
    """Single-writer merge-and-reduce state over one point stream."""

    def __init__(self, cfg: CoresetConfig, leaf_size: int | None = None,
                 instrument: InstrumentHook | None = None):
        if leaf_size is None:
            leaf_size = default_leaf_size(cfg)
        if leaf_size < 2:
            raise ValueError("leaf_size must be >= 2")
        self.cfg = cfg
        self.leaf_size = leaf_size
        self.instrument = instrument
        self._buckets: dict[int, Coreset] = {}
        self._pending: list[SparseVector] = []
        self._pending_w: list[float] = []
        self._pending_additive = 0.0
        self._points_seen = 0
        self._leaves_built = 0

    @property
    def points_seen(self) -> int:
        return self._points_seen

    @property
    def live_buckets(self) -> int:
        return len(self._buckets)

    @property
    def resident_points(self) -> int:
        """Raw buffer length plus points held across all live buckets."""
        return len(self._pending) + sum(c.size for c in self._buckets.values())

    def add_additive(self, value: float) -> None:
        """Fold a constant cost offset into the next leaf built."""
        if value < 0.0:
            raise ValueError("additive offset must be >= 0")
        self._pending_additive += value

    def insert(self, p: SparseVector, weight: float = 1.0) -> None:
        weight = float(weight)
        if not math.isfinite(weight) or weight <= 0.0:
            raise ValueError(f"point weight must be positive and finite, got {weight}")
        self._pending.append(p)
        self._pending_w.append(weight)
        self._points_seen += 1
        if len(self._pending) >= self.leaf_size:
            leaf = self._build_leaf()
            self._pending.clear()
            self._pending_w.clear()
            self._pending_additive = 0.0
            self._carry(leaf)
        if self.instrument is not None:
            self.instrument(self._points_seen, self.live_buckets,
                            self.resident_points)

    def extend(self, P: WeightedSet) -> None:
        """Stream a whole weighted set through insert, offset included."""
        self.add_additive(P.additive)
        for p, w in zip(P.points, P.weights):
            self.insert(p, float(w))

    def _build_leaf(self) -> Coreset:
        chunk = WeightedSet(list(self._pending),
                            np.asarray(self._pending_w, dtype=np.float64),
                            additive=self._pending_additive)
        self._leaves_built += 1
        return kmean_coreset(chunk, self.cfg)

    def _carry(self, c: Coreset) -> None:
        level = 0
        while level in self._buckets:
            other = self._buckets.pop(level)
            c = kmean_coreset(merge(other, c), self.cfg)
            level += 1
        self._buckets[level] = c

    def finalize(self) -> Coreset:
        """Collapse buffer and buckets to one coreset. Leaves state intact,
        so the stream may keep going and finalize may be called again.

        Buckets merge bottom-up followed by a single reduce; when only one
        bucket exists it is returned as-is (a lone sub-leaf stream therefore
        equals the offline construction exactly). The guarantee label scales
        the per-reduce epsilon by ceil(log2(#leaves)).
        """
        if self._points_seen == 0:
            raise ValueError("finalize on an empty stream")
        n_leaves = self._leaves_built
        pieces: list[Coreset] = []
        if self._pending:
            saved_count = self._leaves_built
            leaf = self._build_leaf()
            self._leaves_built = saved_count
            n_leaves += 1
            pieces.append(leaf)
        for level in sorted(self._buckets):
            pieces.append(self._buckets[level])
        if len(pieces) == 1:
            result = pieces[0]
        else:
            acc = pieces[0]
            for nxt in pieces[1:]:
                acc_ws = merge(acc, nxt)
                acc = Coreset(base=acc_ws, epsilon=None, built_for_k=None)
            result = kmean_coreset(acc.base, self.cfg)
        return dataclasses.replace(
            result, epsilon=_label(self.cfg, n_leaves), built_for_k=self.cfg.k,
        )


@dataclass(frozen=True)
class DistributedResult:
    coreset: Coreset
    communicated_points: int
    shard_sizes: tuple[int, ...]


def split_round_robin(P: WeightedSet, machines: int) -> list[WeightedSet]:
    """Deal points to shards in index order; shard 0 keeps the offset."""
    if machines < 1:
        raise ValueError("machines must be >= 1")
    if machines > len(P.points):
        raise ValueError("more machines than points")
    shards = []
    for m in range(machines):
        rows = np.arange(m, len(P.points), machines)
        shards.append(P.subset(rows, additive=P.additive if m == 0 else 0.0))
    return shards


def combine_shard_coresets(shard_coresets: Sequence[Coreset],
                           cfg: CoresetConfig) -> Coreset:
    """Coordinator step: merge in shard order, then reduce once.

    A single shard passes through untouched so the M=1 result is
    bit-identical to that shard's own finalize.
    """
    if not shard_coresets:
        raise ValueError("no shard coresets")
    if len(shard_coresets) == 1:
        return shard_coresets[0]
    acc: Optional[Coreset] = None
    for c in shard_coresets:
        acc = Coreset(base=merge(acc, c), epsilon=None, built_for_k=None)
    labels = [c.epsilon for c in shard_coresets if c.epsilon is not None]
    label = (max(labels) if labels else 0.0) + cfg.epsilon
    return dataclasses.replace(
        kmean_coreset(acc.base, cfg), epsilon=label, built_for_k=cfg.k,
    )


def distributed_run(shards: Sequence[WeightedSet], cfg: CoresetConfig,
                    leaf_size: int | None = None) -> DistributedResult:
    """Run one CoresetTree per shard, ship the finalized coresets to a
    coordinator, merge them in shard order and reduce once.

    Communication is counted as the total number of points in the shipped
    coresets; it depends on k and epsilon but not on the ambient dimension.
    """
    if not shards:
        raise ValueError("no shards")
    finalized = []
    for shard in shards:
        tree = CoresetTree(cfg, leaf_size=leaf_size)
        tree.extend(shard)
        finalized.append(tree.finalize())
    combined = combine_shard_coresets(finalized, cfg)
    return DistributedResult(
        coreset=combined,
        communicated_points=sum(c.size for c in finalized),
        shard_sizes=tuple(len(s.points) for s in shards),
    )

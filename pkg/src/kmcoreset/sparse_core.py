"""Sparse vectors and weighted point sets.

The data model everything else builds on: a point is a sparse vector (sorted
unique indices, nonzero finite values), a dataset is a weighted multiset of
points plus a non-negative additive cost offset. Both are value types,
immutable after construction; their backing arrays have the writeable flag
cleared and every operation returns fresh objects, so sharing across threads
or merge-and-reduce trees is safe.

Cost convention used throughout the package:

    cost(P, Q) = sum_p u(p) * min_{q in Q} |p - q|^2  +  P.additive
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._kernels import get_backend

# Relative magnitude below which entries are dropped after arithmetic. Keeps
# support sizes honest when combinations nearly cancel a coordinate.
DROP_REL = 1e-15

_EMPTY_I = np.array([], dtype=np.int64)
_EMPTY_V = np.array([], dtype=np.float64)
_EMPTY_I.setflags(write=False)
_EMPTY_V.setflags(write=False)


def _frozen(arr):
    arr.setflags(write=False)
    return arr


class SparseVector:
    """Immutable sparse vector in R^dim.

    indices: strictly increasing int64 array in [0, dim)
    values: float64 array, finite, no stored zeros

    The all-zeros vector is the empty index set.
    """

    __slots__ = ("dim", "indices", "values")

    def __init__(self, dim: int, indices, values):
        dim = int(dim)
        if dim < 1:
            raise ValueError("dim must be >= 1")
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.float64)
        if idx.ndim != 1 or val.ndim != 1 or idx.shape[0] != val.shape[0]:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.shape[0]:
            if idx[0] < 0 or idx[-1] >= dim:
                raise ValueError("index out of range for dim")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if not np.all(np.isfinite(val)):
                raise ValueError("values must be finite")
            if np.any(val == 0.0):
                raise ValueError("stored zeros are not allowed")
        self.dim = dim
        self.indices = _frozen(np.ascontiguousarray(idx))
        self.values = _frozen(np.ascontiguousarray(val))

    @classmethod
    def zero(cls, dim: int) -> "SparseVector":
        return cls(dim, _EMPTY_I, _EMPTY_V)

    @classmethod
    def from_pairs(cls, dim: int, pairs: Mapping[int, float] | Iterable[tuple[int, float]]) -> "SparseVector":
        items = sorted(pairs.items() if isinstance(pairs, Mapping) else pairs)
        items = [(i, v) for i, v in items if v != 0.0]
        idx = np.array([i for i, _ in items], dtype=np.int64)
        val = np.array([v for _, v in items], dtype=np.float64)
        return cls(dim, idx, val)

    @classmethod
    def from_dense(cls, arr) -> "SparseVector":
        arr = np.asarray(arr, dtype=np.float64)
        idx = np.nonzero(arr)[0]
        return cls(arr.shape[0], idx.astype(np.int64), arr[idx])

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        out[self.indices] = self.values
        return out

    def norm_sq(self) -> float:
        return float(self.values @ self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (self.dim == other.dim
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}:{v:g}" for i, v in zip(self.indices, self.values))
        return f"SparseVector(dim={self.dim}, {{{body}}})"


def sparse_dot(a: SparseVector, b: SparseVector) -> float:
    """Inner product over the matching indices."""
    if a.nnz == 0 or b.nnz == 0:
        return 0.0
    pos = np.searchsorted(b.indices, a.indices)
    pos_c = np.minimum(pos, b.nnz - 1)
    matched = b.indices[pos_c] == a.indices
    return float(np.sum(a.values[matched] * b.values[pos_c[matched]]))


def dist_sq(a: SparseVector, b: SparseVector) -> float:
    """Squared Euclidean distance, computed on the merged support.

    Works entry-by-entry on the union of indices, so near-equal vectors far
    from the origin do not lose the distance to cancellation.
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    union = np.union1d(a.indices, b.indices)
    if union.shape[0] == 0:
        return 0.0
    av = np.zeros(union.shape[0])
    bv = np.zeros(union.shape[0])
    av[np.searchsorted(union, a.indices)] = a.values
    bv[np.searchsorted(union, b.indices)] = b.values
    d = av - bv
    return float(d @ d)


def _prune(idx: np.ndarray, val: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = val != 0.0
    if keep.any():
        cutoff = DROP_REL * np.max(np.abs(val))
        keep &= np.abs(val) >= cutoff
    return idx[keep], val[keep]


def sparse_combine(vectors: Sequence[SparseVector], coeffs) -> SparseVector:
    """Linear combination sum_i coeffs[i] * vectors[i].

    Entries whose magnitude falls below DROP_REL times the largest result
    magnitude are dropped, as are exact zeros.
    """
    if not vectors:
        raise ValueError("need at least one vector")
    dim = vectors[0].dim
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[0] != len(vectors):
        raise ValueError("one coefficient per vector required")
    parts_i = []
    parts_v = []
    for c, vec in zip(coeffs, vectors):
        if vec.dim != dim:
            raise ValueError("dimension mismatch")
        if c != 0.0 and vec.nnz:
            parts_i.append(vec.indices)
            parts_v.append(vec.values * c)
    if not parts_i:
        return SparseVector.zero(dim)
    idx = np.concatenate(parts_i)
    val = np.concatenate(parts_v)
    uniq, inverse = np.unique(idx, return_inverse=True)
    sums = np.bincount(inverse, weights=val, minlength=uniq.shape[0])
    uniq, sums = _prune(uniq, sums)
    return SparseVector(dim, uniq, sums)


class WeightedSet:
    """Immutable weighted multiset of sparse points with an additive offset.

    points: nonempty, all the same dim. Duplicates are legal and kept
    separate. weights: positive finite multiplicative weights, one per point.
    additive: non-negative constant added to every cost query.
    """

    __slots__ = ("points", "weights", "additive", "dim", "_csr", "_total", "_cache")

    def __init__(self, points: Sequence[SparseVector], weights=None, additive: float = 0.0):
        points = tuple(points)
        if not points:
            raise ValueError("a weighted set needs at least one point")
        dim = points[0].dim
        for p in points:
            if not isinstance(p, SparseVector):
                raise TypeError("points must be SparseVector instances")
            if p.dim != dim:
                raise ValueError("all points must share one dim")
        if weights is None:
            w = np.ones(len(points), dtype=np.float64)
        else:
            w = np.asarray(weights, dtype=np.float64).copy()
        if w.shape != (len(points),):
            raise ValueError("one weight per point required")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("weights must be positive and finite")
        additive = float(additive)
        if not math.isfinite(additive) or additive < 0.0:
            raise ValueError("additive offset must be >= 0 and finite")
        self.points = points
        self.weights = _frozen(w)
        self.additive = additive
        self.dim = dim
        self._csr = None
        self._total = None
        self._cache = {}

    @classmethod
    def from_points(cls, points, weights=None, additive=0.0) -> "WeightedSet":
        return cls(points, weights, additive)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def total_weight(self) -> float:
        if self._total is None:
            self._total = math.fsum(self.weights.tolist())
        return self._total

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, indices, values) over all points, built once."""
        if self._csr is None:
            counts = np.fromiter((p.nnz for p in self.points), dtype=np.int64,
                                 count=len(self.points))
            indptr = np.zeros(len(self.points) + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            if indptr[-1]:
                indices = np.concatenate([p.indices for p in self.points])
                values = np.concatenate([p.values for p in self.points])
            else:
                indices = _EMPTY_I.copy()
                values = _EMPTY_V.copy()
            self._csr = (_frozen(indptr),
                         _frozen(indices.astype(np.int64, copy=False)),
                         _frozen(values.astype(np.float64, copy=False)))
        return self._csr

    def subset(self, rows, additive: float = 0.0) -> "WeightedSet":
        rows = np.asarray(rows, dtype=np.int64)
        return WeightedSet([self.points[i] for i in rows], self.weights[rows], additive)

    def max_nnz(self) -> int:
        return max(p.nnz for p in self.points)

    def __repr__(self) -> str:
        return (f"WeightedSet(n={self.n}, dim={self.dim}, "
                f"total_weight={self.total_weight:g}, additive={self.additive:g})")


def weighted_mean(P: WeightedSet) -> SparseVector:
    """Weight-normalized centroid, assembled sparsely (memory O(nnz))."""
    if P.n == 1:
        # no arithmetic, no pruning: the mean of one point is that point
        return P.points[0]
    indptr, indices, values = P.csr()
    coeffs = P.weights / P.total_weight
    idx, val = get_backend().sum_rows(indptr, indices, values, coeffs)
    idx, val = _prune(np.asarray(idx), np.asarray(val))
    return SparseVector(P.dim, idx, val)


def point_dist_sq(P: WeightedSet, x: SparseVector) -> np.ndarray:
    """Squared distance from every point of P to x."""
    if x.dim != P.dim:
        raise ValueError("dimension mismatch")
    indptr, indices, values = P.csr()
    c_indptr = np.array([0, x.nnz], dtype=np.int64)
    _, dsq = get_backend().assign_points(indptr, indices, values,
                                         c_indptr, x.indices, x.values)
    return dsq


def weighted_variance(P: WeightedSet, mean: SparseVector | None = None) -> float:
    """sum_p u(p) * |p - mean(P)|^2. The additive offset is not included."""
    mu = weighted_mean(P) if mean is None else mean
    dsq = point_dist_sq(P, mu)
    return math.fsum((P.weights * dsq).tolist())

import math

import numpy as np
import pytest

from kmcoreset import (
    CenterSet,
    SparseVector,
    WeightedSet,
    cost,
    dist_sq,
    point_dist_sq,
    sparse_combine,
    sparse_dot,
    weighted_mean,
    weighted_variance,
)

from _oracles import dense_matrix, random_sparse_vector, random_weighted_set


def sv(dim, mapping):
    return SparseVector.from_pairs(dim, mapping)


class TestSparseVector:
    def test_basic_construction(self):
        v = SparseVector(5, [1, 3], [2.0, -1.5])
        assert v.nnz == 2
        assert v.dim == 5
        assert np.array_equal(v.to_dense(), [0, 2.0, 0, -1.5, 0])

    def test_zero_vector(self):
        z = SparseVector.zero(4)
        assert z.nnz == 0
        assert z.norm_sq() == 0.0

    def test_from_dense_roundtrip(self):
        arr = np.array([0.0, 1.5, 0.0, -2.0])
        v = SparseVector.from_dense(arr)
        assert np.array_equal(v.to_dense(), arr)
        assert v.nnz == 2

    def test_from_pairs_drops_zeros_and_sorts(self):
        v = SparseVector.from_pairs(6, [(4, 1.0), (1, 2.0), (2, 0.0)])
        assert list(v.indices) == [1, 4]
        assert list(v.values) == [2.0, 1.0]

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            SparseVector(3, [0, 0], [1.0, 2.0])  # duplicate index
        with pytest.raises(ValueError):
            SparseVector(3, [2, 1], [1.0, 2.0])  # unsorted
        with pytest.raises(ValueError):
            SparseVector(3, [0], [0.0])  # stored zero
        with pytest.raises(ValueError):
            SparseVector(3, [3], [1.0])  # out of range
        with pytest.raises(ValueError):
            SparseVector(3, [0], [np.inf])
        with pytest.raises(ValueError):
            SparseVector(0, [], [])

    def test_arrays_frozen(self):
        v = SparseVector(3, [1], [2.0])
        with pytest.raises(ValueError):
            v.values[0] = 5.0

    def test_equality(self):
        assert sv(4, {1: 2.0}) == sv(4, {1: 2.0})
        assert sv(4, {1: 2.0}) != sv(4, {1: 3.0})
        assert sv(4, {1: 2.0}) != sv(5, {1: 2.0})


class TestDistSq:
    def test_identical_is_zero(self):
        v = sv(8, {2: 1.5, 5: -3.0})
        assert dist_sq(v, v) == 0.0

    def test_three_four_five(self):
        assert dist_sq(sv(2, {0: 3.0}), sv(2, {1: 4.0})) == 25.0

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            dist_sq(sv(2, {0: 1.0}), sv(3, {0: 1.0}))

    def test_matches_dense(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            dim = int(rng.integers(2, 33))
            a = random_sparse_vector(rng, dim, min(dim, 6))
            b = random_sparse_vector(rng, dim, min(dim, 6))
            want = float(((a.to_dense() - b.to_dense()) ** 2).sum())
            got = dist_sq(a, b)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-15)

    def test_no_cancellation_far_from_origin(self):
        # tight pair translated far out: the norm-form formula would lose
        # every significant digit here, the merged walk must not. The offset
        # 2^-10 is exactly representable at magnitude 1e8, so the answer is
        # exact, not approximate.
        base = 1e8
        a = sv(3, {0: base, 1: base})
        b = sv(3, {0: base + 2.0 ** -10, 1: base})
        assert dist_sq(a, b) == pytest.approx(2.0 ** -20, rel=1e-12)


class TestSparseDot:
    def test_disjoint_supports(self):
        assert sparse_dot(sv(4, {0: 2.0}), sv(4, {3: 5.0})) == 0.0

    def test_matches_dense(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            dim = int(rng.integers(2, 33))
            a = random_sparse_vector(rng, dim, min(dim, 6))
            b = random_sparse_vector(rng, dim, min(dim, 6))
            assert sparse_dot(a, b) == pytest.approx(
                float(a.to_dense() @ b.to_dense()), rel=1e-12, abs=1e-15)


class TestSparseCombine:
    def test_matches_dense(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            dim = int(rng.integers(2, 20))
            vecs = [random_sparse_vector(rng, dim, min(dim, 5)) for _ in range(4)]
            coeffs = rng.normal(size=4)
            got = sparse_combine(vecs, coeffs)
            want = sum(c * v.to_dense() for c, v in zip(coeffs, vecs))
            assert np.allclose(got.to_dense(), want, rtol=1e-12, atol=1e-12)

    def test_exact_cancellation_gives_zero(self):
        v = sv(5, {1: 2.0, 3: -1.0})
        out = sparse_combine([v, v], [1.0, -1.0])
        assert out.nnz == 0

    def test_near_cancellation_entry_dropped(self):
        a = sv(3, {0: 1.0, 1: 1.0})
        b = sv(3, {0: -(1.0 - 2.2e-16), 1: 1.0})
        out = sparse_combine([a, b], [1.0, 1.0])
        # index 0 sums to ~2e-16 while index 1 holds 2.0: below the relative
        # drop threshold, so the support must not keep the dust entry
        assert list(out.indices) == [1]


class TestWeightedSet:
    def test_defaults_unit_weights(self):
        P = WeightedSet([sv(3, {0: 1.0}), sv(3, {1: 2.0})])
        assert P.total_weight == 2.0
        assert P.additive == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            WeightedSet([])
        with pytest.raises(ValueError):
            WeightedSet([sv(3, {0: 1.0})], [0.0])
        with pytest.raises(ValueError):
            WeightedSet([sv(3, {0: 1.0})], [1.0], additive=-1.0)
        with pytest.raises(ValueError):
            WeightedSet([sv(3, {0: 1.0}), sv(4, {0: 1.0})])
        with pytest.raises(ValueError):
            WeightedSet([sv(3, {0: 1.0})], [1.0, 2.0])

    def test_subset(self):
        P = random_weighted_set(np.random.default_rng(4), 10, 8, 3, additive=2.0)
        sub = P.subset([3, 5], additive=1.0)
        assert sub.n == 2
        assert sub.points[0] == P.points[3]
        assert sub.weights[1] == P.weights[5]
        assert sub.additive == 1.0

    def test_csr_layout(self):
        P = WeightedSet([sv(5, {1: 2.0, 4: 3.0}), sv(5, {0: -1.0})])
        indptr, indices, values = P.csr()
        assert list(indptr) == [0, 2, 3]
        assert list(indices) == [1, 4, 0]
        assert list(values) == [2.0, 3.0, -1.0]


class TestWeightedMean:
    def test_singleton_any_weight(self):
        p = sv(4, {2: 7.0})
        P = WeightedSet([p], [3.5])
        assert weighted_mean(P) == p

    def test_midpoint(self):
        P = WeightedSet([sv(2, {0: 1.0}), sv(2, {0: 3.0})])
        assert weighted_mean(P) == sv(2, {0: 2.0})

    def test_matches_dense_accumulation(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            P = random_weighted_set(rng, 10, 12, 4)
            want = (P.weights[:, None] * dense_matrix(P)).sum(axis=0) / P.weights.sum()
            assert np.allclose(weighted_mean(P).to_dense(), want,
                               rtol=1e-12, atol=1e-12)

    def test_weight_scale_equivariance(self):
        rng = np.random.default_rng(6)
        P = random_weighted_set(rng, 12, 10, 3)
        Q = WeightedSet(P.points, P.weights * 17.0, additive=P.additive)
        a, b = weighted_mean(P).to_dense(), weighted_mean(Q).to_dense()
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


class TestWeightedVariance:
    def test_identical_points(self):
        p = sv(3, {1: 4.0})
        P = WeightedSet([p, p, p], [1.0, 2.0, 0.5])
        assert weighted_variance(P) == pytest.approx(0.0, abs=1e-18)

    def test_symmetric_pair(self):
        P = WeightedSet([sv(1, {0: -1.0}), sv(1, {0: 1.0})])
        assert weighted_variance(P) == pytest.approx(2.0, rel=1e-12)

    def test_matches_dense(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            P = random_weighted_set(rng, 15, 10, 4)
            X = dense_matrix(P)
            mu = (P.weights[:, None] * X).sum(axis=0) / P.weights.sum()
            want = float((P.weights * ((X - mu) ** 2).sum(axis=1)).sum())
            assert weighted_variance(P) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_point_dist_sq_matches_dense():
    rng = np.random.default_rng(8)
    for _ in range(20):
        dim = int(rng.integers(2, 16))
        P = random_weighted_set(rng, 12, dim, min(dim, 4))
        x = random_sparse_vector(rng, dim, min(dim, 4))
        want = ((dense_matrix(P) - x.to_dense()) ** 2).sum(axis=1)
        assert np.allclose(point_dist_sq(P, x), want, rtol=1e-12, atol=1e-12)


def test_centroid_cost_identity():
    # master numeric oracle: cost to any single center decomposes into
    # variance plus total weight times the squared centroid offset
    rng = np.random.default_rng(9)
    for trial in range(200):
        n = int(rng.integers(2, 51))
        dim = int(rng.integers(2, 33))
        P = random_weighted_set(rng, n, dim, min(dim, 6),
                                additive=float(rng.uniform(0, 2)))
        x = random_sparse_vector(rng, dim, min(dim, 6))
        mu = weighted_mean(P)
        lhs = cost(P, CenterSet([x]))
        rhs = (weighted_variance(P) + P.total_weight * dist_sq(mu, x)
               + P.additive)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)

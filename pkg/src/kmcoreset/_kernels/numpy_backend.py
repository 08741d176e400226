"""Pure-numpy kernel lane.

Same contracts as the numba lane: CSR-style arrays in, numpy arrays out.
Assignment loops run once per center and vectorize over all stored entries,
so memory stays proportional to the number of nonzeros, never the dimension.
"""

import numpy as np

from .dp import exact_partition_dp

__all__ = ["assign_points", "dots_with_vector", "sum_rows", "exact_partition_dp"]


def _row_ids(indptr):
    n = indptr.shape[0] - 1
    return np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))


def assign_points(indptr, indices, values, c_indptr, c_indices, c_values):
    """Nearest center per point: (assignment, squared distance) arrays.

    Ties break to the lowest center index. Distances are assembled from the
    entrywise difference on matching indices, so coincident points and centers
    come out at (numerically) zero instead of a large-norm cancellation.
    """
    n = indptr.shape[0] - 1
    k = c_indptr.shape[0] - 1
    row = _row_ids(indptr)
    psq = values * values
    best = np.full(n, np.inf, dtype=np.float64)
    assign = np.zeros(n, dtype=np.int64)
    for j in range(k):
        ci = c_indices[c_indptr[j]:c_indptr[j + 1]]
        cv = c_values[c_indptr[j]:c_indptr[j + 1]]
        if ci.shape[0] == 0:
            d = np.bincount(row, weights=psq, minlength=n)
        else:
            pos = np.searchsorted(ci, indices)
            pos_c = np.minimum(pos, ci.shape[0] - 1)
            matched = ci[pos_c] == indices
            cv_at = np.where(matched, cv[pos_c], 0.0)
            diff = values - cv_at
            # Matched entries contribute (v - c)^2 - c^2; the trailing
            # dot(cv, cv) restores the unmatched center mass.
            contrib = np.where(matched, diff * diff - cv_at * cv_at, psq)
            d = np.bincount(row, weights=contrib, minlength=n) + float(cv @ cv)
        closer = d < best
        best = np.where(closer, d, best)
        assign[closer] = j
    np.maximum(best, 0.0, out=best)
    return assign, best


def dots_with_vector(indptr, indices, values, v_indices, v_values):
    """Inner product of every CSR row with one sparse vector."""
    n = indptr.shape[0] - 1
    if v_indices.shape[0] == 0 or indices.shape[0] == 0:
        return np.zeros(n, dtype=np.float64)
    row = _row_ids(indptr)
    pos = np.searchsorted(v_indices, indices)
    pos_c = np.minimum(pos, v_indices.shape[0] - 1)
    matched = v_indices[pos_c] == indices
    contrib = np.where(matched, values * v_values[pos_c], 0.0)
    return np.bincount(row, weights=contrib, minlength=n)


def sum_rows(indptr, indices, values, coeffs):
    """Linear combination sum_i coeffs[i] * row_i as (indices, values).

    Output indices are sorted and unique; exact zeros are kept (pruning is the
    caller's policy).
    """
    if indices.shape[0] == 0:
        return indices[:0].copy(), values[:0].copy()
    row = _row_ids(indptr)
    scaled = values * coeffs[row]
    uniq, inverse = np.unique(indices, return_inverse=True)
    sums = np.bincount(inverse, weights=scaled, minlength=uniq.shape[0])
    return uniq.astype(np.int64, copy=False), sums

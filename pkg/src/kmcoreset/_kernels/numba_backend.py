"""numba-compiled kernel lane. Mirrors numpy_backend's contracts exactly."""

import numpy as np
from numba import njit

from . import dp

__all__ = ["assign_points", "dots_with_vector", "sum_rows", "exact_partition_dp"]


@njit(cache=True)
def assign_points(indptr, indices, values, c_indptr, c_indices, c_values):
    n = indptr.shape[0] - 1
    k = c_indptr.shape[0] - 1
    assign = np.zeros(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    for i in range(n):
        ps, pe = indptr[i], indptr[i + 1]
        bd = np.inf
        bj = 0
        for j in range(k):
            a = ps
            b = c_indptr[j]
            ce = c_indptr[j + 1]
            acc = 0.0
            while a < pe and b < ce:
                ia = indices[a]
                ib = c_indices[b]
                if ia == ib:
                    dv = values[a] - c_values[b]
                    acc += dv * dv
                    a += 1
                    b += 1
                elif ia < ib:
                    acc += values[a] * values[a]
                    a += 1
                else:
                    acc += c_values[b] * c_values[b]
                    b += 1
            while a < pe:
                acc += values[a] * values[a]
                a += 1
            while b < ce:
                acc += c_values[b] * c_values[b]
                b += 1
            if acc < bd:
                bd = acc
                bj = j
        assign[i] = bj
        best[i] = bd
    return assign, best


@njit(cache=True)
def dots_with_vector(indptr, indices, values, v_indices, v_values):
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.float64)
    nv = v_indices.shape[0]
    for i in range(n):
        a = indptr[i]
        pe = indptr[i + 1]
        b = 0
        acc = 0.0
        while a < pe and b < nv:
            ia = indices[a]
            ib = v_indices[b]
            if ia == ib:
                acc += values[a] * v_values[b]
                a += 1
                b += 1
            elif ia < ib:
                a += 1
            else:
                b += 1
        out[i] = acc
    return out


@njit(cache=True)
def sum_rows(indptr, indices, values, coeffs):
    total = indices.shape[0]
    if total == 0:
        return indices[:0].copy(), values[:0].copy()
    n = indptr.shape[0] - 1
    scaled = np.empty(total, dtype=np.float64)
    for i in range(n):
        c = coeffs[i]
        for j in range(indptr[i], indptr[i + 1]):
            scaled[j] = values[j] * c
    order = np.argsort(indices)
    out_idx = np.empty(total, dtype=np.int64)
    out_val = np.empty(total, dtype=np.float64)
    m = 0
    for oi in range(total):
        o = order[oi]
        key = indices[o]
        if m > 0 and out_idx[m - 1] == key:
            out_val[m - 1] += scaled[o]
        else:
            out_idx[m] = key
            out_val[m] = scaled[o]
            m += 1
    return out_idx[:m].copy(), out_val[:m].copy()


exact_partition_dp = njit(cache=True)(dp.exact_partition_dp)

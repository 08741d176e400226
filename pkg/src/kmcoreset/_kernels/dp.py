"""Exact clustering cost over all partitions, by subset dynamic programming.

Cost model: squared-Euclidean clustering of weighted points, where a block
T of a partition pays sum_{i in T} u_i*|p_i|^2 - |sum_{i in T} u_i*p_i|^2 / W_T
(its optimal one-center cost). The DP minimizes the total over partitions into
at most m blocks, which equals the exact m-means cost of the point set.

The algorithm enumerates all 2^n point subsets once to get per-block costs,
then runs a min-plus layer per extra allowed block over all submask pairs,
O(m * 3^n) time and O(n * 2^n) memory. Written loop-style so the numba lane
can compile it unchanged; the numpy lane runs the same bytecode in plain
Python and is only practical up to roughly n = 12.
"""

import numpy as np


def exact_partition_dp(u, s2, H, m_max):
    """Optimal clustering costs for 1..m_max blocks plus reconstruction table.

    u: positive point weights, shape (n,)
    s2: squared norms |p_i|^2, shape (n,)
    H: H[i, j] = u_j * <p_i, p_j>, shape (n, n)
    m_max: largest block count to solve for (1 <= m_max <= n)

    Returns (curve, choice): curve[j] is the optimal cost with at most j
    blocks (curve[0] = inf), choice[j][mask] is the block split off from
    `mask` at layer j during the optimum, or 0 when layer j-1 already
    achieves it. Additive offsets are the caller's business.
    """
    n = u.shape[0]
    full = 1 << n

    # Per-subset aggregates, each extending the subset without its lowest bit.
    rowsum = np.zeros((n, full), dtype=np.float64)
    for i in range(n):
        for mask in range(1, full):
            low = mask & (-mask)
            b = 0
            while (low >> b) & 1 == 0:
                b += 1
            rowsum[i, mask] = rowsum[i, mask ^ low] + H[i, b]

    wsum = np.zeros(full, dtype=np.float64)
    sqsum = np.zeros(full, dtype=np.float64)
    normsq = np.zeros(full, dtype=np.float64)
    for mask in range(1, full):
        low = mask & (-mask)
        b = 0
        while (low >> b) & 1 == 0:
            b += 1
        prev = mask ^ low
        wsum[mask] = wsum[prev] + u[b]
        sqsum[mask] = sqsum[prev] + u[b] * s2[b]
        normsq[mask] = normsq[prev] + 2.0 * u[b] * rowsum[b, prev] + u[b] * u[b] * s2[b]

    one_block = np.zeros(full, dtype=np.float64)
    for mask in range(1, full):
        c = sqsum[mask] - normsq[mask] / wsum[mask]
        one_block[mask] = c if c > 0.0 else 0.0

    curve = np.empty(m_max + 1, dtype=np.float64)
    choice = np.zeros((m_max + 1, full), dtype=np.int64)
    curve[0] = np.inf

    opt_prev = one_block.copy()
    curve[1] = opt_prev[full - 1]
    opt_new = np.empty(full, dtype=np.float64)

    for j in range(2, m_max + 1):
        opt_new[0] = 0.0
        for mask in range(1, full):
            low = mask & (-mask)
            rest = mask ^ low
            best = opt_prev[mask]
            best_t = 0
            # Split off every block containing the lowest point of `mask`.
            sub = rest
            while True:
                t = sub | low
                c = one_block[t] + opt_prev[mask ^ t]
                if c < best:
                    best = c
                    best_t = t
                if sub == 0:
                    break
                sub = (sub - 1) & rest
            opt_new[mask] = best
            choice[j, mask] = best_t
        curve[j] = opt_new[full - 1]
        tmp = opt_prev
        opt_prev = opt_new
        opt_new = tmp
        if curve[j] <= 0.0:
            for jj in range(j + 1, m_max + 1):
                curve[jj] = curve[j]
            break

    return curve, choice

"""Pure-Python/numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
The two must produce identical results; ``tests/test_kernels.py`` runs both.
"""

import numpy as np

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2

_TIE = 1e-12


def max_shattered(masks, n_points, k_max):
    """Largest k <= k_max such that some k-subset of points is shattered.

    ``masks[s]`` has bit ``p`` set iff point ``p`` belongs to set ``s``.
    Subsets are enumerated by increasing size; shattering is hereditary, so
    the search stops at the first size with no shattered subset.
    """
    sets = {int(m) for m in masks}
    best = 0
    for k in range(1, min(k_max, n_points) + 1):
        target = 1 << k
        found = False
        sub = target - 1
        limit = 1 << n_points
        while sub < limit:
            if len({m & sub for m in sets}) == target:
                found = True
                break
            # Gosper's hack: next integer with the same popcount
            low = sub & -sub
            ripple = sub + low
            sub = (((ripple ^ sub) >> 2) // low) | ripple
        if not found:
            break
        best = k
    return best


def pivot(T, row, col):
    """Gauss-Jordan pivot of tableau ``T`` on entry (row, col), in place."""
    T[row, :] /= T[row, col]
    f = T[:, col].copy()
    f[row] = 0.0
    T -= np.outer(f, T[row, :])
    T[:, col] = 0.0
    T[row, col] = 1.0


def simplex_iterate(T, basis, n_cols, max_iter, tol):
    """Run Bland-rule primal simplex pivots on a minimisation tableau.

    ``T`` has one row per constraint plus a final reduced-cost row; the last
    column is the right-hand side. Only the first ``n_cols`` columns may
    enter. ``T`` and ``basis`` are updated in place.

    Returns ``(status, iterations, column)`` where ``column`` is the
    unbounded direction's entering column (or -1).
    """
    m = T.shape[0] - 1
    it = 0
    while True:
        cost = T[m, :n_cols]
        neg = np.flatnonzero(cost < -tol)
        if neg.size == 0:
            return OPTIMAL, it, -1
        col = int(neg[0])
        leave = -1
        best = 0.0
        for i in range(m):
            a = T[i, col]
            if a > tol:
                ratio = T[i, -1] / a
                if leave < 0 or ratio < best - _TIE:
                    leave, best = i, ratio
                elif ratio <= best + _TIE and basis[i] < basis[leave]:
                    leave, best = i, ratio
        if leave < 0:
            return UNBOUNDED, it, col
        if it >= max_iter:
            return ITERATION_LIMIT, it, -1
        pivot(T, leave, col)
        basis[leave] = col
        it += 1


def adjacent_pairs(zero_masks, plus, minus, min_common):
    """Combinatorial adjacency test of the double description method.

    Rays ``p`` (from ``plus``) and ``n`` (from ``minus``) are adjacent iff
    their common zero set has at least ``min_common`` constraints and is not
    contained in the zero set of any third ray. Returns an ``(k, 2)`` array
    of adjacent index pairs.
    """
    Z = np.asarray(zero_masks, dtype=np.uint64)
    out = []
    for p in plus:
        for n in minus:
            z = Z[p] & Z[n]
            if int(z).bit_count() < min_common:
                continue
            covers = (Z & z) == z
            covers[p] = False
            covers[n] = False
            if not covers.any():
                out.append((p, n))
    return np.array(out, dtype=np.int64).reshape(-1, 2)

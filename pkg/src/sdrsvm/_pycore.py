"""Pure-numpy implementations of the hot kernels.

This module mirrors ``_core.pyx`` operation for operation: same pivot rule,
same tie-breaking, same floating-point evaluation order for every tableau
entry. Given the same tableau, both return bitwise-identical results.
"""
import numpy as np

NAME = "python"

OPTIMAL = 0
UNBOUNDED = 1
ITERATION_LIMIT = 2
STALLED = 3

DANTZIG = 0
BLAND = 1
BLAND_ALWAYS = 2

GAUSSIAN = 0
LINEAR = 1


def pivot(T, row, col):
    prow = T[row] / T[row, col]
    factor = T[:, col].copy()
    T -= np.outer(factor, prow)
    T[row] = prow


def simplex_loop(T, basis, max_iters, tol, stall_limit, mode, stall):
    """Run primal simplex pivots on tableau ``T`` in place.

    ``T`` has the constraint rows first and the reduced-cost row last; the
    last column is the right-hand side. ``basis[i]`` is the column basic in
    row ``i`` and is updated in place.

    ``mode`` is ``DANTZIG``, ``BLAND`` (left again after the first
    nondegenerate pivot) or ``BLAND_ALWAYS``. In ``DANTZIG`` mode the loop
    returns ``STALLED`` after ``stall_limit`` consecutive degenerate pivots
    so the caller can pick a remedy. ``stall`` carries the degenerate-pivot
    count across calls.

    Returns ``(status, iterations, column, mode, stall, bland_used)``;
    ``column`` is the entering column when ``status == UNBOUNDED``.
    """
    m = T.shape[0] - 1
    n = T.shape[1] - 1
    iters = 0
    used = mode != DANTZIG
    while True:
        rc = T[m, :n]
        if mode != DANTZIG:
            cand = np.flatnonzero(rc < -tol)
            if cand.size == 0:
                return OPTIMAL, iters, -1, mode, stall, used
            j = int(cand[0])
        else:
            j = int(np.argmin(rc))
            if not rc[j] < -tol:
                return OPTIMAL, iters, -1, mode, stall, used
        if mode == DANTZIG and stall >= stall_limit:
            return STALLED, iters, j, mode, stall, used
        if iters >= max_iters:
            return ITERATION_LIMIT, iters, j, mode, stall, used
        colv = T[:m, j]
        rows = np.flatnonzero(colv > tol)
        if rows.size == 0:
            return UNBOUNDED, iters, j, mode, stall, used
        ratios = np.maximum(T[rows, n], 0.0) / colv[rows]
        best = ratios.min()
        tied = rows[ratios == best]
        r = int(tied[np.argmin(basis[tied])])
        pivot(T, r, j)
        basis[r] = j
        iters += 1
        if best == 0.0:
            stall += 1
        else:
            stall = 0
            if mode == BLAND:
                mode = DANTZIG


def cross_kernel(X, Z, family, gamma):
    """Kernel matrix ``K[i, j] = k(X[i], Z[j])``."""
    out = np.empty((X.shape[0], Z.shape[0]))
    for i in range(X.shape[0]):
        out[i] = _row(X[i], Z, family, gamma)
    return out


def gram(X, family, gamma):
    """Symmetric Gram matrix; the upper triangle is computed and mirrored."""
    n = X.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        row = _row(X[i], X[i:], family, gamma)
        out[i, i:] = row
        out[i:, i] = row
    return out


def _row(x, Z, family, gamma):
    if family == GAUSSIAN:
        diff = x - Z
        return np.exp(-gamma * (diff * diff).sum(axis=1))
    return (x * Z).sum(axis=1)

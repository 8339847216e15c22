# cython: language_level=3
"""Compiled hot kernels: simplex pivoting loop and kernel matrices.

Semantics match ``_pycore`` exactly; see that module for the contract.
"""
import numpy as np
from libc.math cimport exp

NAME = "cython"

DEF OPTIMAL = 0
DEF UNBOUNDED = 1
DEF ITERATION_LIMIT = 2
DEF STALLED = 3
DEF DANTZIG = 0
DEF BLAND = 1


cdef void _pivot(double[:, ::1] T, Py_ssize_t row, Py_ssize_t col) noexcept nogil:
    cdef Py_ssize_t nr = T.shape[0], nc = T.shape[1], i, k
    cdef double piv = T[row, col], f
    for k in range(nc):
        T[row, k] = T[row, k] / piv
    for i in range(nr):
        if i == row:
            continue
        f = T[i, col]
        if f == 0.0:
            continue
        for k in range(nc):
            T[i, k] = T[i, k] - f * T[row, k]


def pivot(double[:, ::1] T, Py_ssize_t row, Py_ssize_t col):
    _pivot(T, row, col)


def simplex_loop(double[:, ::1] T, long[::1] basis, Py_ssize_t max_iters,
                 double tol, Py_ssize_t stall_limit, int mode, Py_ssize_t stall):
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t n = T.shape[1] - 1
    cdef Py_ssize_t iters = 0, i, j, r
    cdef double best, ratio, v, rhs
    cdef int status = OPTIMAL
    cdef bint used = mode != DANTZIG
    with nogil:
        while True:
            j = -1
            if mode != DANTZIG:
                for i in range(n):
                    if T[m, i] < -tol:
                        j = i
                        break
            else:
                v = T[m, 0]
                j = 0
                for i in range(1, n):
                    if T[m, i] < v:
                        v = T[m, i]
                        j = i
                if not v < -tol:
                    j = -1
            if j < 0:
                status = OPTIMAL
                break
            if mode == DANTZIG and stall >= stall_limit:
                status = STALLED
                break
            if iters >= max_iters:
                status = ITERATION_LIMIT
                break
            r = -1
            best = 0.0
            for i in range(m):
                if T[i, j] > tol:
                    rhs = T[i, n]
                    if rhs < 0.0:
                        rhs = 0.0
                    ratio = rhs / T[i, j]
                    if r < 0 or ratio < best or (ratio == best and basis[i] < basis[r]):
                        r = i
                        best = ratio
            if r < 0:
                status = UNBOUNDED
                break
            _pivot(T, r, j)
            basis[r] = j
            iters += 1
            if best == 0.0:
                stall += 1
            else:
                stall = 0
                if mode == BLAND:
                    mode = DANTZIG
    if status == OPTIMAL:
        j = -1
    return status, iters, j, mode, stall, bool(used)


cdef double _pair(const double[::1] x, const double[::1] z, int family,
                  double gamma) noexcept nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0, diff
    if family == 0:
        for k in range(x.shape[0]):
            diff = x[k] - z[k]
            s += diff * diff
        return exp(-gamma * s)
    for k in range(x.shape[0]):
        s += x[k] * z[k]
    return s


def cross_kernel(const double[:, ::1] X, const double[:, ::1] Z, int family,
                 double gamma):
    cdef Py_ssize_t i, j
    out = np.empty((X.shape[0], Z.shape[0]))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(X.shape[0]):
            for j in range(Z.shape[0]):
                o[i, j] = _pair(X[i], Z[j], family, gamma)
    return out


def gram(const double[:, ::1] X, int family, double gamma):
    cdef Py_ssize_t n = X.shape[0], i, j
    out = np.empty((n, n))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(i, n):
                o[i, j] = _pair(X[i], X[j], family, gamma)
                o[j, i] = o[i, j]
    return out

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled splitting loop for the l1 tangential subproblem.

Mirrors ``pgeq._admm_py.admm_l1`` exactly; see that module for the iteration.
"""
from libc.math cimport fabs, sqrt
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_blas cimport dgemv

# below this size the plain loop beats the BLAS call overhead
cdef enum:
    _BLAS_MIN_N = 24


cdef inline double _soft(double t, double k) nogil:
    if t > k:
        return t - k
    if t < -k:
        return t + k
    return 0.0


def admm_l1(const double[:, ::1] K, const double[::1] g, const double[::1] x_shift,
            const unsigned char[::1] mask, double thresh, double rho,
            double[::1] u, double[::1] z, double[::1] w,
            Py_ssize_t max_iter, double tol_primal, double tol_dual,
            double balance, Py_ssize_t min_iter):
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t i, j, it = 0
    cdef double acc, t, zi, dz, rp, rd, primal = 0.0, dual = 0.0
    cdef int status = 1
    cdef char trans = b'T'
    cdef int ni = <int> n, inc = 1
    cdef double minus_one = -1.0, zero = 0.0
    cdef double* a = <double*> malloc(n * sizeof(double))
    if a == NULL:
        raise MemoryError()
    try:
        with nogil:
            while it < max_iter:
                it += 1
                for i in range(n):
                    a[i] = g[i] - rho * (z[i] - w[i])
                if n >= _BLAS_MIN_N:
                    # row-major K seen as column-major K^T, so trans='T' gives K a
                    dgemv(&trans, &ni, &ni, &minus_one, <double*> &K[0, 0], &ni,
                          a, &inc, &zero, &u[0], &inc)
                else:
                    for i in range(n):
                        acc = 0.0
                        for j in range(n):
                            acc = acc + K[i, j] * a[j]
                        u[i] = -acc
                rp = 0.0
                rd = 0.0
                for i in range(n):
                    if mask[i]:
                        t = x_shift[i] + u[i] + w[i]
                        zi = _soft(t, thresh) - x_shift[i]
                    else:
                        zi = u[i] + w[i]
                    dz = zi - z[i]
                    rd = rd + dz * dz
                    z[i] = zi
                    t = u[i] - zi
                    w[i] = w[i] + t
                    rp = rp + t * t
                primal = sqrt(rp)
                dual = rho * sqrt(rd)
                if primal <= tol_primal and dual <= tol_dual:
                    status = 0
                    break
                if balance > 0.0 and it >= min_iter:
                    if primal > balance * dual or dual > balance * primal:
                        status = 2
                        break
    finally:
        free(a)
    return it, primal, dual, status

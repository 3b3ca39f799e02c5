# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise kernels: surrogate sums and derivative row/column
sums over the positive x negative score grid, without materializing it."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log1p

cnp.import_array()

cdef double LN2 = 0.6931471805599453


cdef inline double _ipow(double x, int p) noexcept nogil:
    cdef double out = 1.0
    cdef int i
    for i in range(p):
        out *= x
    return out


cdef inline double _surr(double z, int kind, double mu, int p) noexcept nogil:
    if kind == 0:
        if z > 0.0:
            return log1p(exp(-z)) / LN2
        return (-z + log1p(exp(z))) / LN2
    if z < mu:
        return _ipow(mu - z, p)
    return 0.0


cdef inline double _dsurr(double z, int kind, double mu, int p) noexcept nogil:
    cdef double ez
    if kind == 0:
        if z >= 0.0:
            ez = exp(-z)
            return -(ez / (1.0 + ez)) / LN2
        ez = exp(z)
        return -(1.0 / (1.0 + ez)) / LN2
    if z < mu:
        return -p * _ipow(mu - z, p - 1)
    return 0.0


def pair_surrogate_sum(pos, neg, int kind, double mu, int p):
    cdef double[::1] a = np.ascontiguousarray(pos, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(neg, dtype=np.float64)
    cdef Py_ssize_t i, j, na = a.shape[0], nb = b.shape[0]
    cdef double total = 0.0, si
    with nogil:
        for i in range(na):
            si = a[i]
            for j in range(nb):
                total += _surr(si - b[j], kind, mu, p)
    return total


def pair_surrogate_grad_sums(pos, neg, int kind, double mu, int p):
    cdef double[::1] a = np.ascontiguousarray(pos, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(neg, dtype=np.float64)
    cdef Py_ssize_t i, j, na = a.shape[0], nb = b.shape[0]
    dpos_arr = np.zeros(na, dtype=np.float64)
    dneg_arr = np.zeros(nb, dtype=np.float64)
    cdef double[::1] dpos = dpos_arr
    cdef double[::1] dneg = dneg_arr
    cdef double total = 0.0, si, g, row
    with nogil:
        for i in range(na):
            si = a[i]
            row = 0.0
            for j in range(nb):
                total += _surr(si - b[j], kind, mu, p)
                g = _dsurr(si - b[j], kind, mu, p)
                row += g
                dneg[j] += g
            dpos[i] = row
    return total, dpos_arr, dneg_arr

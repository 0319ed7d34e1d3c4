# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit kernels; see zoomtower.kernels for the interface."""

from libc.math cimport fabs, floor, log

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _step(int kid, double a, double x) nogil:
    cdef double y
    if kid == 0:
        y = a * x
        return y - floor(y)
    elif kid == 1:
        return 1.0 - fabs(1.0 - 2.0 * x)
    elif kid == 2:
        return a * x * (1.0 - x)
    else:
        if x < 0.5:
            y = x + 2.0 * x * x
        else:
            y = x - 2.0 * (1.0 - x) * (1.0 - x)
        return y - floor(y)


cdef inline double _absd(int kid, double a, double x) nogil:
    if kid == 0:
        return a
    elif kid == 1:
        return 2.0
    elif kid == 2:
        return fabs(a * (1.0 - 2.0 * x))
    else:
        if x < 0.5:
            return 1.0 + 4.0 * x
        return 1.0 + 4.0 * (1.0 - x)


def orbit_points(int kid, double a, double x0, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n + 1)
    cdef double x = x0
    cdef Py_ssize_t i
    with nogil:
        for i in range(n + 1):
            out[i] = x
            x = _step(kid, a, x)
    return out


def orbit_points_many(int kid, double a, cnp.ndarray[cnp.float64_t, ndim=1] x0s, Py_ssize_t n):
    cdef Py_ssize_t m = x0s.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, n + 1))
    cdef double x
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(m):
            x = x0s[i]
            for j in range(n + 1):
                out[i, j] = x
                x = _step(kid, a, x)
    return out


def log_deriv_sum(int kid, double a, double x0, Py_ssize_t n):
    cdef double x = x0
    cdef double total = 0.0
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            total += log(_absd(kid, a, x))
            x = _step(kid, a, x)
    return total


def histogram_orbit(int kid, double a, double x0, Py_ssize_t n, Py_ssize_t nbins):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(nbins, dtype=np.int64)
    cdef double x = x0
    cdef Py_ssize_t i, idx
    with nogil:
        for i in range(n):
            x = _step(kid, a, x)
            idx = <Py_ssize_t>(x * nbins)
            if idx >= nbins:
                idx = nbins - 1
            counts[idx] += 1
    return counts

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: hypergeometric series and iterated Wiener sums.

Mirrors the numpy fallbacks in ``_kernels_py``; see that module for the
contracts. Kept deliberately small -- everything else in the package is
vectorised numpy already.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, NAN

cnp.import_array()

BACKEND_NAME = "cython"

cdef int _MAX_TERMS = 10000
cdef double _REL_TOL = 1e-16


def hyp2f1_series(double a, double b, double c, w):
    """Gauss series at 0 <= w < 1, elementwise over ``w``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] warr = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(warr)
    cdef Py_ssize_t i, n
    cdef double wi, term, s, fac
    for i in range(warr.shape[0]):
        wi = warr[i]
        if wi == 0.0:
            out[i] = 1.0
            continue
        term = 1.0
        s = 1.0
        out[i] = NAN
        for n in range(_MAX_TERMS):
            fac = (a + n) * (b + n) / ((c + n) * (n + 1.0))
            term *= fac * wi
            s += term
            if fabs(term) <= _REL_TOL * fabs(s) or fac == 0.0:
                out[i] = s
                break
    return out


def iterated_sum2(kmat, dw):
    """sum_{i>j} kmat[i,j] dw[p,i] dw[p,j]; kmat strictly lower triangular."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] k = np.ascontiguousarray(kmat, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] d = np.ascontiguousarray(dw, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(d.shape[0])
    cdef Py_ssize_t p, i, j, n = d.shape[1]
    cdef double acc, inner
    for p in range(d.shape[0]):
        acc = 0.0
        for i in range(1, n):
            inner = 0.0
            for j in range(i):
                inner += k[i, j] * d[p, j]
            acc += inner * d[p, i]
        out[p] = acc
    return out


def iterated_sum3(ktens, dw):
    """sum_{i>j>k} ktens[i,j,k] dw[p,i] dw[p,j] dw[p,k]."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3] kt = np.ascontiguousarray(ktens, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] d = np.ascontiguousarray(dw, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(d.shape[0])
    cdef Py_ssize_t p, i, j, k, n = d.shape[1]
    cdef double acc, s2, s1
    for p in range(d.shape[0]):
        acc = 0.0
        for i in range(2, n):
            s2 = 0.0
            for j in range(1, i):
                s1 = 0.0
                for k in range(j):
                    s1 += kt[i, j, k] * d[p, k]
                s2 += s1 * d[p, j]
            acc += s2 * d[p, i]
        out[p] = acc
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the randomized-measurement post-processing.

Same contract as `_kernels_py`: an in-place Walsh-Hadamard transform plus the
weighted moment accumulators used by the U-statistic estimator. Reductions run
in a fixed left-to-right order, so each backend is deterministic regardless of
thread count.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def wht_inplace(cnp.ndarray a not None):
    """Unnormalized Walsh-Hadamard transform of a length-2**n vector, in place."""
    if a.dtype == np.int64:
        _wht_i64(a)
    elif a.dtype == np.float64:
        _wht_f64(a)
    else:
        raise TypeError(f"wht_inplace supports int64/float64, got {a.dtype}")
    return a


cdef void _wht_i64(cnp.int64_t[::1] a):
    cdef Py_ssize_t d = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    cdef cnp.int64_t lo, hi
    while h < d:
        i = 0
        while i < d:
            for j in range(i, i + h):
                lo = a[j]
                hi = a[j + h]
                a[j] = lo + hi
                a[j + h] = lo - hi
            i += 2 * h
        h *= 2


cdef void _wht_f64(cnp.float64_t[::1] a):
    cdef Py_ssize_t d = a.shape[0]
    cdef Py_ssize_t h = 1, i, j
    cdef cnp.float64_t lo, hi
    while h < d:
        i = 0
        while i < d:
            for j in range(i, i + h):
                lo = a[j]
                hi = a[j + h]
                a[j] = lo + hi
                a[j + h] = lo - hi
            i += 2 * h
        h *= 2


def moments_from_counts(cnp.ndarray t not None, cnp.ndarray w3 not None, n_shots):
    """Weighted 4th/2nd U-statistic numerators from WHT'd outcome counts.

    See `_kernels_py.moments_from_counts` for the formulas; the per-entry
    elementary symmetric sums are exact in 64-bit integers.
    """
    cdef cnp.int64_t[::1] tv = np.ascontiguousarray(t, dtype=np.int64)
    cdef cnp.float64_t[::1] wv = np.ascontiguousarray(w3, dtype=np.float64)
    cdef Py_ssize_t d = tv.shape[0]
    cdef cnp.int64_t N = <cnp.int64_t> int(n_shots)
    cdef cnp.int64_t t2, e2, e4
    cdef double s4 = 0.0, s2 = 0.0
    cdef Py_ssize_t i
    for i in range(d):
        t2 = tv[i] * tv[i]
        e2 = (t2 - N) >> 1
        e4 = (t2 * (t2 - 6 * N + 8) + 3 * N * N - 6 * N) / 24
        s4 += wv[i] * <double> e4
        s2 += wv[i] * <double> e2
    return s4, s2


def moments_from_probs(cnp.ndarray w not None, cnp.ndarray w3 not None):
    """Weighted 4th/2nd moments of WHT'd Born probabilities (analytic mode)."""
    cdef cnp.float64_t[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.float64_t[::1] w3v = np.ascontiguousarray(w3, dtype=np.float64)
    cdef Py_ssize_t d = wv.shape[0]
    cdef double s4 = 0.0, s2 = 0.0, x2
    cdef Py_ssize_t i
    for i in range(d):
        x2 = wv[i] * wv[i]
        s4 += w3v[i] * x2 * x2
        s2 += w3v[i] * x2
    return s4, s2

# cython: language_level=3
"""Compiled inner loops. Same signatures as ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _gini_row(const double[::1] p) noexcept nogil:
    cdef Py_ssize_t n = p.shape[0], i
    cdef double total = 0.0, num = 0.0
    for i in range(n):
        total += p[i]
        num += (2.0 * (i + 1) - n - 1.0) * p[i]
    return num / (n * total)


def gini_sorted(p):
    """Gini index of an ascending, strictly positive 1-D power vector."""
    cdef const double[::1] v = np.ascontiguousarray(p, dtype=np.float64)
    if v.shape[0] == 0:
        raise ValueError("empty power vector")
    return _gini_row(v)


def gini_rows(x):
    """Row-wise Gini index of a 2-D array; rows are sorted on a copy."""
    # numpy's sort is already vectorised; the gain here is the fused weighted sum
    cdef double[:, ::1] s = np.ascontiguousarray(np.sort(np.asarray(x, dtype=np.float64), axis=1))
    cdef Py_ssize_t rows = s.shape[0], n = s.shape[1], r, i
    cdef double total, num
    cdef const double* row
    out = np.empty(rows, dtype=np.float64)
    cdef double[::1] o = out
    if n == 0:
        raise ValueError("empty power vector")
    with nogil:
        for r in range(rows):
            row = &s[r, 0]
            total = 0.0
            num = 0.0
            for i in range(n):
                total += row[i]
                num += (2.0 * i + 1.0 - n) * row[i]
            o[r] = num / (n * total)
    return out


def local_maxima(bins, double threshold):
    """Indices of strict interior local maxima with value above ``threshold``."""
    cdef const double[::1] b = np.ascontiguousarray(bins, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0], i, k = 0
    out = np.empty(max(n - 2, 0), dtype=np.intp)
    cdef Py_ssize_t[::1] o = out
    with nogil:
        for i in range(1, n - 1):
            if b[i] > b[i - 1] and b[i] > b[i + 1] and b[i] > threshold:
                o[k] = i
                k += 1
    return out[:k]

"""Numpy implementations of the compiled kernels in ``_ckernels.pyx``."""
import numpy as np


def gini_sorted(p):
    """Gini index of an ascending, strictly positive 1-D power vector."""
    p = np.asarray(p, dtype=np.float64)
    n = p.shape[0]
    if n == 0:
        raise ValueError("empty power vector")
    w = 2.0 * np.arange(1, n + 1) - n - 1.0
    return float(p @ w / (n * p.sum()))


def gini_rows(x):
    """Row-wise Gini index of a 2-D array; rows are sorted on a copy."""
    s = np.sort(np.asarray(x, dtype=np.float64), axis=1)
    n = s.shape[1]
    if n == 0:
        raise ValueError("empty power vector")
    w = 2.0 * np.arange(1, n + 1) - n - 1.0
    # not s @ w: BLAS blocking depends on the row count, which would make a
    # row's value depend on how the drops were chunked across workers
    return (s * w).sum(axis=1) / (n * s.sum(axis=1))


def local_maxima(bins, threshold):
    """Indices of strict interior local maxima with value above ``threshold``."""
    b = np.asarray(bins, dtype=np.float64)
    if b.shape[0] < 3:
        return np.empty(0, dtype=np.intp)
    mid = b[1:-1]
    hit = (mid > b[:-2]) & (mid > b[2:]) & (mid > threshold)
    return np.flatnonzero(hit) + 1

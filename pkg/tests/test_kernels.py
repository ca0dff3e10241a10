import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chansparse import _pykernels, kernels

from conftest import _ckernels, gini_exact

pos = st.floats(1e-6, 1e6, allow_nan=False, allow_infinity=False)


def test_gini_sorted_hand_values(backend):
    assert backend.gini_sorted(np.array([1.0, 3.0])) == pytest.approx(0.25, abs=1e-15)
    assert backend.gini_sorted(np.ones(4)) == pytest.approx(0.0, abs=1e-15)


def test_gini_sorted_empty(backend):
    with pytest.raises(ValueError):
        backend.gini_sorted(np.array([]))


@given(arrays(np.float64, st.integers(1, 40), elements=pos))
@settings(max_examples=200, deadline=None)
def test_gini_sorted_matches_exact(v):
    v = np.sort(v)
    want = float(gini_exact(v.tolist()))
    for impl in filter(None, (_pykernels, _ckernels)):
        assert impl.gini_sorted(v) == pytest.approx(want, abs=1e-12)


def test_gini_rows_sorts_each_row(backend, rng):
    x = rng.uniform(0.01, 1.0, (50, 17))
    got = backend.gini_rows(x)
    want = [float(gini_exact(row.tolist())) for row in x]
    np.testing.assert_allclose(got, want, atol=1e-12)
    # caller's array untouched
    assert not np.all(np.diff(x, axis=1) >= 0)


def test_gini_rows_non_contiguous_input(backend, rng):
    x = rng.uniform(0.01, 1.0, (20, 9))
    cols = np.ones(9, dtype=bool)
    cols[3] = False
    sub = x[:, cols]
    np.testing.assert_allclose(backend.gini_rows(sub), backend.gini_rows(np.ascontiguousarray(sub)), atol=0)
    np.testing.assert_allclose(backend.gini_rows(x.T.T[:, ::2]), _pykernels.gini_rows(x[:, ::2]), atol=1e-15)


@pytest.mark.parametrize(
    "bins, thr, want",
    [
        ([0, 1, 0, 2, 0], 0.0, [1, 3]),
        ([5, 4, 3, 2, 1], 0.0, []),  # monotone: endpoints never qualify
        ([0, 1, 1, 0], 0.0, []),  # plateau is not a strict maximum
        ([0, 1, 0, 2, 0], 1.5, [3]),
        ([3, 0], 0.0, []),
        ([], 0.0, []),
    ],
)
def test_local_maxima(backend, bins, thr, want):
    got = backend.local_maxima(np.array(bins, dtype=float), thr)
    assert list(got) == want


@given(arrays(np.float64, st.integers(0, 60), elements=st.floats(0, 10)), st.floats(0, 5))
@settings(max_examples=200, deadline=None)
def test_local_maxima_backends_agree(b, thr):
    want = [i for i in range(1, len(b) - 1) if b[i] > b[i - 1] and b[i] > b[i + 1] and b[i] > thr]
    for impl in filter(None, (_pykernels, _ckernels)):
        assert list(impl.local_maxima(b, thr)) == want


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None and not os.environ.get("CHANSPARSE_PURE_PYTHON"):
        assert kernels.BACKEND == "cython"


def test_env_forces_python_fallback():
    env = dict(os.environ, CHANSPARSE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from chansparse import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_gini_rows_independent_of_row_count(backend, rng):
    # chunked Monte Carlo relies on a row's value not depending on its neighbours
    x = rng.exponential(size=(777, 61))
    full = backend.gini_rows(x)
    for lo, hi in ((0, 1), (5, 38), (100, 777)):
        np.testing.assert_array_equal(backend.gini_rows(x[lo:hi]), full[lo:hi])

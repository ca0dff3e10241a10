"""Shared oracles and fixtures.

The oracles here are deliberately naive: exact rational arithmetic on the
textbook weighted-sum Gini, and the pairwise mean-difference form. Neither
shares code with the package.
"""
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from chansparse import _pykernels

try:
    from chansparse import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def gini_exact(powers) -> Fraction:
    """1 - 2 sum (p_i/S)(R - i + 1/2)/R over ascending p, in exact rationals."""
    p = sorted(Fraction(x) for x in powers)
    r = len(p)
    s = sum(p)
    return 1 - 2 * sum(pi / s * (Fraction(2 * (r - i) + 1, 2 * r)) for i, pi in enumerate(p, start=1))


def gini_pairwise(powers) -> float:
    """Mean absolute difference over all ordered pairs, halved and normalized."""
    p = [float(x) for x in powers]
    r = len(p)
    tot = sum(abs(a - b) for a, b in product(p, p))
    return tot / (2 * r * sum(p))


BACKENDS = [pytest.param(_pykernels, id="python")]
if _ckernels is not None:
    BACKENDS.append(pytest.param(_ckernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

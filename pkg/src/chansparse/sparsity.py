"""Gini index of multipath power vectors.

For ``R`` powers sorted ascending, ``p_1 <= ... <= p_R``::

    G = 1 - 2 * sum_i (p_i / |p|_1) * (R - i + 1/2) / R

which is evaluated in the algebraically equal, cancellation-free form
``sum_i (2i - R - 1) p_i / (R |p|_1)``.
"""
from __future__ import annotations

import warnings
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .types import ChannelRealization, GiniSample, PowerVector, _check_variant

# Rounding slack tolerated before a value outside [0, 1] counts as a bug.
CLAMP_TOL = 1e-12


def sort_ascending(powers: Iterable[float]) -> PowerVector:
    """Stable ascending sort of positive powers into a :class:`PowerVector`."""
    p = np.asarray(list(powers) if not isinstance(powers, np.ndarray) else powers, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("empty power vector")
    if not np.all(p > 0):
        raise ValueError("nonpositive power")
    return PowerVector(p[np.argsort(p, kind="stable")], check=False)


def _clamp(g: float) -> float:
    if g < 0.0:
        if g < -CLAMP_TOL:
            raise ArithmeticError(f"gini evaluated to {g!r} < 0")
        return 0.0
    if g > 1.0:
        if g > 1.0 + CLAMP_TOL:
            raise ArithmeticError(f"gini evaluated to {g!r} > 1")
        return 1.0
    return g


def gini(v: PowerVector | Sequence[float] | np.ndarray) -> float:
    """Gini index of a power vector, in ``[0, 1]``.

    Unsorted input is sorted first, so any ordering gives the same value.

    Raises
    ------
    ValueError
        ``"empty power vector"`` or ``"nonpositive power"``.
    """
    if not isinstance(v, PowerVector):
        v = sort_ascending(v)
    return _clamp(float(kernels.gini_sorted(v.array)))


def gini_rows(rows: np.ndarray) -> np.ndarray:
    """Gini index of every row of a 2-D array of positive powers."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D array")
    if rows.shape[1] == 0:
        raise ValueError("empty power vector")
    if not np.all(rows > 0):
        raise ValueError("nonpositive power")
    g = kernels.gini_rows(rows)
    if np.any(g < -CLAMP_TOL) or np.any(g > 1 + CLAMP_TOL):
        raise ArithmeticError("gini evaluated outside [0, 1]")
    return np.clip(g, 0.0, 1.0)


def variant_powers(r: ChannelRealization, variant: str) -> np.ndarray:
    """Ray powers entering the Gini index for ``variant``.

    ``without_los`` drops the ray flagged as LoS; it never infers the LoS ray
    from power.
    """
    _check_variant(variant)
    p = r.powers
    if variant == "without_los":
        idx = r.los_index
        if idx is None:
            raise ValueError("realization has no LoS ray to remove")
        p = np.delete(p, idx)
    return p


def gini_realization(r: ChannelRealization, variant: str = "with_los") -> GiniSample:
    """Gini sample of one drop, with or without its LoS ray."""
    p = variant_powers(r, variant)
    if p.size < 2:
        raise ValueError("degenerate ray set")
    return GiniSample(gini(p), r.drop_index, variant, r.mode, r.band)


def gini_checked(powers: Sequence[float]) -> float:
    """:func:`gini` that warns on single-ray input, for command-line use."""
    if len(powers) == 1:
        warnings.warn("gini of a single ray is 0 by definition", RuntimeWarning, stacklevel=2)
    return gini(powers)


AGGREGATIONS = ("snapshot", "position")


def gini_snapshots(power_snapshots: np.ndarray, aggregate: str = "snapshot") -> np.ndarray:
    """Gini index of repeated ray-power measurements at one position.

    ``power_snapshots`` is ``(snapshots, rays)``. ``"snapshot"`` gives one
    value per snapshot; ``"position"`` averages the powers over snapshots
    first and returns a single value.
    """
    x = np.asarray(power_snapshots, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a (snapshots, rays) array")
    if aggregate == "snapshot":
        return gini_rows(x)
    if aggregate == "position":
        return np.array([gini(x.mean(axis=0))])
    raise ValueError(f"aggregate must be one of {AGGREGATIONS}")

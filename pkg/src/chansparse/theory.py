"""Closed-form Gini index of equal and ICK intra-cluster allocations.

``N`` clusters with ascending powers ``P_1 < ... < P_N`` each split over
``M`` rays (``R = N M``). Moving from the equal split to the ICK split hands
``alpha_n = P_n/M - P_n/((I+1)(M-1))`` from each of the ``M-1`` weak rays of
cluster ``n`` to its dominant ray. When every dominant ray stays below the
weak rays of the next cluster the sorted order is unchanged
(``order_preserved``) and ``G_k - G_1 = sum_n alpha_n (M^2 - M) / (|p|_1 R)``.
Otherwise some dominant ray overtakes weaker rays of a stronger cluster
(``order_changed``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ORDER_PRESERVED = "order_preserved"
ORDER_CHANGED = "order_changed"

# Slack for "G_k >= G_1" and for identities evaluated in floating point.
THEOREM_TOL = 1e-12


@dataclass(frozen=True)
class ClusterPowerSet:
    powers: tuple[float, ...]
    m_rays: int

    def __post_init__(self) -> None:
        p = tuple(float(x) for x in self.powers)
        object.__setattr__(self, "powers", p)
        if not p:
            raise ValueError("need at least one cluster")
        if any(x <= 0 for x in p):
            raise ValueError("nonpositive power")
        if any(b < a for a, b in zip(p, p[1:])):
            raise ValueError("cluster powers must be ascending")
        if int(self.m_rays) != self.m_rays or self.m_rays < 2:
            raise ValueError("m_rays must be an integer >= 2")

    @property
    def n(self) -> int:
        return len(self.powers)

    @property
    def r(self) -> int:
        return self.n * self.m_rays

    @property
    def array(self) -> np.ndarray:
        return np.array(self.powers)


def _weights(r: int) -> np.ndarray:
    """``(R - i + 1/2) / R`` for ``i = 1..R``."""
    return (r - np.arange(1, r + 1) + 0.5) / r


def _gini_direct(d_sorted: np.ndarray) -> float:
    """Gini index of an already sorted vector, written term by term."""
    return float(1.0 - 2.0 * np.sum(d_sorted / d_sorted.sum() * _weights(d_sorted.size)))


def expand_equal(cps: ClusterPowerSet) -> np.ndarray:
    """Ascending ray-power vector of the equal split: ``P_n / M`` repeated ``M`` times."""
    return np.repeat(cps.array / cps.m_rays, cps.m_rays)


def ick_parts(cps: ClusterPowerSet, i: float) -> tuple[np.ndarray, np.ndarray]:
    """Dominant-ray and weak-ray power of every cluster under ICK ``i``."""
    p = cps.array
    return i / (i + 1.0) * p, 1.0 / (i + 1.0) * p / (cps.m_rays - 1)


def expand_ick(cps: ClusterPowerSet, i: float) -> np.ndarray:
    """Unsorted ray powers of the ICK split, cluster by cluster, dominant first."""
    dom, weak = ick_parts(cps, i)
    out = np.repeat(weak[:, None], cps.m_rays, axis=1)
    out[:, 0] = dom
    return out.ravel()


def classify(cps: ClusterPowerSet, i: float) -> str:
    """Whether the ICK split keeps the cluster-block sort order.

    A tie between a dominant ray and the next cluster's weak rays counts as
    preserved; swapping equal values does not change the Gini index. Ties
    are judged with a relative slack of ``THEOREM_TOL`` so that rounding at
    ``i = 1/(M-1)`` does not flip the answer.
    """
    dom, weak = ick_parts(cps, i)
    lo, hi = 1.0 - THEOREM_TOL, 1.0 + THEOREM_TOL
    if np.all(dom >= weak * lo) and np.all(dom[:-1] <= weak[1:] * hi):
        return ORDER_PRESERVED
    return ORDER_CHANGED


def g1_closed_form(cps: ClusterPowerSet) -> float:
    """Gini index of the equal split as the double sum over clusters and rays."""
    n, m, r = cps.n, cps.m_rays, cps.r
    p = cps.array
    nn = np.arange(1, n + 1)[:, None]
    mm = np.arange(1, m + 1)[None, :]
    w = (r - m * (nn - 1) - mm + 0.5) / r
    return float(1.0 - 2.0 / p.sum() * np.sum((p / m)[:, None] * w))


def gk_printed(cps: ClusterPowerSet, i: float) -> float:
    """Double-sum expression for the ICK Gini index.

    Places cluster ``n``'s weak rays at sorted positions ``M(n-1)+1..nM-1``
    and its dominant ray at ``nM``, so it is only right when
    :func:`classify` returns ``order_preserved``.
    """
    n, m, r = cps.n, cps.m_rays, cps.r
    p = cps.array
    nn = np.arange(1, n + 1)[:, None]
    mm = np.arange(1, m)[None, :]
    weak = np.sum((p / ((i + 1.0) * (m - 1)))[:, None] * (r - m * (nn - 1) - mm + 0.5) / r)
    dom = np.sum(i * p / (i + 1.0) * (r - m * np.arange(1, n + 1) + 0.5) / r)
    return float(1.0 - 2.0 / p.sum() * (weak + dom))


def gk_closed_form(cps: ClusterPowerSet, i: float) -> float:
    """Gini index of the ICK split.

    Uses :func:`gk_printed` when the sort order is preserved, otherwise sorts
    the allocated vector (stable) and sums it term by term.
    """
    if not i > 0:
        raise ValueError("ICK must be positive")
    if classify(cps, i) == ORDER_PRESERVED:
        return gk_printed(cps, i)
    d = expand_ick(cps, i)
    return _gini_direct(d[np.argsort(d, kind="stable")])


def given_out(cps: ClusterPowerSet, i: float) -> np.ndarray:
    """Power moved off each weak ray, per cluster (``alpha, ..., beta``)."""
    return cps.array / cps.m_rays - ick_parts(cps, i)[1]


def difference_order_preserved(cps: ClusterPowerSet, i: float) -> float:
    """``G_k - G_1`` when the sort order is unchanged."""
    if classify(cps, i) != ORDER_PRESERVED:
        raise ValueError("wrong situation")
    m, r = cps.m_rays, cps.r
    alpha = given_out(cps, i)
    return float(np.sum(alpha / cps.array.sum() * (m * m - m) / r))


def difference_order_changed(cps: ClusterPowerSet, i: float) -> float:
    """``G_k - G_1`` for two clusters whose first dominant ray overtakes cluster 2's weak rays.

    With ``p`` the equal-split vector, ``S = |p|_1`` and 1-based indices::

        2 sum_{i=1}^{M-1} alpha/S w_i
      + 2 sum_{i=M}^{R-2} (p_i - p_{i+1} + beta)/S w_i
      + 2 (p_{R-1} - p_M - (M-1) alpha)/S * 3/(2R)
      - (M-1) beta/S * 1/R

    where ``w_i = (R - i + 1/2)/R``.
    """
    if cps.n != 2:
        raise ValueError("order-changed difference is defined for two clusters")
    dom, weak = ick_parts(cps, i)
    if dom[0] < weak[1]:
        raise ValueError("precondition violated: dominant ray of cluster 1 does not exceed cluster 2's weak rays")
    m, r = cps.m_rays, cps.r
    p = expand_equal(cps)
    s = p.sum()
    alpha, beta = given_out(cps, i)
    w = _weights(r)
    # 0-based slices of the 1-based sums
    t1 = 2.0 * np.sum(alpha / s * w[: m - 1])
    idx = np.arange(m - 1, r - 2)
    t2 = 2.0 * np.sum((p[idx] - p[idx + 1] + beta) / s * w[idx])
    t3 = 2.0 * (p[r - 2] - p[m - 1] - (m - 1) * alpha) / s * 3.0 / (2.0 * r)
    t4 = -(m - 1) * beta / s / r
    return float(t1 + t2 + t3 + t4)


@dataclass(frozen=True)
class TheoremReport:
    g1: float
    gk: float
    delta: float
    situation: str
    holds: bool


def verify_theorem(cps: ClusterPowerSet, i: float) -> TheoremReport:
    """Check ``G_k >= G_1`` for ``i >= 1/(M-1)``."""
    m = cps.m_rays
    if i < 1.0 / (m - 1) * (1 - 1e-15):
        raise ValueError(f"ICK {i!r} below the equal-split value 1/(M-1) = {1.0 / (m - 1)!r}")
    g1 = g1_closed_form(cps)
    gk = gk_closed_form(cps, i)
    delta = gk - g1
    return TheoremReport(g1, gk, delta, classify(cps, i), delta >= -THEOREM_TOL)


def random_instance(rng: np.random.Generator, n_range=(1, 12), m_range=(2, 25), i_max=1e4) -> tuple[ClusterPowerSet, float]:
    """Random strictly ascending cluster powers and a log-uniform ICK in ``[1/(M-1), i_max]``."""
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    p = np.sort(10.0 ** rng.uniform(-3.0, 0.0, n))
    # break exact ties
    for k in range(1, n):
        if p[k] <= p[k - 1]:
            p[k] = p[k - 1] * (1.0 + 1e-9)
    lo = math.log(1.0 / (m - 1))
    i = math.exp(rng.uniform(lo, math.log(i_max)))
    return ClusterPowerSet(tuple(p), m), max(i, 1.0 / (m - 1))


@dataclass
class SweepSummary:
    cases: int = 0
    counterexamples: int = 0
    boundary_failures: int = 0
    identity_failures: int = 0
    situations: dict[str, int] = field(default_factory=lambda: {ORDER_PRESERVED: 0, ORDER_CHANGED: 0})
    min_delta: float = math.inf
    worst_case: dict | None = None
    max_boundary_error: float = 0.0
    max_identity_error: float = 0.0

    @property
    def ok(self) -> bool:
        return self.counterexamples == 0 and self.boundary_failures == 0 and self.identity_failures == 0

    def to_dict(self) -> dict:
        return {
            "cases": self.cases,
            "counterexamples": self.counterexamples,
            "boundary_failures": self.boundary_failures,
            "identity_failures": self.identity_failures,
            "situations": dict(self.situations),
            "min_delta": self.min_delta,
            "max_boundary_error": self.max_boundary_error,
            "max_identity_error": self.max_identity_error,
            "worst_case": self.worst_case,
            "ok": self.ok,
        }


def matching_difference(cps: ClusterPowerSet, i: float) -> float | None:
    """Situation-specific difference formula, or None if none applies (N > 2 reordered)."""
    if classify(cps, i) == ORDER_PRESERVED:
        return difference_order_preserved(cps, i)
    if cps.n == 2:
        return difference_order_changed(cps, i)
    return None


def theorem_sweep(cases: int = 10_000, seed: int = 0, **instance_kw) -> SweepSummary:
    """Randomized check that the ICK split never lowers the Gini index.

    Every case also checks ``G_k == G_1`` at ``i = 1/(M-1)`` and that the
    situation's difference formula reproduces ``G_k - G_1``.
    """
    rng = np.random.default_rng(seed)
    s = SweepSummary()
    for _ in range(cases):
        cps, i = random_instance(rng, **instance_kw)
        rep = verify_theorem(cps, i)
        s.cases += 1
        s.situations[rep.situation] += 1
        strict = i > 1.0 / (cps.m_rays - 1)
        if not rep.holds or (strict and rep.delta < 0):
            s.counterexamples += 1
        if rep.delta < s.min_delta:
            s.min_delta = rep.delta
            s.worst_case = {"powers": list(cps.powers), "m_rays": cps.m_rays, "ick": i, "delta": rep.delta, "situation": rep.situation}
        b = verify_theorem(cps, 1.0 / (cps.m_rays - 1))
        s.max_boundary_error = max(s.max_boundary_error, abs(b.delta))
        if abs(b.delta) > THEOREM_TOL:
            s.boundary_failures += 1
        diff = matching_difference(cps, i)
        if diff is not None:
            err = abs(diff - rep.delta)
            s.max_identity_error = max(s.max_identity_error, err)
            if err > THEOREM_TOL:
                s.identity_failures += 1
    return s

"""Gini-index sparsity of multipath channels.

Stochastic cluster-delay-line drops with equal or intra-cluster K-factor
(ICK) ray-power split, closed-form Gini results for both splits, ray
extraction from directional sounder data, and a Monte Carlo harness.
"""
from .kernels import BACKEND
from .sparsity import gini, gini_realization, sort_ascending
from .types import ChannelRealization, Cluster, GiniSample, PowerVector, Ray

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelRealization",
    "Cluster",
    "GiniSample",
    "PowerVector",
    "Ray",
    "gini",
    "gini_realization",
    "sort_ascending",
]

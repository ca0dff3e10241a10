"""Domain types shared across the package.

Powers are linear everywhere in this package; dB only appears in band
profiles, config files and reports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

Band = Literal["cmWave", "mmWave", "subTHz", "custom"]
Mode = Literal["equal", "ick"]
Variant = Literal["with_los", "without_los"]

MODES: tuple[str, ...] = ("equal", "ick")
VARIANTS: tuple[str, ...] = ("with_los", "without_los")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown allocation mode {mode!r}; expected one of {MODES}")


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


@dataclass(frozen=True, slots=True)
class Ray:
    """One resolvable multipath component."""

    delay: float
    power: float
    aoa_az: float = 0.0
    aoa_el: float = 0.0
    is_los: bool = False

    def __post_init__(self) -> None:
        if not self.power > 0:
            raise ValueError("nonpositive power")
        if not self.delay >= 0:
            raise ValueError(f"negative delay {self.delay!r}")


class PowerVector(Sequence[float]):
    """Non-empty vector of positive linear powers kept in ascending order.

    Build one with :func:`chansparse.sparsity.sort_ascending`; the
    constructor trusts its input to already be sorted unless ``check`` is set.
    """

    __slots__ = ("_p",)

    def __init__(self, powers: Iterable[float], check: bool = True) -> None:
        p = np.array(powers, dtype=np.float64).ravel()
        if check:
            if p.size == 0:
                raise ValueError("empty power vector")
            if not np.all(p > 0):
                raise ValueError("nonpositive power")
            if np.any(np.diff(p) < 0):
                raise ValueError("power vector is not ascending")
        p.setflags(write=False)
        self._p = p

    @property
    def array(self) -> np.ndarray:
        return self._p

    def __len__(self) -> int:
        return self._p.size

    def __getitem__(self, i):
        return self._p[i]

    def __iter__(self):
        return iter(self._p.tolist())

    def __eq__(self, other) -> bool:
        if isinstance(other, PowerVector):
            return np.array_equal(self._p, other._p)
        return NotImplemented

    def __repr__(self) -> str:
        return f"PowerVector({self._p.tolist()!r})"

    @property
    def total(self) -> float:
        return float(self._p.sum())


@dataclass(frozen=True)
class Cluster:
    """Group of rays with their aggregate power."""

    rays: tuple[Ray, ...]
    power: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        if not self.rays:
            raise ValueError("cluster has no rays")
        object.__setattr__(self, "rays", tuple(self.rays))
        total = math.fsum(r.power for r in self.rays)
        if math.isnan(self.power):
            object.__setattr__(self, "power", total)
        elif not math.isclose(self.power, total, rel_tol=1e-12):
            raise ValueError(f"cluster power {self.power!r} != sum of ray powers {total!r}")

    @property
    def powers(self) -> np.ndarray:
        return np.array([r.power for r in self.rays])


@dataclass(frozen=True)
class LspDraw:
    """Large-scale parameters of one drop."""

    ds: float
    k_db: float
    n_clusters: int

    def __post_init__(self) -> None:
        if not self.ds > 0:
            raise ValueError("delay spread must be positive")
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")


@dataclass(frozen=True)
class ChannelRealization:
    """One stochastic drop: its rays plus generation metadata."""

    rays: tuple[Ray, ...]
    band: str
    has_los: bool
    seed: int
    mode: str
    drop_index: int = 0
    lsp: LspDraw | None = None
    # cluster index per ray, -1 for a stand-alone specular ray
    cluster_ids: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rays", tuple(self.rays))
        _check_mode(self.mode)
        if self.cluster_ids is not None:
            object.__setattr__(self, "cluster_ids", tuple(self.cluster_ids))
            if len(self.cluster_ids) != len(self.rays):
                raise ValueError("cluster_ids must have one entry per ray")
        n_los = sum(r.is_los for r in self.rays)
        if n_los > 1:
            raise ValueError("more than one LoS ray in realization")
        if self.has_los != (n_los == 1):
            raise ValueError("has_los does not match the LoS flags of the rays")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def powers(self) -> np.ndarray:
        return np.array([r.power for r in self.rays])

    @property
    def los_index(self) -> int | None:
        for i, r in enumerate(self.rays):
            if r.is_los:
                return i
        return None


@dataclass(frozen=True, slots=True)
class GiniSample:
    value: float
    drop_index: int
    variant: str
    mode: str
    band: str = "custom"

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"gini value {self.value!r} outside [0, 1]")
        if self.drop_index < 0:
            raise ValueError("drop_index must be nonnegative")
        _check_variant(self.variant)
        _check_mode(self.mode)

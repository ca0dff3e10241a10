"""Band profiles and generator configuration."""
from __future__ import annotations

from dataclasses import dataclass, replace

LOS_PLACEMENTS = ("first_cluster", "extra_ray")


@dataclass(frozen=True)
class BandProfile:
    """Large-scale statistics of one band.

    Attributes
    ----------
    ds_log10_mu, ds_log10_sigma
        Mean and std of ``log10(DS / 1 s)``.
    k_mu_db, k_sigma_db
        Mean and std of the Ricean K-factor in dB.
    n_clusters
        Cluster count (fixed per drop).
    ick_db
        Reference intra-cluster K-factor in dB.
    """

    name: str
    ds_log10_mu: float
    ds_log10_sigma: float
    k_mu_db: float
    k_sigma_db: float
    n_clusters: int
    ick_db: float

    def __post_init__(self) -> None:
        if self.ds_log10_sigma < 0 or self.k_sigma_db < 0:
            raise ValueError("standard deviations must be nonnegative")
        if int(self.n_clusters) != self.n_clusters or self.n_clusters < 1:
            raise ValueError("n_clusters must be a positive integer")

    def with_overrides(self, **kw) -> "BandProfile":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# Indoor office measurement fits at 6, 26 and 132 GHz.
CMWAVE = BandProfile("cmWave", -7.17, 0.40, 4.23, 3.25, 9, 4.93)
MMWAVE = BandProfile("mmWave", -7.42, 0.46, 5.52, 4.36, 8, 9.86)
SUBTHZ = BandProfile("subTHz", -8.47, 0.67, 8.0, 7.9, 3, 17.99)

PRESETS: dict[str, BandProfile] = {p.name: p for p in (CMWAVE, MMWAVE, SUBTHZ)}


def get_profile(name: str) -> BandProfile:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown band {name!r}; expected one of {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class GenConfig:
    """Knobs of the cluster-delay-line generator.

    ``los_placement`` decides where the specular LoS power goes:
    ``"first_cluster"`` adds it to the power of cluster 1 before the
    intra-cluster split (ray 1 of cluster 1 carries the LoS flag);
    ``"extra_ray"`` keeps it as one additional ray. ``ick_spread_db`` > 0
    draws a per-cluster ICK around the band value.
    """

    m_rays: int = 20
    r_tau: float = 3.6
    zeta_db: float = 6.0
    master_seed: int = 2023
    doppler_hz_range: tuple[float, float] = (0.0, 0.0)
    los: bool = True
    los_placement: str = "first_cluster"
    ick_spread_db: float = 0.0
    k_cap_db: float = 60.0

    def __post_init__(self) -> None:
        if int(self.m_rays) != self.m_rays or self.m_rays < 2:
            raise ValueError("m_rays must be an integer >= 2")
        if not self.r_tau > 1:
            raise ValueError("r_tau must be > 1")
        if self.zeta_db < 0:
            raise ValueError("zeta_db must be >= 0")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        lo, hi = self.doppler_hz_range
        if lo > hi:
            raise ValueError("doppler_hz_range must be (low, high) with low <= high")
        if self.los_placement not in LOS_PLACEMENTS:
            raise ValueError(f"los_placement must be one of {LOS_PLACEMENTS}")
        if self.ick_spread_db < 0:
            raise ValueError("ick_spread_db must be >= 0")

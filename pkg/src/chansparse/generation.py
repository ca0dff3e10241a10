"""Cluster-delay-line drop generation with equal or ICK intra-cluster power split.

Per drop: large-scale parameters (DS, K-factor) -> cluster delays ->
cluster powers (with LoS specular power) -> per-ray powers. Rays of one
cluster share the cluster delay. Each drop owns an independent random
stream derived from ``(master_seed, drop_index)``, so drops can be produced
in any order or on any number of workers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .profiles import BandProfile, GenConfig
from .types import ChannelRealization, Cluster, LspDraw, Ray, _check_mode

# Normalized intra-cluster ray angle offsets (20-ray cluster-delay-line layout).
RAY_OFFSETS = np.array(
    [0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129,
     0.6797, -0.6797, 0.8844, -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551]
)
CLUSTER_ASA_DEG = 8.0
CLUSTER_ESA_DEG = 3.0


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=np.float64) / 10.0)


def drop_rng(master_seed: int, drop_index: int) -> np.random.Generator:
    """Independent generator for one drop."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(drop_index),))
    return np.random.Generator(np.random.PCG64(ss))


def draw_lsp(profile: BandProfile, rng: np.random.Generator) -> LspDraw:
    x = rng.normal(profile.ds_log10_mu, profile.ds_log10_sigma)
    k_db = rng.normal(profile.k_mu_db, profile.k_sigma_db)
    return LspDraw(ds=float(10.0**x), k_db=float(k_db), n_clusters=int(profile.n_clusters))


def gen_cluster_delays(
    ds: float,
    n: int,
    r_tau: float,
    rng: np.random.Generator | None = None,
    uniforms: Sequence[float] | None = None,
) -> np.ndarray:
    """Exponentially distributed cluster delays, ascending, first one zero.

    ``tau'_n = -r_tau * ds * ln(X_n)`` with ``X_n ~ U(0, 1]``; pass
    ``uniforms`` to fix the ``X_n``.
    """
    if n < 1:
        raise ValueError("need at least one cluster")
    if not ds > 0:
        raise ValueError("delay spread must be positive")
    if uniforms is None:
        x = 1.0 - rng.random(n)
    else:
        x = np.asarray(uniforms, dtype=np.float64)
        if x.shape != (n,) or np.any(x <= 0) or np.any(x > 1):
            raise ValueError("uniforms must be n values in (0, 1]")
    tau = np.sort(-r_tau * ds * np.log(x))
    return tau - tau[0]


class ClusterPowers(NamedTuple):
    """Cluster powers after LoS scaling plus the specular power; sums to 1."""

    nlos: np.ndarray
    los: float


def gen_cluster_powers(
    delays: np.ndarray,
    ds: float,
    r_tau: float,
    k_db: float,
    zeta_db: float,
    has_los: bool,
    rng: np.random.Generator | None = None,
    k_cap_db: float = 60.0,
    shadowing_db: np.ndarray | None = None,
) -> ClusterPowers:
    """Single-slope power-delay law with per-cluster lognormal shadowing.

    ``P'_n = exp(-tau_n (r_tau - 1) / (r_tau ds)) * 10^(-Z_n / 10)``,
    normalized to unit sum. With LoS every cluster is scaled by
    ``1 / (K_R + 1)`` and the specular component gets ``K_R / (K_R + 1)``.
    """
    tau = np.asarray(delays, dtype=np.float64)
    if shadowing_db is None:
        shadowing_db = rng.normal(0.0, zeta_db, tau.size) if zeta_db > 0 else np.zeros(tau.size)
    p = np.exp(-tau * (r_tau - 1.0) / (r_tau * ds)) * 10.0 ** (-np.asarray(shadowing_db) / 10.0)
    p = p / p.sum()
    if not has_los:
        return ClusterPowers(p, 0.0)
    kr = float(db2lin(min(k_db, k_cap_db)))
    return ClusterPowers(p / (kr + 1.0), kr / (kr + 1.0))


def _equal_matrix(p: np.ndarray, m: int) -> np.ndarray:
    return np.repeat((p / m)[:, None], m, axis=1)


def _ick_matrix(p: np.ndarray, m: int, i: np.ndarray) -> np.ndarray:
    out = np.empty((p.size, m))
    out[:, 0] = i / (i + 1.0) * p
    out[:, 1:] = (1.0 / (i + 1.0) * p / (m - 1))[:, None]
    return out


def allocate_equal(p_n: float, m: int) -> np.ndarray:
    """Split cluster power ``p_n`` equally over ``m`` rays."""
    if not p_n > 0:
        raise ValueError("nonpositive power")
    if m < 1:
        raise ValueError("need at least one ray")
    return _equal_matrix(np.array([float(p_n)]), m)[0]


def allocate_ick(p_n: float, m: int, i: float) -> np.ndarray:
    """Split ``p_n`` so ray 1 holds ``i/(i+1)`` and the other ``m-1`` rays share the rest."""
    if m < 2:
        raise ValueError("ICK needs ≥ 2 rays")
    if not p_n > 0:
        raise ValueError("nonpositive power")
    if not i > 0:
        raise ValueError("ICK must be positive")
    return _ick_matrix(np.array([float(p_n)]), m, np.array([float(i)]))[0]


@dataclass(frozen=True)
class RayCoefficient:
    amplitude: complex
    doppler_hz: float
    phase: float


@dataclass(frozen=True)
class ClusterCoefficients:
    rays: tuple[RayCoefficient, ...]

    def h(self, t: float = 0.0) -> complex:
        """Cluster channel coefficient at time ``t``."""
        return complex(sum(r.amplitude * np.exp(2j * np.pi * r.doppler_hz * t) for r in self.rays))


def synthesize_coefficients(
    clusters: Sequence[Cluster],
    mode: str,
    t: float,
    rng: np.random.Generator,
    ick: float | None = None,
    doppler_hz_range: tuple[float, float] = (0.0, 0.0),
) -> list[complex]:
    """Complex per-cluster coefficients ``H_n(t)``.

    Equal mode weights every unit-modulus ray term by ``sqrt(P_n / M)``; ICK
    mode weights ray 1 by ``sqrt(I/(I+1) P_n)`` and the others by
    ``sqrt(P_n / ((I+1)(M-1)))``. Without ``ick`` the value is read off each
    cluster as ``p_1 / (P_n - p_1)``.
    """
    return [c.h(t) for c in cluster_coefficients(clusters, mode, rng, ick, doppler_hz_range)]


def cluster_coefficients(
    clusters: Sequence[Cluster],
    mode: str,
    rng: np.random.Generator,
    ick: float | None = None,
    doppler_hz_range: tuple[float, float] = (0.0, 0.0),
) -> list[ClusterCoefficients]:
    _check_mode(mode)
    lo, hi = doppler_hz_range
    out = []
    for c in clusters:
        m = len(c.rays)
        pn = c.power
        if mode == "equal" or m == 1:
            scale = np.full(m, np.sqrt(pn / m))
        else:
            i = ick if ick is not None else c.rays[0].power / (pn - c.rays[0].power)
            scale = np.full(m, np.sqrt(1.0 / (i + 1.0) * pn / (m - 1)))
            scale[0] = np.sqrt(i / (i + 1.0) * pn)
        phase = rng.uniform(0.0, 2 * np.pi, m)
        dop = rng.uniform(lo, hi, m) if hi > lo else np.full(m, lo)
        out.append(
            ClusterCoefficients(
                tuple(
                    RayCoefficient(complex(s * np.exp(1j * ph)), float(v), float(ph))
                    for s, ph, v in zip(scale, phase, dop)
                )
            )
        )
    return out


class DropDraw(NamedTuple):
    """Array form of one drop; rays are ordered cluster by cluster."""

    powers: np.ndarray
    delays: np.ndarray
    az: np.ndarray | None
    el: np.ndarray | None
    cluster_ids: np.ndarray
    los_index: int  # -1 without LoS
    lsp: LspDraw


def _wrap_deg(a):
    return (np.asarray(a) + 180.0) % 360.0 - 180.0


def _ray_offsets(m: int) -> np.ndarray:
    if m == RAY_OFFSETS.size:
        return RAY_OFFSETS
    return np.linspace(-RAY_OFFSETS.max(), RAY_OFFSETS.max(), m)


def draw_drop(
    profile: BandProfile, cfg: GenConfig, mode: str, drop_index: int, angles: bool = True
) -> DropDraw:
    """Generate one drop as arrays. Powers never depend on ``angles``."""
    _check_mode(mode)
    rng = drop_rng(cfg.master_seed, drop_index)
    m = cfg.m_rays
    lsp = draw_lsp(profile, rng)
    n = lsp.n_clusters
    tau = gen_cluster_delays(lsp.ds, n, cfg.r_tau, rng)
    cp = gen_cluster_powers(tau, lsp.ds, cfg.r_tau, lsp.k_db, cfg.zeta_db, cfg.los, rng, cfg.k_cap_db)
    folded = cfg.los and cfg.los_placement == "first_cluster"
    pc = cp.nlos.copy()
    if folded:
        pc[0] += cp.los

    if mode == "equal":
        mat = _equal_matrix(pc, m)
    else:
        ick_db = np.full(n, profile.ick_db)
        if cfg.ick_spread_db > 0:
            ick_db = ick_db + rng.normal(0.0, cfg.ick_spread_db, n)
        mat = _ick_matrix(pc, m, db2lin(ick_db))

    powers = mat.ravel()
    delays = np.repeat(tau, m)
    cluster_ids = np.repeat(np.arange(n), m)
    los_index = 0 if cfg.los else -1
    extra = cfg.los and not folded
    if extra:
        powers = np.concatenate(([cp.los], powers))
        delays = np.concatenate(([0.0], delays))
        cluster_ids = np.concatenate(([-1], cluster_ids))

    az = el = None
    if angles:
        c_az = rng.uniform(-180.0, 180.0, n)
        c_el = rng.uniform(-10.0, 10.0, n)
        if cfg.los:
            c_az[0] = 0.0
            c_el[0] = 0.0
        off = _ray_offsets(m)
        el_off = np.stack([rng.permutation(off) for _ in range(n)])
        az = _wrap_deg(c_az[:, None] + CLUSTER_ASA_DEG * off[None, :]).ravel()
        el = (c_el[:, None] + CLUSTER_ESA_DEG * el_off).ravel()
        if folded:
            az[0] = 0.0
            el[0] = 0.0
        if extra:
            az = np.concatenate(([0.0], az))
            el = np.concatenate(([0.0], el))
    return DropDraw(powers, delays, az, el, cluster_ids, los_index, lsp)


def generate_drop(
    profile: BandProfile, cfg: GenConfig, mode: str = "equal", drop_index: int = 0
) -> ChannelRealization:
    """One stochastic drop for ``profile``.

    With the default ``los_placement="first_cluster"`` the specular power is
    part of cluster 1 and its first ray is flagged LoS, giving
    ``n_clusters * m_rays`` rays; ``"extra_ray"`` adds one more.
    """
    d = draw_drop(profile, cfg, mode, drop_index, angles=True)
    rays = tuple(
        Ray(float(t), float(p), float(a), float(e), i == d.los_index)
        for i, (t, p, a, e) in enumerate(zip(d.delays, d.powers, d.az, d.el))
    )
    return ChannelRealization(
        rays=rays,
        band=profile.name,
        has_los=d.los_index >= 0,
        seed=cfg.master_seed,
        mode=mode,
        drop_index=drop_index,
        lsp=d.lsp,
        cluster_ids=tuple(int(c) for c in d.cluster_ids),
    )


def realization_clusters(r: ChannelRealization) -> list[Cluster]:
    """Group a realization's rays by cluster id; an extra LoS ray is left out."""
    if r.cluster_ids is None:
        raise ValueError("realization carries no cluster ids")
    groups: dict[int, list[Ray]] = {}
    for ray, cid in zip(r.rays, r.cluster_ids):
        if cid >= 0:
            groups.setdefault(cid, []).append(ray)
    return [Cluster(tuple(groups[k])) for k in sorted(groups)]

"""Ray extraction from directional channel-sounder data.

Pipeline: CIR per antenna pointing -> PDP -> strict local maxima above a
floor -> merge the same path seen at neighbouring pointings -> cluster ->
per-cluster ICK and drop-level delay spread / K-factor. The sounder itself
is replaced by :func:`synthesize_measurement`, which renders known rays
through a Gaussian main-lobe antenna pattern.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .generation import allocate_ick, db2lin
from .types import ChannelRealization, Cluster, Ray

LN2 = math.log(2.0)


@dataclass(frozen=True)
class Cir:
    taps: np.ndarray
    sample_interval: float
    angle: tuple[float, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "taps", np.asarray(self.taps, dtype=np.complex128))
        if self.taps.size == 0:
            raise ValueError("CIR has no taps")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be positive")


@dataclass(frozen=True)
class Pdp:
    bins: np.ndarray
    sample_interval: float
    angle: tuple[float, float]

    @classmethod
    def from_cir(cls, cir: Cir) -> "Pdp":
        return cls(np.abs(cir.taps) ** 2, cir.sample_interval, cir.angle)


def default_grid(az_step: float = 10.0, elevations: Sequence[float] = (-10.0, 0.0, 10.0)) -> tuple[tuple[float, float], ...]:
    """Azimuth sweep over [-180, 180) at each elevation."""
    az = np.arange(-180.0, 180.0, az_step)
    return tuple((float(a), float(e)) for e in elevations for a in az)


@dataclass(frozen=True)
class SounderModel:
    """Directional receiver model.

    ``noise_floor_db`` is the per-tap noise power relative to the strongest
    noiseless tap over all pointings; ``None`` gives noiseless CIRs.
    ``antenna_gain_db`` is carried for reports only: every quantity the
    pipeline estimates is a power ratio.
    """

    beamwidth_az_3db: float
    antenna_gain_db: float = 0.0
    angle_grid: tuple[tuple[float, float], ...] = field(default_factory=default_grid)
    bandwidth_hz: float = 1.2e9
    noise_floor_db: float | None = None
    n_taps: int = 1024
    beamwidth_el_3db: float | None = None

    def __post_init__(self) -> None:
        if not self.beamwidth_az_3db > 0:
            raise ValueError("beamwidth must be positive")
        if not self.angle_grid:
            raise ValueError("angle grid is empty")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth must be positive")
        object.__setattr__(self, "angle_grid", tuple((float(a), float(e)) for a, e in self.angle_grid))

    @property
    def resolution(self) -> float:
        """Temporal resolution, one delay bin, in seconds."""
        return 1.0 / self.bandwidth_hz

    @property
    def beamwidth_el(self) -> float:
        return self.beamwidth_el_3db if self.beamwidth_el_3db is not None else self.beamwidth_az_3db

    def gain(self, d_az, d_el) -> np.ndarray:
        """Power gain of the main lobe, 1 at boresight and 1/2 at half the 3 dB width."""
        return pattern_gain(d_az, d_el, self.beamwidth_az_3db, self.beamwidth_el)


# RX horn parameters of the 6, 26 and 132 GHz sounders.
SOUNDER_PRESETS = {
    "cmWave": dict(beamwidth_az_3db=15.5, antenna_gain_db=20.3, bandwidth_hz=200e6),
    "mmWave": dict(beamwidth_az_3db=9.02, antenna_gain_db=24.75, bandwidth_hz=200e6),
    "subTHz": dict(beamwidth_az_3db=9.9, antenna_gain_db=25.1, bandwidth_hz=1.2e9),
}


def sounder_for_band(band: str, **kw) -> SounderModel:
    try:
        base = dict(SOUNDER_PRESETS[band])
    except KeyError:
        raise ValueError(f"no sounder preset for band {band!r}") from None
    base.update({k: v for k, v in kw.items() if v is not None})
    return SounderModel(**base)


def wrap_deg(a):
    return (np.asarray(a, dtype=np.float64) + 180.0) % 360.0 - 180.0


def pattern_gain(d_az, d_el, bw_az: float, bw_el: float) -> np.ndarray:
    d_az = wrap_deg(d_az)
    x = (2.0 * d_az / bw_az) ** 2 + (2.0 * np.asarray(d_el, dtype=np.float64) / bw_el) ** 2
    return np.exp(-LN2 * x)


def synthesize_measurement(truth: Sequence[Ray], sm: SounderModel, rng: np.random.Generator | None = None) -> list[Cir]:
    """One CIR per grid pointing.

    Each ray adds ``sqrt(power * g) * exp(j phi)`` at its nearest delay bin,
    with a random phase per ray shared across pointings (zero without
    ``rng``).
    """
    if not truth:
        raise ValueError("no rays to measure")
    dt = sm.resolution
    delays = np.array([r.delay for r in truth])
    powers = np.array([r.power for r in truth])
    bins = np.rint(delays / dt).astype(np.int64)
    if bins.max() >= sm.n_taps:
        raise ValueError(f"ray delay {delays.max():.3e} s beyond the {sm.n_taps}-tap window")
    phase = rng.uniform(0.0, 2 * np.pi, len(truth)) if rng is not None else np.zeros(len(truth))
    az = np.array([r.aoa_az for r in truth])
    el = np.array([r.aoa_el for r in truth])
    grid = np.array(sm.angle_grid)
    g = sm.gain(grid[:, :1] - az[None, :], grid[:, 1:] - el[None, :])  # (angles, rays)
    amp = np.sqrt(powers[None, :] * g) * np.exp(1j * phase)[None, :]
    taps = np.zeros((grid.shape[0], sm.n_taps), dtype=np.complex128)
    for k in range(len(truth)):
        taps[:, bins[k]] += amp[:, k]
    if sm.noise_floor_db is not None:
        if rng is None:
            raise ValueError("noisy measurement needs an rng")
        npow = np.max(np.abs(taps) ** 2) * db2lin(sm.noise_floor_db)
        taps += np.sqrt(npow / 2) * (rng.standard_normal(taps.shape) + 1j * rng.standard_normal(taps.shape))
    return [Cir(taps[a], dt, (float(grid[a, 0]), float(grid[a, 1]))) for a in range(grid.shape[0])]


def find_peaks(
    pdp: Pdp,
    min_separation: float | None = None,
    floor_db: float = -25.0,
    reference_power: float | None = None,
) -> list[tuple[float, float]]:
    """Peaks of a PDP as ``(delay, power)`` pairs, ordered by delay.

    A peak is a bin strictly above both neighbours (end bins never qualify)
    and above ``reference_power * 10^(floor_db/10)``; the reference defaults
    to the strongest bin of this PDP. Of two peaks closer than
    ``min_separation`` only the stronger survives.
    """
    dt = pdp.sample_interval
    if min_separation is None:
        min_separation = dt
    if min_separation < dt * (1 - 1e-12):
        raise ValueError("min_separation must be at least one sample interval")
    b = np.asarray(pdp.bins, dtype=np.float64)
    if b.size == 0:
        return []
    ref = float(b.max()) if reference_power is None else float(reference_power)
    idx = kernels.local_maxima(b, ref * float(db2lin(floor_db)))
    if idx.size == 0:
        return []
    # strongest first; ties broken by earlier bin
    order = idx[np.lexsort((idx, -b[idx]))]
    kept: list[int] = []
    for i in order:
        if all(abs(int(i) - k) * dt >= min_separation * (1 - 1e-12) for k in kept):
            kept.append(int(i))
    kept.sort()
    return [(k * dt, float(b[k])) for k in kept]


def _angle_dist(a1, e1, a2, e2) -> float:
    return math.hypot(float(wrap_deg(a1 - a2)), e1 - e2)


def _refine_axis(x0: float, p0: float, neighbours: list[tuple[float, float]], c: float) -> float:
    """Vertex of the log-quadratic main lobe from the peak and same-line neighbours."""
    est = []
    for x, p in neighbours:
        dx = float(wrap_deg(x - x0))
        if dx == 0 or p <= 0:
            continue
        est.append(x0 + dx / 2.0 + (math.log(p) - math.log(p0)) / (2.0 * c * dx))
    if not est:
        return x0
    return float(np.mean(est))


def screen_same_delay(
    per_angle_peaks: Sequence[tuple[tuple[float, float], Sequence[tuple[float, float]]]],
    delay_tol: float,
    beamwidth_az: float,
    beamwidth_el: float | None = None,
    adjacency: float = 1.5,
    refine: bool = False,
) -> list[Ray]:
    """Merge copies of one path seen at neighbouring pointings.

    Peaks whose delays agree within ``delay_tol`` and whose pointings are
    linked by steps of at most ``adjacency`` beamwidths form one path; the
    strongest copy gives its power and pointing. With ``refine`` the
    pointing and power are corrected for the known Gaussian lobe using the
    neighbouring copies.
    """
    bw_el = beamwidth_el if beamwidth_el is not None else beamwidth_az
    flat = [
        (float(t), float(p), float(a), float(e))
        for (a, e), peaks in per_angle_peaks
        for t, p in peaks
    ]
    if not flat:
        return []
    flat.sort(key=lambda x: (x[0], -x[1], x[2], x[3]))
    link = adjacency * max(beamwidth_az, bw_el)
    c_az = 4.0 * LN2 / beamwidth_az**2
    c_el = 4.0 * LN2 / bw_el**2

    # split into delay groups
    groups: list[list[tuple[float, float, float, float]]] = [[flat[0]]]
    for item in flat[1:]:
        if item[0] - groups[-1][-1][0] <= delay_tol:
            groups[-1].append(item)
        else:
            groups.append([item])

    rays: list[Ray] = []
    for grp in groups:
        n = len(grp)
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i in range(n):
            for j in range(i + 1, n):
                if _angle_dist(grp[i][2], grp[i][3], grp[j][2], grp[j][3]) <= link:
                    parent[find(i)] = find(j)
        comps: dict[int, list[int]] = {}
        for i in range(n):
            comps.setdefault(find(i), []).append(i)
        for members in comps.values():
            best = max(members, key=lambda k: (grp[k][1], -k))
            t, p, a, e = grp[best]
            if refine and len(members) > 1:
                same_el = [(grp[k][2], grp[k][1]) for k in members if k != best and grp[k][3] == e]
                same_az = [(grp[k][3], grp[k][1]) for k in members if k != best and grp[k][2] == a]
                a_hat = _refine_axis(a, p, same_el, c_az)
                e_hat = _refine_axis(e, p, same_az, c_el)
                g = float(pattern_gain(a - a_hat, e - e_hat, beamwidth_az, bw_el))
                a, e, p = float(wrap_deg(a_hat)), e_hat, p / g
            rays.append(Ray(t, p, a, e))
    rays.sort(key=lambda r: (r.delay, -r.power))
    return rays


def extract_rays(
    cirs: Sequence[Cir],
    beamwidth_az: float,
    beamwidth_el: float | None = None,
    floor_db: float = -25.0,
    resolution: float | None = None,
    refine: bool = True,
) -> list[Ray]:
    """Effective rays from a full angular sweep of CIRs.

    The peak floor is relative to the strongest bin over the whole sweep.
    """
    if not cirs:
        return []
    pdps = [Pdp.from_cir(c) for c in cirs]
    dt = pdps[0].sample_interval
    res = resolution if resolution is not None else dt
    ref = max(float(p.bins.max()) for p in pdps)
    per_angle = [(p.angle, find_peaks(p, res, floor_db, ref)) for p in pdps]
    return screen_same_delay(per_angle, dt / 2.0, beamwidth_az, beamwidth_el, refine=refine)


def _features(rays: Sequence[Ray]) -> np.ndarray:
    """Delay and arrival direction, each scaled to unit variance.

    The direction is one feature: its unit vector is scaled by the root of
    its total variance, so a narrow elevation spread is not blown up.
    """
    d = np.array([r.delay for r in rays])
    az = np.radians([r.aoa_az for r in rays])
    el = np.radians([r.aoa_el for r in rays])
    u = np.column_stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
    d = d - d.mean()
    u = u - u.mean(axis=0)
    sd = d.std()
    su = math.sqrt(float(np.sum(u.var(axis=0))))
    return np.column_stack([d / (sd if sd > 0 else 1.0), u / (su if su > 0 else 1.0)])


def _kmeans_once(x: np.ndarray, w: np.ndarray, k: int, rng: np.random.Generator, iters: int = 100):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.choice(n, p=w / w.sum())]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        prob = w * d2
        if prob.sum() <= 0:
            centers[j:] = centers[0]
            break
        centers[j] = x[rng.choice(n, p=prob / prob.sum())]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    labels = np.full(n, -1)
    for _ in range(iters):
        dist = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new = np.argmin(dist, axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            mask = labels == j
            if mask.any():
                centers[j] = np.average(x[mask], axis=0, weights=w[mask])
    dist = np.sum((x - centers[labels]) ** 2, axis=1)
    return labels, float(np.sum(w * dist))


def weighted_kmeans(x: np.ndarray, w: np.ndarray, k: int, seed: int = 0, n_init: int = 10):
    """Power-weighted k-means; best of ``n_init`` k-means++ starts."""
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        labels, inertia = _kmeans_once(x, w, k, rng)
        if best is None or inertia < best[1] - 1e-15:
            best = (labels, inertia)
    return best


def cluster_rays(
    rays: Sequence[Ray],
    target_n: int | None = None,
    seed: int = 0,
    k_max: int = 10,
    elbow: float = 0.10,
) -> list[Cluster]:
    """Group rays by power-weighted k-means over standardized (delay, direction).

    Without ``target_n`` the cluster count is the smallest ``k`` for which
    going to ``k + 1`` lowers the weighted within-cluster distance by less
    than ``elbow`` times its one-cluster value. Clusters come back ordered
    by their earliest delay.
    """
    if not rays:
        raise ValueError("no rays to cluster")
    n = len(rays)
    if target_n is not None and target_n > n:
        raise ValueError(f"cannot form {target_n} clusters from {n} rays")
    # canonical order makes the result independent of input order
    canon = sorted(rays, key=lambda r: (r.delay, r.aoa_az, r.aoa_el, r.power, r.is_los))
    x = _features(canon)
    w = np.array([r.power for r in canon])
    if target_n is not None:
        labels, _ = weighted_kmeans(x, w, target_n, seed)
    else:
        fits = [weighted_kmeans(x, w, k, seed) for k in range(1, min(k_max, n) + 1)]
        j1 = fits[0][1]
        labels = fits[-1][0]
        for k in range(len(fits) - 1):
            if j1 <= 0 or fits[k][1] - fits[k + 1][1] < elbow * j1:
                labels = fits[k][0]
                break
    groups: dict[int, list[Ray]] = {}
    for r, lab in zip(canon, labels):
        groups.setdefault(int(lab), []).append(r)
    clusters = [Cluster(tuple(g)) for g in groups.values()]
    clusters.sort(key=lambda c: (min(r.delay for r in c.rays), -c.power))
    return clusters


def estimate_ick(c: Cluster | Sequence[float]) -> float:
    """Strongest ray power over the summed power of the rest of the cluster."""
    p = c.powers if isinstance(c, Cluster) else np.asarray(c, dtype=np.float64)
    if p.size < 2:
        raise ValueError("ICK undefined for a single-ray cluster")
    top = float(p.max())
    return top / (math.fsum(p.tolist()) - top)


@dataclass(frozen=True)
class LspEstimate:
    ds: float
    k_db: float


def estimate_lsp(rays: Sequence[Ray]) -> LspEstimate:
    """Power-weighted rms delay spread and K-factor (strongest ray over the rest)."""
    if len(rays) < 2:
        raise ValueError("need at least two rays")
    p = np.array([r.power for r in rays])
    t = np.array([r.delay for r in rays])
    w = p / p.sum()
    mean = float(w @ t)
    ds = math.sqrt(max(float(w @ (t - mean) ** 2), 0.0))
    top = float(p.max())
    return LspEstimate(ds, 10.0 * math.log10(top / (p.sum() - top)))


def resolvable_fixture(
    sm: SounderModel,
    rng: np.random.Generator,
    n_clusters: int = 3,
    m_rays: int = 4,
    ick_db: float = 17.99,
    cluster_powers: Sequence[float] | None = None,
    seed: int = 0,
) -> ChannelRealization:
    """ICK-allocated drop whose rays are all resolvable by ``sm``.

    Inside a cluster, rays sit two delay bins and 1.5 beamwidths apart,
    centred on the cluster direction; clusters are 40 bins apart in delay
    and evenly spread in azimuth.
    """
    dt = sm.resolution
    if cluster_powers is None:
        cluster_powers = np.sort(rng.uniform(0.2, 1.0, n_clusters))[::-1]
    cp = np.asarray(cluster_powers, dtype=np.float64)
    cp = cp / cp.sum()
    i = float(db2lin(ick_db))
    span = 2 * m_rays + 40
    if 5 + n_clusters * span >= sm.n_taps:
        raise ValueError("fixture does not fit the tap window")
    step = 1.5 * sm.beamwidth_az_3db
    rays: list[Ray] = []
    ids: list[int] = []
    for n in range(n_clusters):
        base_bin = 5 + n * span
        base_az = -180.0 + (n + 0.5) * 360.0 / n_clusters + rng.uniform(-5, 5)
        el = rng.uniform(-6.0, 6.0)
        for m, p in enumerate(allocate_ick(cp[n], m_rays, i)):
            delay = (base_bin + 2 * m + rng.uniform(-0.3, 0.3)) * dt
            az = float(wrap_deg(base_az + step * (m - (m_rays - 1) / 2)))
            rays.append(Ray(delay, float(p), az, float(el + rng.uniform(-2, 2))))
            ids.append(n)
    return ChannelRealization(tuple(rays), "custom", False, seed, "ick", cluster_ids=tuple(ids))


@dataclass
class RoundTripReport:
    considered: int
    recovered: int
    max_delay_error: float
    max_power_error_db: float
    ick_errors_db: list[float]
    spurious: int

    @property
    def recovery_rate(self) -> float:
        return self.recovered / self.considered if self.considered else 1.0

    def to_dict(self) -> dict:
        return {
            "considered": self.considered,
            "recovered": self.recovered,
            "recovery_rate": self.recovery_rate,
            "max_delay_error_s": self.max_delay_error,
            "max_power_error_db": self.max_power_error_db,
            "ick_errors_db": self.ick_errors_db,
            "spurious": self.spurious,
        }


def match_rays(truth: Sequence[Ray], est: Sequence[Ray], delay_tol: float) -> dict[int, int]:
    """Truth index -> estimate index, nearest delay within ``delay_tol``; one-to-one."""
    used: set[int] = set()
    out: dict[int, int] = {}
    order = sorted(range(len(truth)), key=lambda k: -truth[k].power)
    for k in order:
        best, best_d = None, delay_tol
        for j, r in enumerate(est):
            if j in used:
                continue
            d = abs(r.delay - truth[k].delay)
            if d < best_d:
                best, best_d = j, d
        if best is not None:
            used.add(best)
            out[k] = best
    return out


def round_trip(
    truth: ChannelRealization,
    est_rays: Sequence[Ray],
    est_clusters: Sequence[Cluster],
    resolution: float,
    window_db: float = 20.0,
) -> RoundTripReport:
    """Compare extracted rays and cluster ICKs with the generating drop."""
    t = truth.rays
    top = max(r.power for r in t)
    keep = [k for k, r in enumerate(t) if r.power >= top * db2lin(-window_db)]
    match = match_rays(t, est_rays, resolution / 2.0)
    rec = [k for k in keep if k in match]
    d_err = max((abs(est_rays[match[k]].delay - t[k].delay) for k in rec), default=0.0)
    p_err = max((abs(10 * math.log10(est_rays[match[k]].power / t[k].power)) for k in rec), default=0.0)

    ick_err: list[float] = []
    if truth.cluster_ids is not None:
        where = {}
        for ci, c in enumerate(est_clusters):
            for r in c.rays:
                where[id(r)] = ci
        groups: dict[int, list[int]] = {}
        for k, cid in enumerate(truth.cluster_ids):
            if cid >= 0:
                groups.setdefault(cid, []).append(k)
        for members in groups.values():
            if len(members) < 2:
                continue
            dom = max(members, key=lambda k: t[k].power)
            if dom not in match:
                continue
            ci = where.get(id(est_rays[match[dom]]))
            if ci is None or len(est_clusters[ci].rays) < 2:
                continue
            i_true = estimate_ick([t[k].power for k in members])
            ick_err.append(10 * math.log10(estimate_ick(est_clusters[ci]) / i_true))
    spurious = len(est_rays) - len(match)
    return RoundTripReport(len(keep), len(rec), d_err, p_err, ick_err, spurious)

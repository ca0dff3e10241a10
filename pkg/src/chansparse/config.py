"""INI run configuration.

Every key is optional; an empty file reproduces the default comparison run.

.. code-block:: ini

    [run]
    bands = cmWave, mmWave, subTHz
    modes = equal, ick
    variants = with_los, without_los
    drops = 10000
    seed = 2023
    workers = 1
    out = out

    [generator]
    m_rays = 20
    r_tau = 3.6
    zeta_db = 6
    los = yes
    los_placement = first_cluster
    ick_spread_db = 0
    k_cap_db = 60
    # applies to every band unless a [band.NAME] section sets its own
    ick_db =

    [band.subTHz]
    ick_db = 17.99

    # a new band needs all six statistics
    [band.myband]
    ds_log10_mu = -8
    ds_log10_sigma = 0.3
    k_mu_db = 6
    k_sigma_db = 3
    n_clusters = 4
    ick_db = 12

    [emit]
    csv = yes
    summary = yes
    cdf = no
    svg = no

    [sounder]
    beamwidth_az_deg =
    beamwidth_el_deg =
    bandwidth_hz =
    noise_floor_db =
    n_taps = 1024
    floor_db =
    refine = yes
    clusters =

    [theory]
    cases = 10000
    seed = 0
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .profiles import PRESETS, BandProfile, GenConfig
from .types import MODES, VARIANTS

BAND_FIELDS = ("ds_log10_mu", "ds_log10_sigma", "k_mu_db", "k_sigma_db", "n_clusters", "ick_db")
DEFAULT_FLOOR_DB = -25.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SounderSettings:
    beamwidth_az_deg: float | None = None
    beamwidth_el_deg: float | None = None
    bandwidth_hz: float | None = None
    noise_floor_db: float | None = None
    n_taps: int = 1024
    floor_db: float | None = None  # None: file metadata, else DEFAULT_FLOOR_DB
    refine: bool = True
    clusters: int | None = None


@dataclass(frozen=True)
class RunConfig:
    bands: tuple[str, ...] = ("cmWave", "mmWave", "subTHz")
    modes: tuple[str, ...] = MODES
    variants: tuple[str, ...] = VARIANTS
    drops: int = 10_000
    workers: int = 1
    out: Path = Path("out")
    gen: GenConfig = field(default_factory=GenConfig)
    profiles: dict[str, BandProfile] = field(default_factory=lambda: dict(PRESETS))
    emit_csv: bool = True
    emit_summary: bool = True
    emit_cdf: bool = False
    emit_svg: bool = False
    sounder: SounderSettings = field(default_factory=SounderSettings)
    theory_cases: int = 10_000
    theory_seed: int = 0

    def __post_init__(self) -> None:
        if not self.bands:
            raise ConfigError("no bands selected")
        for b in self.bands:
            if b not in self.profiles:
                raise ConfigError(f"unknown band {b!r}; known: {sorted(self.profiles)}")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}; expected one of {MODES}")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; expected one of {VARIANTS}")
        if not self.modes or not self.variants:
            raise ConfigError("modes and variants must be non-empty")
        if self.drops < 1:
            raise ConfigError("drops must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if "without_los" in self.variants and not self.gen.los:
            raise ConfigError("variant without_los needs los = yes")

    def with_cli(self, *, seed=None, drops=None, bands=None, mode=None, out=None, svg=False, workers=None) -> "RunConfig":
        """Command-line flags win over the file."""
        kw: dict = {}
        try:
            if seed is not None:
                kw["gen"] = replace(self.gen, master_seed=seed)
            if drops is not None:
                kw["drops"] = drops
            if bands:
                kw["bands"] = tuple(bands)
            if mode is not None:
                kw["modes"] = (mode,)
            if out is not None:
                kw["out"] = Path(out)
            if svg:
                kw["emit_svg"] = True
            if workers is not None:
                kw["workers"] = workers
            return replace(self, **kw)
        except ValueError as e:
            raise ConfigError(str(e)) from None


def _list(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _opt_float(sec, key):
    raw = sec.get(key, "").strip()
    return float(raw) if raw else None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    known = {"run", "generator", "emit", "sounder", "theory"}
    for s in cp.sections():
        if s not in known and not s.startswith("band."):
            raise ConfigError(f"{source}: unknown section [{s}]")
    try:
        return _build(cp)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{source}: {e}") from None


def _build(cp: configparser.ConfigParser) -> RunConfig:
    kw: dict = {}
    if cp.has_section("run"):
        r = cp["run"]
        if "bands" in r:
            kw["bands"] = _list(r["bands"])
        if "modes" in r:
            kw["modes"] = _list(r["modes"])
        if "variants" in r:
            kw["variants"] = _list(r["variants"])
        if "drops" in r:
            kw["drops"] = r.getint("drops")
        if "workers" in r:
            kw["workers"] = r.getint("workers")
        if "out" in r:
            kw["out"] = Path(r["out"])
    gkw: dict = {}
    ick_all = None
    if cp.has_section("run") and "seed" in cp["run"]:
        gkw["master_seed"] = cp["run"].getint("seed")
    if cp.has_section("generator"):
        g = cp["generator"]
        for key, conv in (("m_rays", g.getint), ("r_tau", g.getfloat), ("zeta_db", g.getfloat),
                          ("ick_spread_db", g.getfloat), ("k_cap_db", g.getfloat), ("los", g.getboolean)):
            if key in g:
                gkw[key] = conv(key)
        if "los_placement" in g:
            gkw["los_placement"] = g["los_placement"].strip()
        if "doppler_hz" in g:
            lo, hi = (float(x) for x in _list(g["doppler_hz"]))
            gkw["doppler_hz_range"] = (lo, hi)
        ick_all = _opt_float(g, "ick_db")
        unknown = set(g) - {"m_rays", "r_tau", "zeta_db", "ick_spread_db", "k_cap_db", "los", "los_placement", "doppler_hz", "ick_db"}
        if unknown:
            raise ValueError(f"unknown [generator] key {sorted(unknown)[0]!r}")
    kw["gen"] = GenConfig(**gkw)

    profiles = dict(PRESETS)
    if ick_all is not None:
        profiles = {k: p.with_overrides(ick_db=ick_all) for k, p in profiles.items()}
    for s in cp.sections():
        if not s.startswith("band."):
            continue
        name = s[len("band."):]
        sec = cp[s]
        unknown = set(sec) - set(BAND_FIELDS)
        if unknown:
            raise ValueError(f"unknown [{s}] key {sorted(unknown)[0]!r}")
        vals = {k: (sec.getint(k) if k == "n_clusters" else sec.getfloat(k)) for k in BAND_FIELDS if k in sec}
        if name in profiles:
            profiles[name] = profiles[name].with_overrides(**vals)
        else:
            missing = [k for k in BAND_FIELDS if k not in vals]
            if missing:
                raise ValueError(f"new band {name!r} needs {missing[0]}")
            profiles[name] = BandProfile(name, **vals)
    kw["profiles"] = profiles

    if cp.has_section("emit"):
        e = cp["emit"]
        for key in ("csv", "summary", "cdf", "svg"):
            if key in e:
                kw[f"emit_{key}"] = e.getboolean(key)
    if cp.has_section("sounder"):
        s = cp["sounder"]
        skw: dict = {
            "beamwidth_az_deg": _opt_float(s, "beamwidth_az_deg"),
            "beamwidth_el_deg": _opt_float(s, "beamwidth_el_deg"),
            "bandwidth_hz": _opt_float(s, "bandwidth_hz"),
            "noise_floor_db": _opt_float(s, "noise_floor_db"),
        }
        if "n_taps" in s:
            skw["n_taps"] = s.getint("n_taps")
        skw["floor_db"] = _opt_float(s, "floor_db")
        if "refine" in s:
            skw["refine"] = s.getboolean("refine")
        if s.get("clusters", "").strip():
            skw["clusters"] = s.getint("clusters")
        kw["sounder"] = SounderSettings(**skw)
    if cp.has_section("theory"):
        t = cp["theory"]
        if "cases" in t:
            kw["theory_cases"] = t.getint("cases")
        if "seed" in t:
            kw["theory_seed"] = t.getint("seed")
    return RunConfig(**kw)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), str(p))

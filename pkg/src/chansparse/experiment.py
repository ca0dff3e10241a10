"""Monte Carlo harness: Gini samples per drop, percentiles, reference tables."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .generation import draw_drop
from .profiles import BandProfile, GenConfig, get_profile
from .types import VARIANTS, GiniSample, _check_mode, _check_variant

QUANTILES = (0.2, 0.5, 0.8)
CSV_COLUMNS = ("band", "mode", "variant", "drop_index", "gini")


@dataclass(frozen=True)
class RunSpec:
    profile: BandProfile
    cfg: GenConfig = field(default_factory=GenConfig)
    mode: str = "equal"
    drops: int = 10_000
    variants: tuple[str, ...] = VARIANTS

    def __post_init__(self) -> None:
        _check_mode(self.mode)
        if int(self.drops) != self.drops or self.drops < 1:
            raise ValueError("drops must be a positive integer")
        v = tuple(dict.fromkeys(self.variants))
        if not v:
            raise ValueError("no variants requested")
        for x in v:
            _check_variant(x)
        if "without_los" in v and not self.cfg.los:
            raise ValueError("without_los requested but the generator has LoS disabled")
        object.__setattr__(self, "variants", v)


def _chunk(spec: RunSpec, start: int, stop: int) -> dict[str, np.ndarray]:
    rows = []
    los = []
    for d in range(start, stop):
        dd = draw_drop(spec.profile, spec.cfg, spec.mode, d, angles=False)
        rows.append(dd.powers)
        los.append(dd.los_index)
    x = np.vstack(rows)
    out: dict[str, np.ndarray] = {}
    for v in spec.variants:
        if v == "with_los":
            out[v] = kernels.gini_rows(x)
        else:
            keep = np.ones(x.shape[1], dtype=bool)
            keep[los[0]] = False
            out[v] = kernels.gini_rows(x[:, keep])
    return out


def gini_arrays(spec: RunSpec, workers: int = 1, chunk: int = 2000) -> dict[str, np.ndarray]:
    """Per-variant Gini values in drop order.

    Drop ``d`` always draws from the stream keyed by ``(master_seed, d)``, so
    the result does not depend on ``workers`` or ``chunk``.
    """
    bounds = [(s, min(s + chunk, spec.drops)) for s in range(0, spec.drops, chunk)]
    if workers <= 1 or len(bounds) == 1:
        parts = [_chunk(spec, a, b) for a, b in bounds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_chunk, [spec] * len(bounds), *zip(*bounds)))
    return {v: np.clip(np.concatenate([p[v] for p in parts]), 0.0, 1.0) for v in spec.variants}


def run_monte_carlo(spec: RunSpec, workers: int = 1) -> list[GiniSample]:
    """One sample per drop and variant, ordered by drop then variant."""
    arrs = gini_arrays(spec, workers)
    band = spec.profile.name
    return [
        GiniSample(float(arrs[v][d]), d, v, spec.mode, band)
        for d in range(spec.drops)
        for v in spec.variants
    ]


@dataclass(frozen=True)
class PercentileReport:
    band: str
    mode: str
    variant: str
    p20: float
    p50: float
    p80: float
    n_drops: int
    reference: tuple | None = None  # (table, p20, p50, p80)
    deltas: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if not (self.p20 <= self.p50 <= self.p80):
            raise ValueError("percentiles must be ordered")

    def to_dict(self) -> dict:
        d = {
            "band": self.band,
            "mode": self.mode,
            "variant": self.variant,
            "n_drops": self.n_drops,
            "p20": self.p20,
            "p50": self.p50,
            "p80": self.p80,
        }
        if self.reference is not None:
            d["reference"] = {"table": self.reference[0], "p20": self.reference[1], "p50": self.reference[2], "p80": self.reference[3]}
        if self.deltas is not None:
            d["deltas"] = dict(zip(("p20", "p50", "p80"), self.deltas))
        return d


def _values(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return samples.astype(np.float64).ravel()
    return np.array([s.value if isinstance(s, GiniSample) else s for s in samples], dtype=np.float64)


def percentiles(
    samples: Sequence[GiniSample] | Sequence[float] | np.ndarray,
    qs: Sequence[float] = QUANTILES,
    band: str = "custom",
    mode: str = "equal",
    variant: str = "with_los",
) -> PercentileReport:
    """Empirical quantiles by linear interpolation between order statistics.

    With sorted values ``x_0..x_{n-1}`` the ``q`` quantile is read at
    position ``q (n - 1)``, interpolating between its two neighbours.
    ``GiniSample`` input supplies band/mode/variant from its first element.
    """
    x = _values(samples)
    if x.size == 0:
        raise ValueError("no samples")
    if x.size < 10:
        warnings.warn(f"percentiles from only {x.size} samples", stacklevel=2)
    if len(qs) != 3:
        raise ValueError("a report holds exactly three quantiles")
    if samples is not None and len(samples) and isinstance(samples[0], GiniSample):
        band, mode, variant = samples[0].band, samples[0].mode, samples[0].variant
    q = np.quantile(x, qs, method="linear")
    return PercentileReport(band, mode, variant, float(q[0]), float(q[1]), float(q[2]), int(x.size))


def emit_cdf(samples) -> list[tuple[float, float]]:
    """Sorted values paired with plotting positions ``(i - 0.5)/n``."""
    x = np.sort(_values(samples))
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    return [(float(v), (k + 0.5) / n) for k, v in enumerate(x)]


# Reference Gini percentiles (p20, p50, p80) of the indoor-office study at
# 6 / 26 / 132 GHz. Baseline rows use the equal split, modified rows the
# ICK split; measurement rows come from sounder data.
TABLES: dict[str, dict[tuple[str, str], tuple[float, float, float]]] = {
    "baseline": {
        ("cmWave", "with_los"): (0.78, 0.83, 0.86),
        ("mmWave", "with_los"): (0.76, 0.82, 0.85),
        ("subTHz", "with_los"): (0.36, 0.49, 0.61),
        ("cmWave", "without_los"): (0.50, 0.61, 0.68),
        ("mmWave", "without_los"): (0.48, 0.58, 0.67),
        ("subTHz", "without_los"): (0.32, 0.48, 0.61),
    },
    "measurement": {
        ("cmWave", "with_los"): (0.89, 0.92, 0.94),
        ("mmWave", "with_los"): (0.91, 0.95, 0.96),
        ("subTHz", "with_los"): (0.96, 0.98, 0.98),
        ("cmWave", "without_los"): (0.58, 0.61, 0.68),
        ("mmWave", "without_los"): (0.65, 0.73, 0.79),
        ("subTHz", "without_los"): (0.74, 0.80, 0.82),
    },
    "modified": {
        ("cmWave", "with_los"): (0.89, 0.92, 0.93),
        ("mmWave", "with_los"): (0.92, 0.94, 0.96),
        ("subTHz", "with_los"): (0.96, 0.97, 0.98),
        ("cmWave", "without_los"): (0.57, 0.64, 0.68),
        ("mmWave", "without_los"): (0.75, 0.77, 0.79),
        ("subTHz", "without_los"): (0.80, 0.83, 0.87),
    },
}
TABLE_MODE = {"baseline": "equal", "modified": "ick", "measurement": None}
DEFAULT_TABLE = {"equal": "baseline", "ick": "modified"}

# Gated p50 cells: (table, band, variant) -> tolerance. Measurement rows are
# never gated.
GATES: dict[tuple[str, str, str], float] = {
    ("modified", "subTHz", "with_los"): 0.02,
    ("modified", "mmWave", "with_los"): 0.03,
    ("modified", "cmWave", "with_los"): 0.03,
    ("modified", "subTHz", "without_los"): 0.05,
    ("baseline", "subTHz", "with_los"): 0.08,
    ("baseline", "cmWave", "with_los"): 0.08,
    ("baseline", "mmWave", "with_los"): 0.08,
}


@dataclass(frozen=True)
class Comparison:
    table: str
    band: str
    mode: str
    variant: str
    reference: tuple[float, float, float]
    deltas: tuple[float, float, float]
    tolerance: float | None
    gated: bool

    @property
    def passed(self) -> bool | None:
        """p50 within tolerance; None when no tolerance applies."""
        if self.tolerance is None:
            return None
        return abs(self.deltas[1]) <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "table": self.table,
            "reference": dict(zip(("p20", "p50", "p80"), self.reference)),
            "deltas": dict(zip(("p20", "p50", "p80"), self.deltas)),
            "tolerance_p50": self.tolerance,
            "gated": self.gated,
            "pass": self.passed,
        }


def compare_to_reference(report: PercentileReport, table: str | None = None, tolerance: float | None = None) -> Comparison:
    """Signed deltas ``ours - reference`` against an embedded table row.

    Gated cells use their fixed tolerance; other rows use ``tolerance`` if
    given and are never gated.
    """
    if table is None:
        table = DEFAULT_TABLE[report.mode]
    if table not in TABLES:
        raise ValueError(f"unknown table {table!r}; expected one of {sorted(TABLES)}")
    want = TABLE_MODE[table]
    if want is not None and want != report.mode:
        raise ValueError(f"table {table} holds {want}-mode rows, report is {report.mode}")
    key = (report.band, report.variant)
    if key not in TABLES[table]:
        raise ValueError(f"no row for {report.band}/{report.variant} in {table}")
    ref = TABLES[table][key]
    ours = (report.p20, report.p50, report.p80)
    deltas = tuple(float(o - r) for o, r in zip(ours, ref))
    gate = GATES.get((table, report.band, report.variant))
    tol = gate if gate is not None else (None if table == "measurement" and tolerance is None else tolerance)
    return Comparison(table, report.band, report.mode, report.variant, ref, deltas, tol, gate is not None)


def attach(report: PercentileReport, cmp: Comparison) -> PercentileReport:
    return replace(report, reference=(cmp.table, *cmp.reference), deltas=cmp.deltas)


@dataclass
class SweepResult:
    """Everything one ``band x mode`` grid of runs produced."""

    arrays: dict[tuple[str, str, str], np.ndarray]
    reports: list[PercentileReport]
    comparisons: list[Comparison]

    @property
    def gated_ok(self) -> bool:
        return all(c.passed for c in self.comparisons if c.gated)

    def summary(self) -> dict:
        out = []
        for r, c in zip(self.reports, self.comparisons):
            d = r.to_dict()
            d["comparison"] = c.to_dict()
            out.append(d)
        return {"reports": out, "gated_pass": self.gated_ok}


def run_grid(
    bands: Iterable[str] = ("cmWave", "mmWave", "subTHz"),
    modes: Iterable[str] = ("equal", "ick"),
    drops: int = 10_000,
    cfg: GenConfig | None = None,
    profiles: dict[str, BandProfile] | None = None,
    variants: Sequence[str] = VARIANTS,
    workers: int = 1,
) -> SweepResult:
    """Run every ``band x mode`` combination and compare each report with its table."""
    cfg = cfg or GenConfig()
    arrays: dict[tuple[str, str, str], np.ndarray] = {}
    reports: list[PercentileReport] = []
    comps: list[Comparison] = []
    for b in bands:
        prof = (profiles or {}).get(b) or get_profile(b)
        for m in modes:
            spec = RunSpec(prof, cfg, m, drops, tuple(variants))
            res = gini_arrays(spec, workers)
            for v in spec.variants:
                arrays[(prof.name, m, v)] = res[v]
                rep = percentiles(res[v], band=prof.name, mode=m, variant=v)
                try:
                    cmp = compare_to_reference(rep)
                except ValueError:
                    # custom bands have no reference row
                    cmp = Comparison("none", prof.name, m, v, (math.nan,) * 3, (math.nan,) * 3, None, False)
                else:
                    rep = attach(rep, cmp)
                reports.append(rep)
                comps.append(cmp)
    return SweepResult(arrays, reports, comps)


def samples_csv(arrays: dict[tuple[str, str, str], np.ndarray]) -> str:
    """CSV text with one row per (band, mode, variant, drop); floats as shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for (b, m, v), arr in arrays.items():
        for d, g in enumerate(arr.tolist()):
            w.writerow((b, m, v, d, repr(g)))
    return buf.getvalue()


def read_samples_csv(text: str) -> dict[tuple[str, str, str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"expected header {','.join(CSV_COLUMNS)}")
    out: dict[tuple[str, str, str], list[float]] = {}
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise ValueError(f"line {k}: expected {len(CSV_COLUMNS)} fields")
        b, m, v, d, g = row
        vals = out.setdefault((b, m, v), [])
        if int(d) != len(vals):
            raise ValueError(f"line {k}: drop_index {d} out of order")
        vals.append(float(g))
    return {k: np.array(v) for k, v in out.items()}


def cdf_csv(samples) -> str:
    lines = ["gini,cdf"]
    lines += [f"{v!r},{p!r}" for v, p in emit_cdf(samples)]
    return "\n".join(lines) + "\n"


def summary_json(result: SweepResult) -> str:
    return json.dumps(result.summary(), indent=2, sort_keys=False) + "\n"


def cdf_svg(samples, title: str, width: int = 480, height: int = 320) -> str:
    """Self-contained SVG line plot of the empirical CDF on [0, 1] x [0, 1]."""
    pts = emit_cdf(samples)
    # thin long series to keep files small
    if len(pts) > 1000:
        idx = np.linspace(0, len(pts) - 1, 1000).round().astype(int)
        pts = [pts[i] for i in idx]
    ml, mr, mt, mb = 50, 15, 30, 40
    pw, ph = width - ml - mr, height - mt - mb

    def xy(g: float, f: float) -> str:
        return f"{ml + g * pw:.2f},{mt + (1 - f) * ph:.2f}"

    poly = " ".join(xy(g, f) for g, f in pts)
    ticks = []
    for t in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        x = ml + t * pw
        y = mt + (1 - t) * ph
        ticks.append(f'<line x1="{x:.1f}" y1="{mt + ph}" x2="{x:.1f}" y2="{mt + ph + 4}" stroke="black"/>')
        ticks.append(f'<text x="{x:.1f}" y="{mt + ph + 16}" font-size="10" text-anchor="middle">{t:.1f}</text>')
        ticks.append(f'<line x1="{ml - 4}" y1="{y:.1f}" x2="{ml}" y2="{y:.1f}" stroke="black"/>')
        ticks.append(f'<text x="{ml - 6}" y="{y + 3:.1f}" font-size="10" text-anchor="end">{t:.1f}</text>')
    return "\n".join(
        [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
            *ticks,
            f'<text x="{width / 2:.1f}" y="18" font-size="12" text-anchor="middle">{title}</text>',
            f'<text x="{ml + pw / 2:.1f}" y="{height - 6}" font-size="11" text-anchor="middle">Gini index</text>',
            f'<text x="12" y="{mt + ph / 2:.1f}" font-size="11" text-anchor="middle" transform="rotate(-90 12 {mt + ph / 2:.1f})">CDF</text>',
            f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{poly}"/>',
            "</svg>",
            "",
        ]
    )


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))

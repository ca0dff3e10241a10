"""Command-line entry point.

Exit codes: 0 success, 1 usage, 2 gated comparison failed (or theorem
counterexample), 3 I/O.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dropfile, experiment, extraction, sparsity, theory
from .config import DEFAULT_FLOOR_DB, ConfigError, RunConfig, load_config
from .generation import db2lin, generate_drop
from .kernels import BACKEND

EXIT_OK, EXIT_USAGE, EXIT_GATE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which means "gate failed" here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _bands(s: str) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--seed", type=_u64, metavar="U64", help="master seed")
    common.add_argument("--out", metavar="DIR", help="output directory")

    runopts = argparse.ArgumentParser(add_help=False)
    runopts.add_argument("--drops", type=_pos_int, metavar="N")
    runopts.add_argument("--band", type=_bands, metavar="NAME[,NAME]", help="band preset(s) or [band.NAME] sections")
    runopts.add_argument("--mode", choices=("equal", "ick"))
    runopts.add_argument("--workers", type=_pos_int, metavar="N")

    p = _Parser(prog="chansparse", description="Ray-power sparsity of stochastic and measured channels.")
    p.add_argument("--version", action="version", version=f"%(prog)s ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common, runopts], help="write drop files")
    g.add_argument("--fixture", action="store_true", help="write resolvable sounder fixtures (CIR + truth) instead")
    g.add_argument("--clusters", type=_pos_int, default=3, help="fixture cluster count")
    g.add_argument("--rays", type=_pos_int, default=4, help="fixture rays per cluster")

    m = sub.add_parser("metrics", parents=[common], help="Gini index of drop files")
    m.add_argument("paths", nargs="+", metavar="PATH", help="drop files or directories")
    m.add_argument("--variant", choices=("with_los", "without_los", "both"), default="both")

    mc = sub.add_parser("montecarlo", parents=[common, runopts], help="Monte Carlo percentiles vs reference tables")
    mc.add_argument("--svg", action="store_true", help="write one CDF plot per report")

    t = sub.add_parser("theory-check", parents=[common], help="randomized check of G_k >= G_1")
    t.add_argument("--cases", type=_pos_int)
    t.add_argument("--powers", help="check one instance: comma-separated ascending cluster powers")
    t.add_argument("--m-rays", type=int, default=20)
    t.add_argument("--ick", type=float, help="linear ICK for --powers")
    t.add_argument("--ick-db", type=float, help="ICK in dB for --powers")

    x = sub.add_parser("extract", parents=[common], help="extract rays, clusters and ICK from drop/CIR files")
    x.add_argument("paths", nargs="+", metavar="PATH")
    x.add_argument("--band", help="sounder preset when the file does not name one")
    x.add_argument("--clusters", type=_pos_int, help="fix the cluster count instead of the elbow rule")

    r = sub.add_parser("report", parents=[common], help="summarize a samples CSV written by montecarlo")
    r.add_argument("csv", metavar="SAMPLES_CSV")
    r.add_argument("--svg", action="store_true")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.with_cli(
        seed=getattr(args, "seed", None),
        drops=getattr(args, "drops", None),
        bands=getattr(args, "band", None) if args.cmd not in ("extract",) else None,
        mode=getattr(args, "mode", None),
        out=getattr(args, "out", None),
        svg=getattr(args, "svg", False),
        workers=getattr(args, "workers", None),
    )


def _mkdir(p: Path) -> Path:
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_generate(args, cfg: RunConfig) -> int:
    # fixtures are always ICK-allocated, so only bands fan out
    combos = [(b, "ick") for b in cfg.bands] if args.fixture else [(b, m) for b in cfg.bands for m in cfg.modes]
    out = Path(cfg.out)
    written = 0
    for b, m in combos:
        d = _mkdir(out if len(combos) == 1 else out / b / m)
        prof = cfg.profiles[b]
        for k in range(cfg.drops):
            if args.fixture:
                sm = extraction.sounder_for_band(b) if b in extraction.SOUNDER_PRESETS else _sounder(cfg, b)
                rng = np.random.default_rng([cfg.gen.master_seed, k])
                fx = extraction.resolvable_fixture(sm, rng, args.clusters, args.rays, prof.ick_db, seed=cfg.gen.master_seed)
                fx = _with_meta(fx, b, k)
                cirs = extraction.synthesize_measurement(fx.rays, sm, rng if sm.noise_floor_db is not None else None)
                # detection floor 10 dB below the weakest truth ray
                pw = fx.powers
                floor = 10 * math.log10(pw.min() / pw.max()) - 10.0
                meta = {
                    "beamwidth_az_deg": repr(sm.beamwidth_az_3db),
                    "beamwidth_el_deg": repr(sm.beamwidth_el),
                    "floor_db": repr(round(floor, 1)),
                }
                dropfile.write_drop(d / dropfile.drop_name(k), fx, cirs, meta)
            else:
                dropfile.write_drop(d / dropfile.drop_name(k), generate_drop(prof, cfg.gen, m, k))
            written += 1
    print(f"wrote {written} drop files under {out}")
    return EXIT_OK


def _with_meta(r, band: str, k: int):
    return replace(r, band=band, drop_index=k)


def cmd_metrics(args, cfg: RunConfig) -> int:
    files = dropfile.list_drop_files(args.paths)
    if not files:
        raise FileNotFoundError(f"no drop files in {', '.join(args.paths)}")
    variants = ("with_los", "without_los") if args.variant == "both" else (args.variant,)
    rows = ["file,drop_index,variant,gini"]
    values: dict[str, list[float]] = {v: [] for v in variants}
    errors: list[str] = []
    io_fail = False
    for f in files:
        try:
            df = dropfile.read_drop(f)
        except (dropfile.DropFileError, OSError, UnicodeDecodeError) as e:
            errors.append(str(e))
            io_fail = True
            continue
        if df.realization is None:
            errors.append(f"{f}: no rays table")
            continue
        for v in variants:
            try:
                s = sparsity.gini_realization(df.realization, v)
            except ValueError as e:
                errors.append(f"{f}: {v}: {e}")
                continue
            values[v].append(s.value)
            rows.append(f"{f.name},{df.realization.drop_index},{v},{s.value!r}")
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    summary = {"files": len(files), "errors": errors, "percentiles": {}}
    for v, vals in values.items():
        if vals:
            rep = experiment.percentiles(np.array(vals), variant=v)
            summary["percentiles"][v] = {"n": rep.n_drops, "p20": rep.p20, "p50": rep.p50, "p80": rep.p80}
    text = "\n".join(rows) + "\n"
    if args.out:
        d = _mkdir(Path(args.out))
        (d / "metrics.csv").write_text(text)
        (d / "metrics_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    else:
        sys.stdout.write(text)
    print(json.dumps(summary["percentiles"], indent=2), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_IO if io_fail else EXIT_OK


def _print_reports(res: experiment.SweepResult) -> None:
    print(f"{'band':8} {'mode':6} {'variant':12} {'p20':>6} {'p50':>6} {'p80':>6}  {'ref p50':>7} {'delta':>7}  gate")
    for rep, c in zip(res.reports, res.comparisons):
        ref = f"{c.reference[1]:7.2f}" if not math.isnan(c.reference[1]) else "      -"
        dl = f"{c.deltas[1]:+7.3f}" if not math.isnan(c.deltas[1]) else "      -"
        gate = ("PASS" if c.passed else "FAIL") + f" ±{c.tolerance}" if c.gated else "-"
        print(f"{rep.band:8} {rep.mode:6} {rep.variant:12} {rep.p20:6.3f} {rep.p50:6.3f} {rep.p80:6.3f}  {ref} {dl}  {gate}")


def _emit(res: experiment.SweepResult, cfg: RunConfig, csv_text: str | None) -> None:
    d = _mkdir(Path(cfg.out))
    if cfg.emit_csv and csv_text is not None:
        (d / "samples.csv").write_text(csv_text)
    if cfg.emit_summary:
        (d / "summary.json").write_text(experiment.summary_json(res))
    for (b, m, v), arr in res.arrays.items():
        if cfg.emit_cdf:
            (d / f"cdf_{b}_{m}_{v}.csv").write_text(experiment.cdf_csv(arr))
        if cfg.emit_svg:
            (d / f"cdf_{b}_{m}_{v}.svg").write_text(experiment.cdf_svg(arr, f"{b} {m} {v}"))


def cmd_montecarlo(args, cfg: RunConfig) -> int:
    res = experiment.run_grid(cfg.bands, cfg.modes, cfg.drops, cfg.gen, cfg.profiles, cfg.variants, cfg.workers)
    _print_reports(res)
    _emit(res, cfg, experiment.samples_csv(res.arrays))
    print(f"outputs in {cfg.out}; gated comparisons {'passed' if res.gated_ok else 'FAILED'}")
    return EXIT_OK if res.gated_ok else EXIT_GATE


def cmd_report(args, cfg: RunConfig) -> int:
    arrays = experiment.read_samples_csv(Path(args.csv).read_text())
    reports, comps = [], []
    for (b, m, v), arr in arrays.items():
        rep = experiment.percentiles(arr, band=b, mode=m, variant=v)
        try:
            c = experiment.compare_to_reference(rep)
            rep = experiment.attach(rep, c)
        except ValueError:
            c = experiment.Comparison("none", b, m, v, (math.nan,) * 3, (math.nan,) * 3, None, False)
        reports.append(rep)
        comps.append(c)
    res = experiment.SweepResult(arrays, reports, comps)
    _print_reports(res)
    if args.out:
        _emit(res, cfg, None)
    return EXIT_OK if res.gated_ok else EXIT_GATE


def cmd_theory_check(args, cfg: RunConfig) -> int:
    if args.powers is not None:
        if (args.ick is None) == (args.ick_db is None):
            raise UsageError("--powers needs exactly one of --ick / --ick-db")
        i = args.ick if args.ick is not None else float(db2lin(args.ick_db))
        try:
            cps = theory.ClusterPowerSet(tuple(float(x) for x in args.powers.split(",")), args.m_rays)
            rep = theory.verify_theorem(cps, i)
        except ValueError as e:
            raise UsageError(str(e)) from None
        out = {"g1": rep.g1, "gk": rep.gk, "delta": rep.delta, "situation": rep.situation, "holds": rep.holds}
        print(json.dumps(out, indent=2))
        return EXIT_OK if rep.holds else EXIT_GATE
    seed = args.seed if args.seed is not None else cfg.theory_seed
    cases = args.cases or cfg.theory_cases
    s = theory.theorem_sweep(cases, seed)
    text = json.dumps(s.to_dict(), indent=2)
    print(text)
    if args.out:
        (_mkdir(Path(args.out)) / "theory.json").write_text(text + "\n")
    return EXIT_OK if s.ok else EXIT_GATE


def _sounder(cfg: RunConfig, band: str | None, meta: dict | None = None, dt: float | None = None, n_taps: int | None = None) -> extraction.SounderModel:
    s = cfg.sounder
    meta = meta or {}
    base = dict(extraction.SOUNDER_PRESETS.get(band or "", {}))
    if "beamwidth_az_deg" in meta:
        base["beamwidth_az_3db"] = float(meta["beamwidth_az_deg"])
    if "beamwidth_el_deg" in meta:
        base["beamwidth_el_3db"] = float(meta["beamwidth_el_deg"])
    if dt is not None:
        base["bandwidth_hz"] = 1.0 / dt
    if s.beamwidth_az_deg is not None:
        base["beamwidth_az_3db"] = s.beamwidth_az_deg
    if s.beamwidth_el_deg is not None:
        base["beamwidth_el_3db"] = s.beamwidth_el_deg
    if s.bandwidth_hz is not None and dt is None:
        base["bandwidth_hz"] = s.bandwidth_hz
    if "beamwidth_az_3db" not in base:
        raise UsageError(f"no sounder beamwidth for band {band!r}; set [sounder] beamwidth_az_deg or --band")
    base["noise_floor_db"] = s.noise_floor_db
    base["n_taps"] = n_taps or s.n_taps
    return extraction.SounderModel(**base)


def _extract_one(path: Path, cfg: RunConfig, band_flag: str | None, n_clusters: int | None) -> dict:
    df = dropfile.read_drop(path)
    band = band_flag or df.meta.get("band")
    truth = df.realization
    out: dict = {"file": str(path)}
    if cfg.sounder.floor_db is None and "floor_db" in df.meta:
        out["floor_db"] = float(df.meta["floor_db"])
    if df.cirs is not None:
        cirs = df.cirs
        sm = _sounder(cfg, band, df.meta, cirs[0].sample_interval, cirs[0].taps.size)
        out["source"] = "cir"
    else:
        sm = _sounder(cfg, band, df.meta)
        need = int(math.ceil(max(r.delay for r in truth.rays) / sm.resolution)) + 2
        if need > sm.n_taps:
            sm = replace(sm, n_taps=need)
        rng = np.random.default_rng([truth.seed, truth.drop_index])
        cirs = extraction.synthesize_measurement(truth.rays, sm, rng)
        out["source"] = "synthesized"
    floor = cfg.sounder.floor_db
    if floor is None:
        floor = float(df.meta.get("floor_db", DEFAULT_FLOOR_DB))
    rays = extraction.extract_rays(cirs, sm.beamwidth_az_3db, sm.beamwidth_el, floor, refine=cfg.sounder.refine)
    out["rays"] = [{"delay_s": r.delay, "power": r.power, "az_deg": r.aoa_az, "el_deg": r.aoa_el} for r in rays]
    if not rays:
        out["clusters"] = []
        return out
    k = n_clusters or cfg.sounder.clusters
    clusters = extraction.cluster_rays(rays, min(k, len(rays)) if k else None)
    out["clusters"] = [
        {
            "n_rays": len(c.rays),
            "power": c.power,
            "ick_db": 10 * math.log10(extraction.estimate_ick(c)) if len(c.rays) > 1 else None,
        }
        for c in clusters
    ]
    if len(rays) >= 2:
        lsp = extraction.estimate_lsp(rays)
        out["lsp"] = {"ds_s": lsp.ds, "k_db": lsp.k_db}
    if truth is not None:
        out["truth"] = extraction.round_trip(truth, rays, clusters, sm.resolution).to_dict()
    return out


def cmd_extract(args, cfg: RunConfig) -> int:
    files = dropfile.list_drop_files(args.paths)
    if not files:
        raise FileNotFoundError(f"no drop files in {', '.join(args.paths)}")
    results = [_extract_one(f, cfg, args.band, args.clusters) for f in files]
    text = json.dumps(results, indent=2) + "\n"
    if args.out:
        (_mkdir(Path(args.out)) / "extract.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "metrics": cmd_metrics,
    "montecarlo": cmd_montecarlo,
    "theory-check": cmd_theory_check,
    "extract": cmd_extract,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.cmd](args, cfg)
    except (UsageError, ConfigError) as e:
        print(f"chansparse: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, dropfile.DropFileError) as e:
        print(f"chansparse: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: gen-city, run, sweep-density, report, dump-pattern,
dump-paths. Exit codes: 0 success, 2 configuration error, 3 runtime
error. Outputs embed the seed tuple and config hash; reruns of an equal
config produce byte-identical file bodies. Partial outputs are removed
when a command fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .antenna import ElementPattern, element_gain
from .city import ItuUrbanParams, generate_city, save_city, validate_city
from .config import (
    ConfigError,
    ScenarioConfig,
    config_hash,
    config_to_dict,
    desk_preset,
    load_config,
)
from .metrics import quantile
from .output import (
    write_cdf_csv,
    write_coverage_csv,
    write_metrics_csv,
    write_paths_csv,
    write_pattern_csv,
)
from .raytrace import finalize_paths, resolve_path, trace_geometry
from .scenario import (
    drop_ues,
    evaluate_scenario,
    place_bs_hex,
    resolve_isd,
    sweep_density,
)
from .scenario import _city_for_realization  # shared city/seed derivation


class _OutputTracker:
    """Removes files created by a failing command."""

    def __init__(self):
        self.created: list[Path] = []

    def register(self, path) -> Path:
        p = Path(path)
        self.created.append(p)
        return p

    def cleanup(self):
        for p in self.created:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _resolve_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif getattr(args, "preset", None):
        cfg = desk_preset()
    else:
        raise ConfigError("one of --config or --preset is required")
    overrides = {}
    if getattr(args, "band", None) is not None:
        overrides["band_ghz"] = args.band
    if getattr(args, "density", None) is not None:
        overrides["density_per_km2"] = args.density
        overrides["isd_m"] = None
    if getattr(args, "seed_city", None) is not None:
        overrides["seed_city"] = args.seed_city
    if getattr(args, "seed_ue", None) is not None:
        overrides["seed_ue"] = args.seed_ue
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = args.mode
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _meta(cfg: ScenarioConfig) -> dict:
    return {
        "config_hash": config_hash(cfg),
        "seed_city": cfg.seed_city,
        "seed_ue": cfg.seed_ue,
        "band_ghz": cfg.band_ghz,
        "mode": cfg.mode,
        "p_t_w": repr(cfg.p_t_w),
    }


def _write_manifest(path, cfg: ScenarioConfig) -> None:
    bundle = cfg.bundle
    manifest = {
        "config": config_to_dict(cfg),
        "config_hash": config_hash(cfg),
        "resolved_isd_m": resolve_isd(cfg),
        "band_bundle": {
            "band_ghz": bundle.band_ghz,
            "bandwidth_hz": bundle.bandwidth_hz,
            "ura_dims": list(bundle.ura_dims),
            "ula_dims": list(bundle.ula_dims),
        },
    }
    Path(path).write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )


def cmd_gen_city(args, tracker) -> int:
    params = ItuUrbanParams(args.alpha0, args.beta0, args.gamma0)
    layout = generate_city(params, args.n_buildings, seed=args.seed_city)
    out = tracker.register(args.out)
    try:
        save_city(layout, out)
    except OSError as exc:
        raise RuntimeError(f"cannot write city file {out}: {exc}") from exc
    stats = validate_city(layout, gamma0=args.gamma0)
    print(f"wrote {out}: {layout.n_buildings} buildings, side {layout.side_km:.4f} km")
    print(
        "achieved_alpha={achieved_alpha:.4f} achieved_beta={achieved_beta:.2f} "
        "height_ks_stat={height_ks_stat:.4f}".format(**stats)
    )
    return 0


def cmd_run(args, tracker) -> int:
    cfg = _resolve_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = evaluate_scenario(cfg)
    meta = _meta(cfg)
    write_metrics_csv(tracker.register(out_dir / "metrics.csv"), samples, meta)
    write_cdf_csv(
        tracker.register(out_dir / "cdf_snr.csv"), [s.snr_db for s in samples], meta
    )
    write_cdf_csv(
        tracker.register(out_dir / "cdf_sinr.csv"), [s.sinr_db for s in samples], meta
    )
    _write_manifest(tracker.register(out_dir / "run_manifest.json"), cfg)
    print(f"wrote {out_dir}/metrics.csv ({len(samples)} samples)")
    med = quantile([s.snr_db for s in samples], 0.5)
    print(f"median SNR {med:.2f} dB, band {cfg.band_ghz} GHz, mode {cfg.mode}")
    return 0


def cmd_sweep_density(args, tracker) -> int:
    cfg = _resolve_config(args)
    densities = [float(d) for d in args.densities.split(",")]
    bands = [float(b) for b in args.bands.split(",")] if args.bands else None
    if args.gamma_th is not None:
        cfg = replace(cfg, gamma_th_db=args.gamma_th)
    rows = sweep_density(cfg, densities, bands=bands)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = _meta(cfg)
    meta["gamma_th_db"] = repr(cfg.gamma_th_db)
    write_coverage_csv(tracker.register(out_dir / "coverage.csv"), rows, meta)
    _write_manifest(tracker.register(out_dir / "sweep_manifest.json"), cfg)
    print(f"wrote {out_dir}/coverage.csv ({len(rows)} rows)")
    return 0


def cmd_report(args, tracker) -> int:
    from .report import (
        format_table,
        gap_table,
        load_coverage,
        load_metrics,
        quantile_table,
        render_cdf_figure,
        render_coverage_figure,
        write_table_csv,
    )

    if not args.metrics:
        raise ConfigError("report requires at least one metrics CSV")
    by_band = {}
    meta = {}
    for path in args.metrics:
        data = load_metrics(path)
        by_band[data["band_ghz"]] = data
        meta.setdefault("config_hash", data["header"].get("config_hash", ""))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    qt = quantile_table(by_band)
    print(format_table(qt))
    write_table_csv(tracker.register(out_dir / "quantiles.csv"), qt, meta)
    if len(by_band) > 1:
        gt = gap_table(by_band)
        print()
        print(format_table(gt))
        write_table_csv(tracker.register(out_dir / "band_gaps.csv"), gt, meta)
    for metric, name in (("snr_db", "cdf_snr.png"), ("sinr_db", "cdf_sinr.png")):
        render_cdf_figure(by_band, metric, tracker.register(out_dir / name))
    if args.coverage:
        rows = load_coverage(args.coverage)
        render_coverage_figure(rows, tracker.register(out_dir / "coverage.png"))
    print(f"wrote report to {out_dir}")
    return 0


def cmd_dump_pattern(args, tracker) -> int:
    pattern = ElementPattern(
        hpbw_deg=args.hpbw,
        max_gain_dbi=args.max_gain,
        front_to_back_db=args.front_to_back,
    )
    angles = np.arange(-180.0, 180.0 + 1e-9, args.step)
    if args.cut == "az":
        gains = element_gain(pattern, 0.0, angles)
    else:
        gains = element_gain(pattern, angles, 0.0)
    write_pattern_csv(
        tracker.register(args.out),
        angles,
        gains,
        {"cut": args.cut, "hpbw_deg": args.hpbw, "max_gain_dbi": args.max_gain},
    )
    print(f"wrote {args.out} ({len(angles)} rows)")
    return 0


def cmd_dump_paths(args, tracker) -> int:
    cfg = _resolve_config(args)
    layout = _city_for_realization(cfg, args.realization)
    deployment = place_bs_hex(layout, resolve_isd(cfg))
    ues = drop_ues(cfg.n_ues, layout, seed=cfg.seed_ue + args.realization)
    carrier = cfg.band_ghz * 1e9
    sites = (
        [args.site] if args.site is not None else list(range(deployment.n_sites))
    )
    ue_ids = [args.ue] if args.ue is not None else list(range(ues.n))
    link_paths = []
    for s in sites:
        tx = np.array(deployment.sites[s].mast)
        for u in ue_ids:
            geo = trace_geometry(tx, np.array(ues.point(u)), layout, cfg.trace)
            paths = finalize_paths(
                [resolve_path(g, carrier, config=cfg.trace) for g in geo], cfg.trace
            )
            link_paths.append((s, u, paths))
    meta = _meta(cfg)
    meta["realization"] = args.realization
    write_paths_csv(tracker.register(args.out), link_paths, meta)
    n = sum(len(p) for _, _, p in link_paths)
    print(f"wrote {args.out} ({n} paths over {len(link_paths)} links)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="urbanrt",
        description="Urban ray-tracing simulator: city synthesis, multi-band "
        "MIMO link evaluation, coverage sweeps and reporting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_flags(p):
        p.add_argument("--config", help="scenario config JSON")
        p.add_argument(
            "--preset", choices=["desk"], help="built-in desk-scale preset"
        )
        p.add_argument("--band", type=float, help="carrier band in GHz")
        p.add_argument("--density", type=float, help="BS density per km^2")
        p.add_argument("--seed-city", dest="seed_city", type=int)
        p.add_argument("--seed-ue", dest="seed_ue", type=int)
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument(
            "--mode",
            choices=["interference_free", "full_interference"],
            help="interference scenario",
        )

    g = sub.add_parser("gen-city", help="sample a city layout to JSON")
    g.add_argument("--alpha0", type=float, required=True)
    g.add_argument("--beta0", type=float, required=True)
    g.add_argument("--gamma0", type=float, required=True)
    g.add_argument("--n-buildings", dest="n_buildings", type=int, required=True)
    g.add_argument("--seed-city", dest="seed_city", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_city)

    r = sub.add_parser("run", help="evaluate one scenario, emit metrics + CDFs")
    add_scenario_flags(r)
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep-density", help="coverage vs BS density sweep")
    add_scenario_flags(s)
    s.add_argument(
        "--densities", default="1,5,9,17,38,60,116", help="comma list per km^2"
    )
    s.add_argument("--bands", default="4.6,8.2,15,28", help="comma list in GHz")
    s.add_argument("--gamma-th", dest="gamma_th", type=float, help="SINR threshold dB")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_sweep_density)

    rep = sub.add_parser("report", help="quantile/gap tables and figures")
    rep.add_argument("metrics", nargs="*", help="metrics CSV files (one per band)")
    rep.add_argument("--coverage", help="coverage CSV to plot")
    rep.add_argument("--out", required=True, help="output directory")
    rep.set_defaults(func=cmd_report)

    d = sub.add_parser("dump-pattern", help="element pattern cut as CSV")
    d.add_argument("--hpbw", type=float, default=65.0)
    d.add_argument("--max-gain", dest="max_gain", type=float, default=30.0)
    d.add_argument("--front-to-back", dest="front_to_back", type=float, default=30.0)
    d.add_argument("--cut", choices=["az", "el"], default="az")
    d.add_argument("--step", type=float, default=1.0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_dump_pattern)

    p = sub.add_parser("dump-paths", help="per-link multipath dump as CSV")
    add_scenario_flags(p)
    p.add_argument("--realization", type=int, default=0)
    p.add_argument("--site", type=int, help="restrict to one site index")
    p.add_argument("--ue", type=int, help="restrict to one UE index")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump_paths)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    tracker = _OutputTracker()
    try:
        return args.func(args, tracker)
    except ConfigError as exc:
        tracker.cleanup()
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        tracker.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

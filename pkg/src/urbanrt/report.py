"""Quantile summaries, band-gap tables and figure rendering.

The report path reads metrics/coverage CSVs, prints and writes the
quantile and gap tables, and renders the CDF / coverage figures as PNG
files next to the delimited output.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import empirical_cdf, quantile
from .output import _write, read_csv

QUANTILES = (0.1, 0.5, 0.9)

_BAND_COLORS = {4.6: "tab:blue", 8.2: "tab:orange", 15.0: "tab:green", 28.0: "tab:red"}


def load_metrics(path) -> dict:
    """Metrics CSV -> {band_ghz, snr_db: [...], sinr_db: [...], rows}."""
    header, columns, rows = read_csv(path)
    idx = {c: i for i, c in enumerate(columns)}
    if "snr_db" not in idx or "sinr_db" not in idx:
        raise ValueError(f"{path}: not a metrics CSV (columns {columns})")
    band = float(header.get("band_ghz", "nan"))
    snr = [float(r[idx["snr_db"]]) for r in rows]
    sinr = [float(r[idx["sinr_db"]]) for r in rows]
    return {"band_ghz": band, "snr_db": snr, "sinr_db": sinr, "header": header}


def quantile_table(metrics_by_band: dict) -> list[dict]:
    """Per-band 10/50/90% quantiles of SNR and SINR."""
    rows = []
    for band in sorted(metrics_by_band):
        data = metrics_by_band[band]
        for metric in ("snr_db", "sinr_db"):
            row = {"band_ghz": band, "metric": metric}
            for q in QUANTILES:
                row[f"p{int(q * 100)}"] = quantile(data[metric], q)
            rows.append(row)
    return rows


def gap_table(metrics_by_band: dict) -> list[dict]:
    """Pairwise band gaps (low minus high band) at each quantile."""
    bands = sorted(metrics_by_band)
    rows = []
    for i, low in enumerate(bands):
        for high in bands[i + 1:]:
            for metric in ("snr_db", "sinr_db"):
                row = {"band_low_ghz": low, "band_high_ghz": high, "metric": metric}
                for q in QUANTILES:
                    row[f"gap_p{int(q * 100)}"] = quantile(
                        metrics_by_band[low][metric], q
                    ) - quantile(metrics_by_band[high][metric], q)
                rows.append(row)
    return rows


def format_table(rows: list[dict]) -> str:
    if not rows:
        return "(empty)"
    cols = list(rows[0])
    widths = {
        c: max(len(c), *(len(_cell(r[c])) for r in rows)) for c in cols
    }
    lines = ["  ".join(c.rjust(widths[c]) for c in cols)]
    for r in rows:
        lines.append("  ".join(_cell(r[c]).rjust(widths[c]) for c in cols))
    return "\n".join(lines)


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def write_table_csv(path, rows: list[dict], header: dict) -> None:
    if not rows:
        raise ValueError("cannot write an empty table")
    cols = list(rows[0])
    _write(path, header, cols, [[r[c] for c in cols] for r in rows])


def render_cdf_figure(metrics_by_band: dict, metric: str, out_png) -> Path:
    """Per-band empirical CDFs of one metric, rendered to a PNG file."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for band in sorted(metrics_by_band):
        samples = [s for s in metrics_by_band[band][metric] if math.isfinite(s)]
        if not samples:
            continue
        points = empirical_cdf(samples)
        values = [p[0] for p in points]
        probs = [p[1] for p in points]
        ax.step(
            values, probs, where="post",
            label=f"{band:g} GHz", color=_BAND_COLORS.get(band),
        )
    label = "SNR" if metric == "snr_db" else "SINR"
    ax.set_xlabel(f"{label} (dB)")
    ax.set_ylabel("CDF")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out_png = Path(out_png)
    out_png.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def render_coverage_figure(coverage_rows: list[dict], out_png) -> Path:
    """Coverage probability vs BS density per band, log-x, to a PNG file."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    bands = sorted({float(r["band_ghz"]) for r in coverage_rows})
    for band in bands:
        rows = sorted(
            (r for r in coverage_rows if float(r["band_ghz"]) == band),
            key=lambda r: float(r["bs_per_km2"]),
        )
        x = [float(r["bs_per_km2"]) for r in rows]
        y = [float(r["coverage"]) for r in rows]
        ax.plot(x, y, marker="o", label=f"{band:g} GHz", color=_BAND_COLORS.get(band))
    ax.set_xscale("log")
    ax.set_xlabel("BS density (per km$^2$)")
    ax.set_ylabel("Coverage probability")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out_png = Path(out_png)
    out_png.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    return out_png


def load_coverage(path) -> list[dict]:
    header, columns, rows = read_csv(path)
    idx = {c: i for i, c in enumerate(columns)}
    out = []
    for r in rows:
        out.append({c: float(r[idx[c]]) for c in columns})
    return out

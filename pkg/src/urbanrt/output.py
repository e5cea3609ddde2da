"""CSV emission with reproducibility headers.

Every file starts with '# key=value' comment lines carrying the seed
tuple and config hash; bodies are deterministic (repr float formatting,
fixed column order), so equal configs produce byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .metrics import LinkSample, empirical_cdf, quantile

METRICS_COLUMNS = ("ue_id", "x_m", "y_m", "serving_bs", "los", "snr_db", "sinr_db")
CDF_COLUMNS = ("value_db", "cdf")
COVERAGE_COLUMNS = ("bs_per_km2", "isd_m", "band_ghz", "coverage")
PATHS_COLUMNS = (
    "tx_id", "rx_id", "path_idx", "length_m", "delay_ns", "power_dbm", "phase_rad",
    "n_refl", "n_diff", "n_trans", "aod_az", "aod_el", "aoa_az", "aoa_el",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _write(path, header: dict, columns, rows, extra_comments=()) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {k}={v}" for k, v in header.items()]
    lines.extend(f"# {c}" for c in extra_comments)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path):
    """(header dict, column list, row lists) of a file written by this module."""
    header: dict[str, str] = {}
    columns: list[str] = []
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    header[k] = v
                continue
            if not columns:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    return header, columns, rows


def write_metrics_csv(path, samples: list[LinkSample], header: dict) -> None:
    rows = [
        (s.ue_id, s.x_m, s.y_m, s.serving_bs, s.los, s.snr_db, s.sinr_db)
        for s in samples
    ]
    _write(path, header, METRICS_COLUMNS, rows)


def write_cdf_csv(path, samples_db, header: dict) -> None:
    finite = [s for s in samples_db if math.isfinite(s)]
    points = empirical_cdf(samples_db)
    comments = []
    if finite:
        for q in (0.1, 0.5, 0.9):
            comments.append(f"quantile_{int(q * 100)}={_fmt(quantile(samples_db, q))}")
    _write(path, header, CDF_COLUMNS, points, extra_comments=comments)


def write_coverage_csv(path, rows: list[dict], header: dict) -> None:
    body = [
        (r["bs_per_km2"], r["isd_m"], r["band_ghz"], r["coverage"]) for r in rows
    ]
    _write(path, header, COVERAGE_COLUMNS, body)


def _angles_deg(v):
    az = math.degrees(math.atan2(v[1], v[0]))
    el = math.degrees(math.asin(max(-1.0, min(1.0, v[2]))))
    return az, el


def write_paths_csv(path, link_paths, header: dict) -> None:
    """link_paths: iterable of (tx_id, rx_id, [PropagationPath, ...])."""
    rows = []
    for tx_id, rx_id, paths in link_paths:
        for idx, p in enumerate(paths):
            aod_az, aod_el = _angles_deg(p.aod)
            aoa_az, aoa_el = _angles_deg(p.aoa)
            rows.append(
                (
                    tx_id, rx_id, idx, p.length_m, p.delay_s * 1e9, p.power_dbm,
                    p.phase_rad, p.n_reflections, p.n_diffractions,
                    p.n_transmissions, aod_az, aod_el, aoa_az, aoa_el,
                )
            )
    _write(path, header, PATHS_COLUMNS, rows)


def write_pattern_csv(path, angles_deg, gains_dbi, header: dict) -> None:
    _write(path, header, ("angle_deg", "gain_dbi"), list(zip(angles_deg, gains_dbi)))


def write_cir_csv(path, cir, header: dict) -> None:
    """Tap dump: tap_idx, delay_ns, then N_r*N_t re/im pairs row-major over (m, n)."""
    columns = ["tap_idx", "delay_ns"]
    for m in range(cir.n_r):
        for n in range(cir.n_t):
            columns.append(f"re_{m}_{n}")
            columns.append(f"im_{m}_{n}")
    rows = []
    for idx, (h, delay) in enumerate(cir.taps):
        row = [idx, delay * 1e9]
        for m in range(cir.n_r):
            for n in range(cir.n_t):
                row.append(float(h[m, n].real))
                row.append(float(h[m, n].imag))
        rows.append(row)
    _write(path, header, columns, rows)

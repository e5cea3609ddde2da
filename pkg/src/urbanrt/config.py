"""Run configuration: strict JSON schema, presets, and config hashing.

Configs are flat JSON trees. Unknown keys are rejected so that run
manifests stay diff-able; every seed is explicit (no wall-clock
defaults).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .antenna import elements_for_band
from .materials import SUPPORTED_BANDS_GHZ
from .raytrace import TraceConfig


class ConfigError(ValueError):
    """Invalid run configuration; CLI maps this to exit code 2."""


@dataclass(frozen=True)
class CitySpec:
    """Inline ITU parameters or a path to a city JSON file."""

    alpha0: float | None = None
    beta0: float | None = None
    gamma0: float | None = None
    n_buildings: int | None = None
    file: str | None = None

    def inline(self) -> bool:
        return self.file is None


@dataclass(frozen=True)
class ScenarioConfig:
    band_ghz: float
    mode: str                       # "interference_free" | "full_interference"
    n_ues: int
    n_realizations: int
    seed_city: int
    seed_ue: int
    city: CitySpec
    p_t_w: float = 1.0
    gamma_th_db: float = 10.0
    density_per_km2: float | None = None
    isd_m: float | None = None
    trace: TraceConfig = field(default_factory=TraceConfig)
    workers: int = 1

    def __post_init__(self):
        supported = [abs(self.band_ghz - b) < 1e-9 for b in SUPPORTED_BANDS_GHZ]
        if not any(supported):
            raise ConfigError(
                f"band_ghz {self.band_ghz} unsupported; one of {list(SUPPORTED_BANDS_GHZ)}"
            )
        if self.mode not in ("interference_free", "full_interference"):
            raise ConfigError(f"mode must be interference_free|full_interference, got {self.mode!r}")
        if (self.density_per_km2 is None) == (self.isd_m is None):
            raise ConfigError("exactly one of density_per_km2 or isd_m is required")
        if self.n_ues < 1 or self.n_realizations < 1:
            raise ConfigError("n_ues and n_realizations must be >= 1")
        if self.p_t_w <= 0:
            raise ConfigError("p_t_w must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def bundle(self):
        return elements_for_band(self.band_ghz)


_TRACE_KEYS = {
    "max_reflections": int,
    "max_diffractions": int,
    "max_transmissions": int,
    "max_paths": int,
    "power_threshold_dbm": float,
    "corridor_margin_m": float,
    "max_order3_buildings": int,
    "slab_thickness_m": float,
}

_CITY_KEYS = {
    "alpha0": float,
    "beta0": float,
    "gamma0": float,
    "n_buildings": int,
    "file": str,
}

_TOP_KEYS = {
    "band_ghz": float,
    "mode": str,
    "n_ues": int,
    "n_realizations": int,
    "seed_city": int,
    "seed_ue": int,
    "p_t_w": float,
    "gamma_th_db": float,
    "density_per_km2": float,
    "isd_m": float,
    "workers": int,
    "city": dict,
    "trace": dict,
}


def _check_keys(data: dict, allowed: dict, where: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {where}; allowed: {sorted(allowed)}")


def _coerce(data: dict, allowed: dict, where: str) -> dict:
    _check_keys(data, allowed, where)
    out = {}
    for key, value in data.items():
        want = allowed[key]
        if value is None:
            out[key] = None
        elif want in (int, float) and isinstance(value, bool):
            raise ConfigError(f"{where}.{key}: expected {want.__name__}, got bool")
        elif want is float and isinstance(value, (int, float)):
            out[key] = float(value)
        elif want is int:
            if not isinstance(value, int):
                raise ConfigError(f"{where}.{key}: expected int, got {type(value).__name__}")
            out[key] = value
        elif not isinstance(value, want):
            raise ConfigError(
                f"{where}.{key}: expected {want.__name__}, got {type(value).__name__}"
            )
        else:
            out[key] = value
    return out


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    top = _coerce(data, _TOP_KEYS, "config")
    missing = [k for k in ("band_ghz", "mode", "n_ues", "n_realizations",
                           "seed_city", "seed_ue", "city") if k not in top]
    if missing:
        raise ConfigError(f"config missing required keys: {missing}")
    city_raw = _coerce(top.pop("city"), _CITY_KEYS, "config.city")
    if "file" in city_raw and city_raw["file"] is not None:
        extra = [k for k in city_raw if k != "file" and city_raw[k] is not None]
        if extra:
            raise ConfigError(f"config.city: 'file' excludes inline keys {extra}")
        city = CitySpec(file=city_raw["file"])
    else:
        need = [k for k in ("alpha0", "beta0", "gamma0", "n_buildings") if city_raw.get(k) is None]
        if need:
            raise ConfigError(f"config.city missing inline keys: {need}")
        city = CitySpec(
            alpha0=city_raw["alpha0"], beta0=city_raw["beta0"],
            gamma0=city_raw["gamma0"], n_buildings=city_raw["n_buildings"],
        )
    trace_raw = _coerce(top.pop("trace", {}), _TRACE_KEYS, "config.trace")
    trace = TraceConfig(**trace_raw)
    try:
        return ScenarioConfig(city=city, trace=trace, **top)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    city = (
        {"file": cfg.city.file}
        if not cfg.city.inline()
        else {
            "alpha0": cfg.city.alpha0,
            "beta0": cfg.city.beta0,
            "gamma0": cfg.city.gamma0,
            "n_buildings": cfg.city.n_buildings,
        }
    )
    return {
        "band_ghz": cfg.band_ghz,
        "mode": cfg.mode,
        "n_ues": cfg.n_ues,
        "n_realizations": cfg.n_realizations,
        "seed_city": cfg.seed_city,
        "seed_ue": cfg.seed_ue,
        "p_t_w": cfg.p_t_w,
        "gamma_th_db": cfg.gamma_th_db,
        "density_per_km2": cfg.density_per_km2,
        "isd_m": cfg.isd_m,
        "workers": cfg.workers,
        "city": city,
        "trace": {
            "max_reflections": cfg.trace.max_reflections,
            "max_diffractions": cfg.trace.max_diffractions,
            "max_transmissions": cfg.trace.max_transmissions,
            "max_paths": cfg.trace.max_paths,
            "power_threshold_dbm": cfg.trace.power_threshold_dbm,
            "corridor_margin_m": cfg.trace.corridor_margin_m,
            "max_order3_buildings": cfg.trace.max_order3_buildings,
            "slab_thickness_m": cfg.trace.slab_thickness_m,
        },
    }


def config_hash(cfg: ScenarioConfig) -> str:
    """Stable short hash of the experiment definition.

    Execution-resource fields (workers) are excluded: equal hashes must
    imply byte-identical output bodies, and results are independent of
    the worker count.
    """
    data = config_to_dict(cfg)
    data.pop("workers", None)
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def desk_preset(band_ghz: float = 8.2, mode: str = "interference_free",
                workers: int = 1) -> ScenarioConfig:
    """Desk-scale preset: ~0.6 km city, 5 sites, 100 UEs, 3 realizations.

    Runs in minutes on a laptop; the full reference scale (1.2 km, 17
    sites, 370 UEs, 10 cities, 6 reflections) is hours. The transmit
    power is calibrated so the desk-scale SINR span matches the reference
    dynamic range (cell-edge tail below 0 dB at a 10 dB coverage
    threshold); SNR orderings and gaps are transmit-power invariant.
    """
    return ScenarioConfig(
        band_ghz=band_ghz,
        mode=mode,
        n_ues=100,
        n_realizations=3,
        seed_city=1,
        seed_ue=1000,
        p_t_w=1e-3,
        gamma_th_db=10.0,
        density_per_km2=17.0,
        city=CitySpec(alpha0=0.5, beta0=300.0, gamma0=50.0, n_buildings=121),
        trace=TraceConfig(
            max_reflections=3,
            corridor_margin_m=90.0,
            max_order3_buildings=10,
        ),
        workers=workers,
    )

"""Synthetic high-rise city layouts from the three-parameter ITU statistical model.

The model is driven by alpha0 (built-up area ratio), beta0 (buildings per
km^2) and gamma0 (Rayleigh scale of building heights). Buildings sit on a
regular square grid with constant width and street spacing; only heights
are random.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .geometry import Boxes, boxes_from_buildings

# One storey: keeps near-zero Rayleigh draws from degenerating into
# zero-thickness obstacles. Affects < 0.2% of samples at gamma0 = 50.
MIN_BUILDING_HEIGHT_M = 3.0

DEFAULT_WALL_MATERIAL = "concrete"


@dataclass(frozen=True)
class ItuUrbanParams:
    """ITU urban statistics: built ratio, density (1/km^2), Rayleigh scale (m)."""

    alpha0: float
    beta0: float
    gamma0: float

    def __post_init__(self):
        if not 0.0 < self.alpha0 <= 1.0:
            raise ValueError(f"alpha0 must be in (0, 1], got {self.alpha0}")
        if self.beta0 <= 0.0:
            raise ValueError(f"beta0 must be positive, got {self.beta0}")
        if self.gamma0 <= 0.0:
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")


@dataclass(frozen=True)
class Building:
    center: tuple[float, float]  # m
    width: float                 # m, square footprint
    height: float                # m
    material: str = DEFAULT_WALL_MATERIAL


@dataclass
class CityLayout:
    side_km: float
    street_m: float
    buildings: list[Building]
    seed: int | None = None
    _boxes: Boxes | None = field(default=None, repr=False, compare=False)

    @property
    def side_m(self) -> float:
        return self.side_km * 1000.0

    @property
    def n_buildings(self) -> int:
        return len(self.buildings)

    @property
    def building_width(self) -> float:
        return self.buildings[0].width if self.buildings else 0.0

    @property
    def pitch_m(self) -> float:
        """Grid pitch: building width plus street width."""
        return self.building_width + self.street_m

    def boxes(self) -> Boxes:
        """Cached AABB view of the buildings."""
        if self._boxes is None:
            self._boxes = boxes_from_buildings(self.buildings)
        return self._boxes


def derive_layout_params(alpha0: float, beta0: float, n_buildings: int) -> dict:
    """Building width, street width and area side from the ITU parameters.

    w_b = 1000*sqrt(alpha0/beta0), s = 1000/sqrt(beta0) - w_b and
    D = (s + w_b)/1000 * sqrt(N). Raises on non-positive street width
    (the parameter pair cannot be realized on a constant-pitch grid).
    """
    if not 0.0 < alpha0 <= 1.0:
        raise ValueError(f"alpha0 must be in (0, 1], got {alpha0}")
    if beta0 <= 0.0:
        raise ValueError(f"beta0 must be positive, got {beta0}")
    if n_buildings < 1:
        raise ValueError(f"n_buildings must be >= 1, got {n_buildings}")
    w_b = 1000.0 * math.sqrt(alpha0 / beta0)
    s = 1000.0 / math.sqrt(beta0) - w_b
    if s <= 0.0:
        raise ValueError(
            "infeasible density/coverage pair: derived street width "
            f"{s:.3f} m is not positive (alpha0={alpha0}, beta0={beta0})"
        )
    d_km = (s + w_b) / 1000.0 * math.sqrt(n_buildings)
    return {"w_b": w_b, "s": s, "D": d_km}


def sample_building_height(gamma0: float, u: float) -> float:
    """Rayleigh inverse-CDF height draw, clamped to the minimum storey height."""
    if gamma0 <= 0.0:
        raise ValueError(f"gamma0 must be positive, got {gamma0}")
    if not 0.0 < u < 1.0:
        raise ValueError(f"uniform draw must lie in (0, 1), got {u}")
    h = gamma0 * math.sqrt(-2.0 * math.log1p(-u))
    return max(h, MIN_BUILDING_HEIGHT_M)


def _grid_side(n_buildings: int) -> int:
    """Largest g with g*g <= n_buildings (grid rounding, documented)."""
    g = math.isqrt(n_buildings)
    if g < 1:
        raise ValueError(f"n_buildings must be >= 1, got {n_buildings}")
    return g


def generate_city(params: ItuUrbanParams, n_buildings: int, seed: int) -> CityLayout:
    """Sample one city realization.

    Buildings are placed on a g x g grid (g = floor(sqrt(n_buildings)),
    rounding a non-square count down) with pitch w_b + s; the area side is
    recomputed from the rounded count so beta0 is preserved exactly.
    Heights are i.i.d. Rayleigh(gamma0) draws from a counter-based
    generator, so the layout is bit-identical for a fixed seed.
    """
    derived = derive_layout_params(params.alpha0, params.beta0, n_buildings)
    g = _grid_side(n_buildings)
    pitch = derived["w_b"] + derived["s"]
    side_km = g * pitch / 1000.0

    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(g * g)
    buildings = []
    for j in range(g):
        for i in range(g):
            cx = (i + 0.5) * pitch
            cy = (j + 0.5) * pitch
            h = sample_building_height(params.gamma0, float(u[j * g + i]))
            buildings.append(
                Building(center=(cx, cy), width=derived["w_b"], height=h)
            )
    return CityLayout(
        side_km=side_km, street_m=derived["s"], buildings=buildings, seed=seed
    )


def validate_city(layout: CityLayout, gamma0: float | None = None) -> dict:
    """Quality gate: achieved alpha/beta and the height KS statistic.

    gamma0 defaults to the Rayleigh maximum-likelihood fit of the layout's
    own heights (the generating value is not part of the layout schema).
    """
    if not layout.buildings:
        raise ValueError("cannot validate an empty layout")
    n = layout.n_buildings
    side = layout.side_m
    w_b = layout.building_width
    heights = np.array([b.height for b in layout.buildings])
    if gamma0 is None:
        gamma0 = float(np.sqrt(np.mean(heights**2) / 2.0))
    ks = stats.kstest(heights, stats.rayleigh(scale=gamma0).cdf)
    return {
        "achieved_alpha": w_b**2 * n / side**2,
        "achieved_beta": n / layout.side_km**2,
        "height_ks_stat": float(ks.statistic),
        "height_ks_pvalue": float(ks.pvalue),
    }


# --- JSON schema: {side_km, street_m, buildings: [{cx, cy, w, h, material}]} ---

def city_to_dict(layout: CityLayout) -> dict:
    return {
        "side_km": layout.side_km,
        "street_m": layout.street_m,
        "buildings": [
            {
                "cx": b.center[0],
                "cy": b.center[1],
                "w": b.width,
                "h": b.height,
                "material": b.material,
            }
            for b in layout.buildings
        ],
    }


def city_from_dict(data: dict) -> CityLayout:
    for key in ("side_km", "street_m", "buildings"):
        if key not in data:
            raise ValueError(f"city JSON missing required field '{key}'")
    buildings = []
    for idx, entry in enumerate(data["buildings"]):
        for key in ("cx", "cy", "w", "h", "material"):
            if key not in entry:
                raise ValueError(
                    f"city JSON building #{idx} missing required field '{key}'"
                )
        buildings.append(
            Building(
                center=(float(entry["cx"]), float(entry["cy"])),
                width=float(entry["w"]),
                height=float(entry["h"]),
                material=str(entry["material"]),
            )
        )
    return CityLayout(
        side_km=float(data["side_km"]),
        street_m=float(data["street_m"]),
        buildings=buildings,
    )


def save_city(layout: CityLayout, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(city_to_dict(layout), f, indent=1)


def load_city(path) -> CityLayout:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return city_from_dict(data)

"""Building material constants and interface coefficients.

Conductivity varies with band; relative permittivity is band-flat for the
tabulated materials. Reflection uses the plane-interface Fresnel
coefficients with complex permittivity; transmission treats a building as
a single homogeneous slab.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0, speed_of_light

SUPPORTED_BANDS_GHZ = (4.6, 8.2, 15.0, 28.0)

# Building shells are modelled as one thin homogeneous slab.
DEFAULT_SLAB_THICKNESS_M = 0.3


@dataclass(frozen=True)
class Material:
    """Per-band conductivity (S/m) and relative permittivity, keyed by GHz."""

    name: str
    conductivity: dict[float, float]
    permittivity: dict[float, float]

    def at(self, carrier_hz: float) -> tuple[float, float]:
        """(sigma, eps_r) at the nearest supported band."""
        ghz = carrier_hz / 1e9
        band = min(self.conductivity, key=lambda b: abs(b - ghz))
        return self.conductivity[band], self.permittivity[band]

    def complex_permittivity(self, carrier_hz: float) -> complex:
        sigma, eps_r = self.at(carrier_hz)
        omega = 2.0 * math.pi * carrier_hz
        return eps_r - 1j * sigma / (omega * epsilon_0)


def _material(name, sigmas, eps_r):
    bands = SUPPORTED_BANDS_GHZ
    return Material(
        name=name,
        conductivity=dict(zip(bands, sigmas)),
        permittivity={b: eps_r for b in bands},
    )


MATERIALS: dict[str, Material] = {
    m.name: m
    for m in (
        _material("concrete", (0.14, 0.23, 0.38, 0.63), 5.24),
        _material("glass", (0.03, 0.06, 0.12, 0.24), 6.31),
        _material("brick", (0.03, 0.03, 0.04, 0.04), 3.91),
        _material("dry_earth", (0.003, 0.01, 0.036, 0.147), 3.00),
    )
}

GROUND_MATERIAL = "dry_earth"


def get_material(name: str) -> Material:
    try:
        return MATERIALS[name]
    except KeyError:
        raise ValueError(
            f"unknown material '{name}'; known: {sorted(MATERIALS)}"
        ) from None


def reflection_coefficient(
    material: Material | str,
    carrier_hz: float,
    incidence_deg: float,
    polarization: str = "TE",
) -> complex:
    """Fresnel reflection coefficient for air onto the material half-space.

    incidence_deg is measured from the surface normal, in [0, 90).
    """
    if not 0.0 <= incidence_deg < 90.0:
        raise ValueError(f"incidence angle must be in [0, 90), got {incidence_deg}")
    if isinstance(material, str):
        material = get_material(material)
    eps = material.complex_permittivity(carrier_hz)
    theta = math.radians(incidence_deg)
    cos_i = math.cos(theta)
    root = np.sqrt(eps - math.sin(theta) ** 2)
    pol = polarization.upper()
    if pol == "TE":
        return complex((cos_i - root) / (cos_i + root))
    if pol == "TM":
        return complex((eps * cos_i - root) / (eps * cos_i + root))
    raise ValueError(f"polarization must be 'TE' or 'TM', got {polarization!r}")


def slab_transmission_coefficient(
    material: Material | str,
    carrier_hz: float,
    incidence_deg: float,
    polarization: str = "TE",
    thickness_m: float = DEFAULT_SLAB_THICKNESS_M,
) -> complex:
    """Through-slab transmission coefficient (air | slab | air).

    Standard single-layer result with internal multiple reflections:
    T = (1 - R'^2) e^{-jq} / (1 - R'^2 e^{-2jq}) where R' is the
    single-interface Fresnel coefficient and q the complex phase thickness.
    """
    if not 0.0 <= incidence_deg < 90.0:
        raise ValueError(f"incidence angle must be in [0, 90), got {incidence_deg}")
    if isinstance(material, str):
        material = get_material(material)
    eps = material.complex_permittivity(carrier_hz)
    theta = math.radians(incidence_deg)
    root = np.sqrt(eps - math.sin(theta) ** 2)
    r1 = reflection_coefficient(material, carrier_hz, incidence_deg, polarization)
    lam = speed_of_light / carrier_hz
    q = 2.0 * math.pi * thickness_m / lam * root
    e1 = np.exp(-1j * q)
    e2 = np.exp(-2j * q)
    return complex((1.0 - r1**2) * e1 / (1.0 - r1**2 * e2))

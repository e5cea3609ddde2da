"""SNR / SINR link metrics, coverage probability and empirical CDFs.

The serving link applies matched-filter (MRT/MRC) combining: transmit
elements add coherently within each tap, receive elements add in power.
Interference is beam-averaged: each interferer contributes its per-element
channel energy scaled by P_t / N_t and averaged over receive elements, so
no victim-aligned beamforming gain is granted to interferers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelImpulseResponse

# Thermal noise spectral density in the simulation's power units (per Hz).
DEFAULT_NOISE_PSD = 1e-21


@dataclass(frozen=True)
class RadioConfig:
    p_t: float                      # total transmit power per sector, W
    bandwidth: float                # Hz
    n0: float = DEFAULT_NOISE_PSD   # noise power spectral density

    def __post_init__(self):
        if self.p_t <= 0.0 or self.n0 <= 0.0 or self.bandwidth <= 0.0:
            raise ValueError("p_t, n0 and bandwidth must all be positive")

    @property
    def noise_power(self) -> float:
        return self.n0 * self.bandwidth


@dataclass(frozen=True)
class LinkSample:
    """Per-UE record of the served link quality."""

    ue_id: int
    x_m: float
    y_m: float
    serving_bs: int | None   # global sector id, None on total outage
    los: bool
    snr_db: float
    sinr_db: float


def _to_db(linear: float) -> float:
    if linear <= 0.0:
        return float("-inf")
    return 10.0 * math.log10(linear)


def snr(cir: ChannelImpulseResponse, radio: RadioConfig) -> float:
    """Beamformed SNR in dB; an empty CIR is total outage (-inf)."""
    signal = radio.p_t / cir.n_t * cir.beamformed_power()
    return _to_db(signal / radio.noise_power)


def sinr(cir: ChannelImpulseResponse, radio: RadioConfig, p_i_avg: float) -> float:
    """SINR in dB; identical to snr() when the average interference is zero."""
    if p_i_avg < 0.0:
        raise ValueError(f"average interference power must be >= 0, got {p_i_avg}")
    signal = radio.p_t / cir.n_t * cir.beamformed_power()
    return _to_db(signal / (radio.noise_power + p_i_avg))


def average_interference_power(interferers, n_r: int) -> float:
    """Beam-averaged interference power: sum_j P_tj/N_tj * (1/N_r) sum |H|^2.

    interferers: iterable of (cir, p_t) pairs, all CIRs built with the
    same UE array (N_r must agree).
    """
    total = 0.0
    for cir, p_t in interferers:
        if cir.n_r != n_r:
            raise ValueError(
                f"interferer CIR has N_r={cir.n_r}, expected {n_r}"
            )
        total += p_t / cir.n_t * cir.total_energy() / n_r
    return total


def coverage_probability(samples_db, gamma_th_db: float) -> float:
    """Fraction of samples strictly above the threshold."""
    samples = np.asarray(samples_db, dtype=float)
    if samples.size == 0:
        raise ValueError("coverage probability of an empty sample set")
    return float(np.mean(samples > gamma_th_db))


def empirical_cdf(samples_db) -> list[tuple[float, float]]:
    """Step-function CDF points (value, P[X <= value]), strictly increasing to 1."""
    samples = np.asarray(samples_db, dtype=float)
    if samples.size == 0:
        raise ValueError("empirical CDF of an empty sample set")
    values, counts = np.unique(samples, return_counts=True)
    probs = np.cumsum(counts) / samples.size
    return [(float(v), float(p)) for v, p in zip(values, probs)]


def quantile(samples_db, q: float) -> float:
    """Nearest-rank quantile: smallest sample with empirical CDF >= q."""
    samples = np.sort(np.asarray(samples_db, dtype=float))
    if samples.size == 0:
        raise ValueError("quantile of an empty sample set")
    if not 0.0 < q <= 1.0:
        raise ValueError(f"quantile level must be in (0, 1], got {q}")
    rank = max(int(math.ceil(q * samples.size)) - 1, 0)
    return float(samples[rank])

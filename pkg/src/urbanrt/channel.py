"""Wideband MIMO channel impulse responses from traced paths.

Per-element responses are synthesized from steering vectors at each
path's departure/arrival directions (planewave approximation: array
apertures are centimetres against path lengths of tens of metres).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .antenna import ArrayGeometry, ElementPattern, element_gain, pattern_angles, steering_vector

# Taps closer than the inverse of any supported bandwidth are
# indistinguishable; merge them.
TAP_MERGE_S = 0.01e-9


@dataclass(frozen=True)
class ChannelImpulseResponse:
    """Discrete multipath taps: (N_r x N_t complex gain, delay) pairs."""

    taps: tuple          # of (np.ndarray, float), delays strictly ascending
    n_t: int
    n_r: int
    carrier_hz: float

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    def total_energy(self) -> float:
        """Sum of |H_mn|^2 over all taps and element pairs."""
        return float(sum(np.sum(np.abs(h) ** 2) for h, _ in self.taps))

    def beamformed_power(self) -> float:
        """Sum over taps and rx elements of (sum_n |H_mn|)^2.

        Transmit-side coherent (matched-filter) combining per tap; for the
        rank-one taps produced here this equals N_t * total_energy().
        """
        return float(
            sum(np.sum(np.sum(np.abs(h), axis=1) ** 2) for h, _ in self.taps)
        )

    def tap_powers(self) -> np.ndarray:
        return np.array([np.sum(np.abs(h) ** 2) for h, _ in self.taps])

    def tap_delays(self) -> np.ndarray:
        return np.array([d for _, d in self.taps])


def assemble_channel(
    paths,
    tx_array: ArrayGeometry,
    rx_array: ArrayGeometry,
    carrier_hz: float,
    tx_pattern: ElementPattern | None = None,
    rx_pattern: ElementPattern | None = None,
) -> ChannelImpulseResponse:
    """Build the CIR: one rank-one tap per path, equal delays merged.

    Each path contributes A e^{j psi} a_rx a_tx^H, scaled by the element
    gains evaluated at the path's departure/arrival angles (path
    amplitudes are traced with isotropic endpoints). Empty path lists
    yield a zero-tap CIR (outage).
    """
    for arr, side in ((tx_array, "tx"), (rx_array, "rx")):
        if abs(arr.carrier_hz - carrier_hz) > 1e-3:
            raise ValueError(
                f"{side} array configured at {arr.carrier_hz} Hz, channel at {carrier_hz} Hz"
            )
    contributions = []
    for p in paths:
        aod = np.asarray(p.aod)
        aoa = np.asarray(p.aoa)
        amp = p.amplitude
        if tx_pattern is not None:
            th, ph = pattern_angles(tx_array, aod)
            amp *= 10.0 ** (element_gain(tx_pattern, th, ph) / 20.0)
        if rx_pattern is not None:
            th, ph = pattern_angles(rx_array, aoa)
            amp *= 10.0 ** (element_gain(rx_pattern, th, ph) / 20.0)
        a_t = steering_vector(tx_array, carrier_hz, tx_array.to_array_frame(aod))
        a_r = steering_vector(rx_array, carrier_hz, rx_array.to_array_frame(aoa))
        h = amp * np.exp(1j * p.phase_rad) * np.outer(a_r, a_t.conj())
        contributions.append((p.delay_s, h))

    contributions.sort(key=lambda c: c[0])
    taps = []
    for delay, h in contributions:
        if taps and delay - taps[-1][1] < TAP_MERGE_S:
            taps[-1][0] += h
        else:
            taps.append([h.copy(), delay])
    return ChannelImpulseResponse(
        taps=tuple((h, d) for h, d in taps),
        n_t=tx_array.n_elements,
        n_r=rx_array.n_elements,
        carrier_hz=carrier_hz,
    )


def rms_delay_spread(cir: ChannelImpulseResponse) -> float:
    """Power-weighted second central moment of the tap delays (seconds)."""
    if cir.n_taps == 0:
        raise ValueError("cannot compute delay spread of an empty CIR")
    powers = cir.tap_powers()
    total = powers.sum()
    if total <= 0.0:
        raise ValueError("cannot compute delay spread of an all-zero CIR")
    delays = cir.tap_delays()
    mean = float(np.sum(powers * delays) / total)
    var = float(np.sum(powers * (delays - mean) ** 2) / total)
    return float(np.sqrt(max(var, 0.0)))


def coherence_bandwidth(tau_rms_s: float) -> float:
    """0.9-correlation coherence bandwidth B_c = 1 / (5 tau_rms)."""
    if tau_rms_s <= 0.0:
        raise ValueError(f"tau_rms must be positive, got {tau_rms_s}")
    return 1.0 / (5.0 * tau_rms_s)


def is_wideband(cir: ChannelImpulseResponse, bandwidth_hz: float) -> bool:
    """True when the system bandwidth exceeds the channel coherence bandwidth."""
    if cir.n_taps <= 1:
        return False
    tau = rms_delay_spread(cir)
    if tau <= 0.0:
        return False
    return bandwidth_hz > coherence_bandwidth(tau)

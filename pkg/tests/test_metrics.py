import math

import numpy as np
import pytest
from scipy import stats

from urbanrt.antenna import ArrayGeometry, ula
from urbanrt.channel import assemble_channel
from urbanrt.metrics import (
    RadioConfig,
    average_interference_power,
    coverage_probability,
    empirical_cdf,
    quantile,
    sinr,
    snr,
)

from oracles import interference_sum_reference
from test_channel import make_path


def cir_1x1(amplitude, phase=0.0, delay=1e-7, carrier=4.6e9):
    geo = ArrayGeometry(rows=1, cols=1, carrier_hz=carrier)
    return assemble_channel([make_path(amplitude, phase, delay)], geo, geo, carrier)


def random_cir(rng, n_t_dims=(3, 3), n_r=2, n_paths=4, carrier=8.2e9):
    tx = ArrayGeometry(rows=n_t_dims[0], cols=n_t_dims[1], carrier_hz=carrier)
    rx = ula(n_r, carrier)
    paths = []
    for i in range(n_paths):
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        a = rng.standard_normal(3)
        a /= np.linalg.norm(a)
        paths.append(
            make_path(
                float(rng.uniform(1e-7, 1e-4)),
                float(rng.uniform(-math.pi, math.pi)),
                float(1e-7 + i * 3e-9),
                aod=tuple(d),
                aoa=tuple(a),
            )
        )
    return assemble_channel(paths, tx, rx, carrier)


class TestSnr:
    def test_single_tap_1x1_reference(self):
        # sigma_n^2 = N0 * B = 1e-21 * 60 MHz = 6e-14
        radio = RadioConfig(p_t=1.0, bandwidth=60e6)
        assert radio.noise_power == pytest.approx(6e-14)
        h = 3e-7
        cir = cir_1x1(h)
        assert snr(cir, radio) == pytest.approx(10 * math.log10(h**2 / 6e-14), rel=1e-12)

    def test_empty_cir_is_outage(self):
        geo = ArrayGeometry(rows=1, cols=1, carrier_hz=4.6e9)
        cir = assemble_channel([], geo, geo, 4.6e9)
        assert snr(cir, RadioConfig(p_t=1.0, bandwidth=60e6)) == float("-inf")

    def test_doubling_power_adds_3db(self):
        cir = cir_1x1(1e-6)
        a = snr(cir, RadioConfig(p_t=1.0, bandwidth=60e6))
        b = snr(cir, RadioConfig(p_t=2.0, bandwidth=60e6))
        assert b - a == pytest.approx(10 * math.log10(2.0), abs=1e-12)

    def test_invariant_under_global_phase(self):
        radio = RadioConfig(p_t=1.0, bandwidth=60e6)
        assert snr(cir_1x1(1e-6, phase=0.0), radio) == pytest.approx(
            snr(cir_1x1(1e-6, phase=2.1), radio), abs=1e-12
        )

    def test_transmit_coherent_combining_gain(self):
        # growing the TX array at fixed per-element amplitude adds 10 log10(N_t)
        radio = RadioConfig(p_t=1.0, bandwidth=200e6)
        rx = ula(1, 8.2e9)
        one = assemble_channel([make_path(1e-5, 0.0, 1e-7)], ula(1, 8.2e9), rx, 8.2e9)
        four = assemble_channel([make_path(1e-5, 0.0, 1e-7)], ula(4, 8.2e9), rx, 8.2e9)
        assert snr(four, radio) - snr(one, radio) == pytest.approx(
            10 * math.log10(4.0), abs=1e-9
        )


class TestSinr:
    def test_zero_interference_identical_to_snr(self):
        rng = np.random.default_rng(8)
        radio = RadioConfig(p_t=1.0, bandwidth=200e6)
        for _ in range(20):
            cir = random_cir(rng)
            assert sinr(cir, radio, 0.0) == snr(cir, radio)

    def test_interference_equal_to_noise_costs_3db(self):
        radio = RadioConfig(p_t=1.0, bandwidth=60e6)
        cir = cir_1x1(1e-6)
        delta = snr(cir, radio) - sinr(cir, radio, radio.noise_power)
        assert delta == pytest.approx(10 * math.log10(2.0), abs=1e-12)

    def test_never_exceeds_snr(self):
        rng = np.random.default_rng(9)
        radio = RadioConfig(p_t=1.0, bandwidth=300e6)
        for _ in range(50):
            cir = random_cir(rng)
            p_i = float(rng.uniform(0, 1e-10))
            assert sinr(cir, radio, p_i) <= snr(cir, radio)

    def test_negative_interference_rejected(self):
        with pytest.raises(ValueError):
            sinr(cir_1x1(1e-6), RadioConfig(p_t=1.0, bandwidth=60e6), -1e-15)


class TestAverageInterference:
    def test_empty_sum_is_zero(self):
        assert average_interference_power([], n_r=2) == 0.0

    def test_single_1x1_single_tap(self):
        cir = cir_1x1(2e-6)
        assert average_interference_power([(cir, 1.0)], n_r=1) == pytest.approx(
            (2e-6) ** 2, rel=1e-12
        )

    def test_matches_term_by_term_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            entries = []
            n_r = 3
            for _ in range(int(rng.integers(1, 4))):
                cir = random_cir(rng, n_t_dims=(2, 2), n_r=n_r, n_paths=int(rng.integers(1, 5)))
                entries.append((cir, float(rng.uniform(0.1, 2.0))))
            got = average_interference_power(entries, n_r=n_r)
            ref = interference_sum_reference(entries, n_r=n_r)
            assert got == pytest.approx(ref, rel=1e-9)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(12)
        entries = [(random_cir(rng, n_r=2), 1.0) for _ in range(4)]
        a = average_interference_power(entries, n_r=2)
        b = average_interference_power(list(reversed(entries)), n_r=2)
        assert a == pytest.approx(b, rel=1e-15)

    def test_inconsistent_n_r_rejected(self):
        rng = np.random.default_rng(13)
        with pytest.raises(ValueError):
            average_interference_power([(random_cir(rng, n_r=2), 1.0)], n_r=3)


class TestCoverageProbability:
    def test_minus_infinity_threshold(self):
        assert coverage_probability([1.0, 2.0, -50.0], float("-inf")) == 1.0

    def test_strict_count(self):
        assert coverage_probability([5.0, 15.0, 25.0], 10.0) == pytest.approx(2 / 3)
        assert coverage_probability([10.0, 15.0, 25.0], 10.0) == pytest.approx(2 / 3)

    def test_nonincreasing_in_threshold(self):
        rng = np.random.default_rng(15)
        samples = rng.normal(10, 5, 500)
        cov = [coverage_probability(samples, g) for g in np.linspace(-10, 30, 50)]
        assert all(a >= b for a, b in zip(cov, cov[1:]))

    def test_matches_synthetic_distribution(self):
        rng = np.random.default_rng(16)
        samples = rng.uniform(0.0, 20.0, 200_000)
        assert coverage_probability(samples, 15.0) == pytest.approx(0.25, abs=0.01)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            coverage_probability([], 10.0)


class TestEmpiricalCdf:
    def test_single_sample(self):
        assert empirical_cdf([3.5]) == [(3.5, 1.0)]

    def test_median_row(self):
        points = empirical_cdf([1.0, 2.0, 3.0])
        assert points[1] == (2.0, pytest.approx(2 / 3))
        assert points[-1][1] == 1.0

    def test_strictly_increasing_probabilities(self):
        rng = np.random.default_rng(17)
        pts = empirical_cdf(rng.normal(0, 1, 1000))
        probs = [p for _, p in pts]
        assert all(b > a for a, b in zip(probs, probs[1:]))

    def test_gaussian_quantiles_close_to_analytic(self):
        rng = np.random.default_rng(18)
        samples = rng.normal(0.0, 1.0, 10_000)
        for q in (0.1, 0.5, 0.9):
            assert quantile(samples, q) == pytest.approx(
                stats.norm.ppf(q), abs=0.1
            )

    def test_quantile_of_constant_samples(self):
        for q in (0.1, 0.5, 0.9):
            assert quantile([7.7] * 10, q) == 7.7

    def test_quantile_nearest_rank(self):
        assert quantile([1.0, 2.0, 3.0], 0.5) == 2.0
        assert quantile([1.0, 2.0, 3.0, 4.0], 0.5) == 2.0

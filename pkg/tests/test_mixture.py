"""Mixture table constants, densities and the error sampler."""

import numpy as np
import pytest
from scipy.integrate import quad

from nlarch.mixture import (
    DEFAULT_MIXTURE,
    LOG_CHI2_MEAN,
    LOG_CHI2_VAR,
    MixtureTable,
    log_chi2_density,
    mixture_density,
    mixture_logpdf,
    sample_mixture_error,
)

# the thirty table constants, asserted verbatim
TABLE = [
    (0.00609, 1.92677, 0.11265),
    (0.04775, 1.34744, 0.17788),
    (0.13057, 0.73504, 0.26768),
    (0.20674, 0.02266, 0.40611),
    (0.22715, -0.85173, 0.62699),
    (0.18842, -1.97278, 0.98583),
    (0.12047, -3.46788, 1.57469),
    (0.05591, -5.55246, 2.54498),
    (0.01575, -8.68384, 4.16591),
    (0.00115, -14.65000, 7.33342),
]


class TestTableConstants:
    def test_checksum_every_number(self):
        for j, (p, mu, s2) in enumerate(TABLE):
            assert DEFAULT_MIXTURE.p[j] == p
            assert DEFAULT_MIXTURE.mu[j] == mu
            assert DEFAULT_MIXTURE.sigma2[j] == s2

    def test_probabilities_sum_to_one(self):
        assert abs(DEFAULT_MIXTURE.p.sum() - 1.0) < 1e-5

    def test_moments_match_log_chi2(self):
        assert abs(DEFAULT_MIXTURE.mean() - LOG_CHI2_MEAN) < 0.01
        assert abs(DEFAULT_MIXTURE.variance() - LOG_CHI2_VAR) < 0.01

    def test_reference_moment_values(self):
        assert LOG_CHI2_MEAN == pytest.approx(-1.2704, abs=5e-5)
        assert LOG_CHI2_VAR == pytest.approx(4.9348, abs=5e-5)

    def test_rejects_bad_tables(self):
        with pytest.raises(ValueError):
            MixtureTable(np.array([0.5, 0.4]), np.zeros(2), np.ones(2))
        with pytest.raises(ValueError):
            MixtureTable(np.array([0.5, 0.5]), np.zeros(2), np.array([1.0, 0.0]))


class TestLogChi2Density:
    def test_value_at_zero(self):
        # 1 / sqrt(2 pi e), by direct evaluation
        assert log_chi2_density(0.0) == pytest.approx(0.24197072451914337, rel=1e-12)

    def test_integrates_to_one(self):
        val, err = quad(lambda x: float(log_chi2_density(x)), -40, 10)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_quadrature_mean(self):
        val, _ = quad(lambda x: x * float(log_chi2_density(x)), -60, 15)
        assert val == pytest.approx(-1.2704, abs=1e-4)


class TestMixtureDensity:
    def test_sup_norm_gap_below_001(self):
        grid = np.arange(-15.0, 5.0 + 1e-9, 0.01)
        gap = np.abs(mixture_density(grid) - log_chi2_density(grid)).max()
        assert gap < 0.01

    def test_left_tail_vanishes_but_logpdf_stays_finite(self):
        assert mixture_density(-60.0) < 1e-30
        assert np.isfinite(mixture_logpdf(-60.0))
        assert np.isfinite(mixture_logpdf(-300.0))

    def test_everywhere_positive(self):
        grid = np.linspace(-30, 10, 401)
        assert np.all(mixture_density(grid) > 0)

    def test_table_mean_by_dot_product(self):
        assert float(DEFAULT_MIXTURE.p @ DEFAULT_MIXTURE.mu) == pytest.approx(-1.27, abs=0.01)


class TestSampleMixtureError:
    def test_component_frequencies(self):
        rng = np.random.default_rng(5)
        z, _ = sample_mixture_error(rng, size=1_000_000)
        freq = np.bincount(z, minlength=10) / z.size
        se = np.sqrt(DEFAULT_MIXTURE.p * (1 - DEFAULT_MIXTURE.p) / z.size)
        assert np.all(np.abs(freq - DEFAULT_MIXTURE.p) < 3 * se)

    def test_sample_mean_matches_log_chi2(self):
        rng = np.random.default_rng(6)
        _, v = sample_mixture_error(rng, size=1_000_000)
        assert v.mean() == pytest.approx(-1.27, abs=0.02)

    def test_seed_reproducibility(self):
        a = sample_mixture_error(np.random.default_rng(42), size=100)
        b = sample_mixture_error(np.random.default_rng(42), size=100)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

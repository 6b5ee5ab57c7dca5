"""Greedy peak initialization: worked example, invariances, erasure soundness."""

import numpy as np
import pytest

from superres.circle import wrap, wrap_dist
from superres.peaks import PeakConfig, PeakResult, choose_eta, find_peaks
from superres.slepian import build_kernel
from superres.spectral import SpikeTrain, Spectrum, spike_fourier

TAU_EXAMPLE = np.array([0.2995, 0.3663, 0.4332, 0.5000, 0.5668, 0.6337, 0.7005])
ALPHA_EXAMPLE = np.array([10.0, -1.0, 1.0, -3.0, 2.0, -5.0, 2.0])


@pytest.fixture(scope="module")
def kernel50():
    return build_kernel(50, 1.5)


class TestConfig:
    def test_oversample_floor(self):
        with pytest.raises(ValueError, match="oversample"):
            PeakConfig(oversample=2)

    def test_negative_eta(self):
        with pytest.raises(ValueError, match="eta"):
            PeakConfig(eta=-0.1)

    def test_choose_eta_doubles_noise_level(self):
        assert choose_eta(0.3) == pytest.approx(0.6)
        assert choose_eta(0.0) == 0.0
        with pytest.raises(ValueError):
            choose_eta(-1.0)


class TestWorkedExample:
    def test_seven_spikes_recovered(self, kernel50):
        y = spike_fourier(SpikeTrain(TAU_EXAMPLE, ALPHA_EXAMPLE), 50)
        result = find_peaks(y, kernel50, PeakConfig(max_peaks=7))
        assert result.k_tilde == 7
        assert np.abs(np.sort(result.tau0) - TAU_EXAMPLE).max() <= 0.001

    def test_peak_values_positive_and_sorted(self, kernel50):
        y = spike_fourier(SpikeTrain(TAU_EXAMPLE, ALPHA_EXAMPLE), 50)
        result = find_peaks(y, kernel50, PeakConfig(max_peaks=7))
        assert np.all(result.peak_values > 0)
        # greedy picks in decreasing magnitude order
        assert np.all(np.diff(result.peak_values) <= 1e-9)


class TestBasicCases:
    def test_single_spike_matched_filter(self, kernel50):
        y = spike_fourier(SpikeTrain([0.5], [1.0]), 50)
        result = find_peaks(y, kernel50, PeakConfig(max_peaks=1))
        assert result.k_tilde == 1
        assert wrap_dist(result.tau0[0], 0.5) <= kernel50.sigma

    def test_single_negative_spike(self, kernel50):
        y = spike_fourier(SpikeTrain([0.25], [-2.0]), 50)
        result = find_peaks(y, kernel50, PeakConfig(max_peaks=1))
        assert wrap_dist(result.tau0[0], 0.25) <= kernel50.sigma

    def test_zero_measurement(self, kernel50):
        y = Spectrum(50, np.zeros(101, dtype=complex), real_signal=True)
        result = find_peaks(y, kernel50, PeakConfig(eta=0.1))
        assert result.k_tilde == 0
        assert result.tau0.size == 0

    def test_threshold_suppresses_weak_spike(self, kernel50):
        y = spike_fourier(SpikeTrain([0.2, 0.8], [10.0, 0.01]), 50)
        strong_only = find_peaks(y, kernel50, PeakConfig(eta=1.0, max_peaks=2))
        assert strong_only.k_tilde == 1
        assert wrap_dist(strong_only.tau0[0], 0.2) <= kernel50.sigma

    def test_mismatched_cutoff_raises(self, kernel50):
        y = spike_fourier(SpikeTrain([0.5], [1.0]), 20)
        with pytest.raises(ValueError, match="cut-off"):
            find_peaks(y, kernel50, PeakConfig())

    def test_iteration_cap_without_max_peaks(self, kernel50):
        # eta = 0 never triggers the threshold stop, but the pick count is
        # still bounded because erasure disks of radius 2 sigma cannot overlap
        y = spike_fourier(SpikeTrain([0.5], [1.0]), 50)
        result = find_peaks(y, kernel50, PeakConfig(eta=0.0))
        assert result.k_tilde <= int(np.ceil(1.0 / (2.0 * kernel50.sigma)))


class TestInvariances:
    def test_amplitude_scaling_leaves_selection_unchanged(self, kernel50):
        y = spike_fourier(SpikeTrain(TAU_EXAMPLE, ALPHA_EXAMPLE), 50)
        scaled = Spectrum(50, 3.7 * y.coeffs, real_signal=True)
        a = find_peaks(y, kernel50, PeakConfig(max_peaks=7, refine=False))
        b = find_peaks(scaled, kernel50, PeakConfig(max_peaks=7, refine=False))
        assert np.array_equal(a.tau0, b.tau0)
        assert np.allclose(b.peak_values, 3.7 * a.peak_values, rtol=1e-9)

    def test_shift_covariance(self, kernel50):
        shift = 0.123
        y = spike_fourier(SpikeTrain(TAU_EXAMPLE, ALPHA_EXAMPLE), 50)
        y_shift = spike_fourier(
            SpikeTrain(wrap(TAU_EXAMPLE + shift), ALPHA_EXAMPLE), 50
        )
        a = find_peaks(y, kernel50, PeakConfig(max_peaks=7))
        b = find_peaks(y_shift, kernel50, PeakConfig(max_peaks=7))
        moved = np.sort(wrap(a.tau0 + shift))
        assert np.abs(moved - np.sort(b.tau0)).max() < 1e-6

    def test_erasure_soundness(self, kernel50):
        # returned peaks are pairwise separated by essentially 2 sigma:
        # grid erasure guarantees it up to one fine-grid cell of polish
        y = spike_fourier(SpikeTrain(TAU_EXAMPLE, ALPHA_EXAMPLE), 50)
        cfg = PeakConfig(max_peaks=7)
        result = find_peaks(y, kernel50, cfg)
        cell = 1.0 / (cfg.oversample * 101)
        d = wrap_dist(result.tau0[:, None], result.tau0[None, :])
        iu = np.triu_indices(result.k_tilde, k=1)
        assert d[iu].min() > 2.0 * kernel50.sigma - 2.0 * cell

    def test_refinement_improves_grid_estimate(self, kernel50):
        y = spike_fourier(SpikeTrain([0.123456], [1.0]), 50)
        coarse = find_peaks(y, kernel50, PeakConfig(max_peaks=1, refine=False, oversample=8))
        fine = find_peaks(y, kernel50, PeakConfig(max_peaks=1, refine=True, oversample=8))
        assert wrap_dist(fine.tau0[0], 0.123456) <= wrap_dist(coarse.tau0[0], 0.123456)

    def test_result_is_frozen(self, kernel50):
        y = spike_fourier(SpikeTrain([0.5], [1.0]), 50)
        result = find_peaks(y, kernel50, PeakConfig(max_peaks=1))
        assert isinstance(result, PeakResult)
        with pytest.raises(AttributeError):
            result.k_tilde = 3


class TestSeededRecovery:
    def test_separated_spikes_all_found(self, kernel50):
        # spikes separated by >= 4 sigma and moderate dynamic range: the
        # initial estimate lands within sigma of every true position
        rng = np.random.default_rng(2024)
        sigma = kernel50.sigma
        for trial in range(100):
            k = int(rng.integers(1, 8))
            while True:
                tau = np.sort(rng.random(k))
                gaps = np.diff(np.append(tau, tau[0] + 1.0))
                if k == 1 or gaps.min() >= 4 * sigma:
                    break
            alpha = rng.uniform(1.0, 10.0, k) * rng.choice([-1.0, 1.0], k)
            y = spike_fourier(SpikeTrain(tau, alpha), 50)
            result = find_peaks(y, kernel50, PeakConfig(max_peaks=k))
            assert result.k_tilde == k
            match = wrap_dist(np.sort(result.tau0), tau)
            assert match.max() <= sigma, f"trial {trial}"

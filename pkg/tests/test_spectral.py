import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal.windows import hann

from shwalk.errors import ConfigurationError, InvalidSampleError, ShapeError
from shwalk.signal import TriaxialSignal
from shwalk.spectral import (
    FrequencyGrid,
    WindowConfig,
    block_magnitudes,
    hann_weights,
    sliding_spectra,
    window_spectrum,
    window_starts,
)

from conftest import sinusoid_signal


def test_hann_small_cases():
    np.testing.assert_allclose(hann_weights(3), [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(hann_weights(5), [0, 0.5, 1, 0.5, 0], atol=1e-15)


@given(st.integers(2, 2000))
def test_hann_matches_scipy_symmetric(tau):
    w = hann_weights(tau)
    np.testing.assert_allclose(w, hann(tau, sym=True), atol=1e-12)
    np.testing.assert_array_equal(w, w[::-1])
    assert w[0] == 0 and w[-1] == 0


def test_hann_rejects_short():
    with pytest.raises(ConfigurationError):
        hann_weights(1)


def _dft_oracle(segment, f0, tau_s, pad):
    """Brute-force DFT of the mean-removed, tapered, zero-padded segment."""
    x = (segment - segment.mean()) * hann(len(segment), sym=True)
    n = len(segment) * pad
    x = np.concatenate([x, np.zeros(n - len(x))])
    k = np.arange(n // 2 + 1)
    u = np.arange(n)
    mags = np.abs(np.exp(-2j * np.pi * np.outer(k, u) / n) @ x)
    mags[0] = 0.0
    return mags


@pytest.mark.parametrize("pad", [1, 3])
def test_window_spectrum_matches_dft(pad):
    f0 = 20
    seg = np.random.default_rng(4).normal(size=10 * f0)
    spec = window_spectrum(seg, WindowConfig(pad_factor=pad), f0)
    np.testing.assert_allclose(spec.magnitudes, _dft_oracle(seg, f0, 10, pad), atol=1e-10)
    assert spec.bin_hz == pytest.approx(1 / (10 * pad))
    assert spec.f_nyquist == 10
    assert spec.frequencies[-1] == pytest.approx(10.0)


def test_zero_and_constant_segments():
    cfg = WindowConfig()
    assert not window_spectrum(np.zeros(500), cfg, 50).magnitudes.any()
    np.testing.assert_allclose(window_spectrum(np.full(500, 3.7), cfg, 50).magnitudes, 0, atol=1e-12)


def test_sinusoid_peak_at_two_hz():
    t = np.arange(500) / 50
    spec = window_spectrum(np.sin(2 * np.pi * 2.0 * t), WindowConfig(), 50)
    mags = spec.magnitudes
    k = int(np.argmax(mags))
    assert spec.frequencies[k] == pytest.approx(2.0)
    assert np.sum(mags == mags[k]) == 1


def test_hp_cutoff_zeroes_low_bins():
    seg = np.random.default_rng(0).normal(size=500)
    spec = window_spectrum(seg, WindowConfig(hp_cutoff_hz=0.5), 50)
    assert not spec.magnitudes[spec.frequencies <= 0.5 + 1e-12].any()
    assert spec.magnitudes[spec.frequencies > 0.5].all()


def test_window_spectrum_errors():
    with pytest.raises(ShapeError):
        window_spectrum(np.zeros(499), WindowConfig(), 50)
    seg = np.zeros(500)
    seg[3] = np.inf
    with pytest.raises(InvalidSampleError):
        window_spectrum(seg, WindowConfig(), 50)


@pytest.mark.parametrize("seconds,expected", [(60, 51), (10, 1), (9, 0)])
def test_window_positions(seconds, expected):
    sig = TriaxialSignal(np.zeros((seconds * 50, 3)), 50)
    assert len(list(sliding_spectra(sig, WindowConfig()))) == expected


def test_sliding_spectra_order_and_values():
    sig = sinusoid_signal([(2.0, 0.3)], 30, noise_sd=0.05)
    cfg = WindowConfig(stride_s=2)
    got = list(sliding_spectra(sig, cfg, block=3))
    assert [s for s, _ in got] == list(range(0, 20 * 50 + 1, 100))
    for start, tri in got:
        for k in range(3):
            direct = window_spectrum(sig.samples[start:start + 500, k], cfg, 50)
            np.testing.assert_array_equal(tri[k].magnitudes, direct.magnitudes)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_magnitude_linearity(c):
    seg = np.random.default_rng(7).normal(size=500)
    a = window_spectrum(seg, WindowConfig(), 50).magnitudes
    b = window_spectrum(c * seg, WindowConfig(), 50).magnitudes
    np.testing.assert_allclose(b, c * a, rtol=1e-12, atol=1e-12 * c * a.max())


def test_block_magnitudes_backends_agree(backend):
    sig = sinusoid_signal([(1.7, 0.2)], 40, noise_sd=0.1, seed=3)
    cfg = WindowConfig(pad_factor=2)
    starts = window_starts(len(sig), cfg, 50)
    mags = block_magnitudes(sig.samples, starts, cfg, 50)
    for j, s in enumerate(starts):
        ref = _dft_oracle(sig.samples[s:s + 500, 0], 50, 10, 2)
        np.testing.assert_allclose(mags[j, 0], ref, atol=1e-9)


@pytest.mark.parametrize("kwargs", [dict(tau_s=0), dict(stride_s=0), dict(stride_s=11), dict(pad_factor=0),
                                    dict(hp_cutoff_hz=-1), dict(coverage="both")])
def test_window_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        WindowConfig(**kwargs)


def test_frequency_grid_exact_values():
    g = FrequencyGrid(50, 10, 3)
    assert g.nfft == 1500 and g.n_bins == 751
    assert g.frequency(62) == 6.2 / 3 or abs(g.frequency(62) - 62 / 30) < 1e-15
    assert g.bin_of(2.067) == 62
    assert g.bin_of(2.05) is None

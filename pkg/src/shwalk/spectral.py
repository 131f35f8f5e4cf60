"""
Hann-tapered magnitude spectra over sliding windows.

Each window is mean-subtracted, multiplied by a symmetric Hann taper,
zero-padded to ``tau * pad_factor`` points and transformed with a real FFT.
Bins at or below the high-pass cutoff (always including DC) are zeroed.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from shwalk import _backend
from shwalk.errors import ConfigurationError, InvalidSampleError, ShapeError

__all__ = [
    "WindowConfig",
    "FrequencyGrid",
    "Spectrum",
    "hann_weights",
    "window_spectrum",
    "sliding_spectra",
    "window_starts",
    "block_magnitudes",
]

COVERAGE_MODES = ("inclusive", "interior")


@dataclass(frozen=True)
class WindowConfig:
    """
    Sliding window layout.

    Parameters
    ----------
    tau_s : int
        Window length, in seconds.
    stride_s : int
        Shift between consecutive windows, in seconds.
    pad_factor : int
        FFT length multiplier; 1 gives a ``1 / tau_s`` Hz grid.
    hp_cutoff_hz : float
        Bins at or below this frequency are set to zero. 0 zeroes DC only.
    coverage : {'inclusive', 'interior'}
        Which seconds of a window it votes for during epoch fusion.
        'inclusive' uses all ``tau_s`` seconds, 'interior' drops the last one.
    """

    tau_s: int = 10
    stride_s: int = 1
    pad_factor: int = 1
    hp_cutoff_hz: float = 0.0
    coverage: str = "inclusive"

    def __post_init__(self):
        for name in ("tau_s", "stride_s", "pad_factor"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
        if self.tau_s < 1:
            raise ConfigurationError(f"tau_s must be >= 1, got {self.tau_s}")
        if self.stride_s < 1:
            raise ConfigurationError(f"stride_s must be >= 1, got {self.stride_s}")
        if self.stride_s > self.tau_s:
            raise ConfigurationError("stride_s must not exceed tau_s")
        if self.pad_factor < 1:
            raise ConfigurationError(f"pad_factor must be >= 1, got {self.pad_factor}")
        if not self.hp_cutoff_hz >= 0:
            raise ConfigurationError("hp_cutoff_hz must be >= 0")
        if self.coverage not in COVERAGE_MODES:
            raise ConfigurationError(f"coverage must be one of {COVERAGE_MODES}")

    def tau(self, f0):
        """Window length in samples."""
        return self.tau_s * f0

    def stride(self, f0):
        return self.stride_s * f0

    def grid(self, f0):
        return FrequencyGrid(f0, self.tau_s, self.pad_factor)

    @property
    def coverage_s(self):
        """Number of seconds each window votes for."""
        return self.tau_s if self.coverage == "inclusive" else max(self.tau_s - 1, 1)


@dataclass(frozen=True)
class FrequencyGrid:
    """Discrete frequency grid of a padded window transform."""

    f0: int
    tau_s: int
    pad_factor: int = 1

    @property
    def nfft(self):
        return self.tau_s * self.f0 * self.pad_factor

    @property
    def n_bins(self):
        return self.nfft // 2 + 1

    @property
    def bin_hz(self):
        return 1.0 / (self.tau_s * self.pad_factor)

    @property
    def f_nyquist(self):
        return self.f0 / 2

    @property
    def bins_per_hz(self):
        return self.tau_s * self.pad_factor

    def frequency(self, k):
        """Frequency of bin(s) `k`; exact division keeps e.g. bin 21 at 2.1."""
        return np.asarray(k) / self.bins_per_hz

    @property
    def frequencies(self):
        return self.frequency(np.arange(self.n_bins))

    def bin_of(self, freq_hz, tol_hz=5e-4):
        """
        Index of the bin at `freq_hz`.

        Returns None when no bin lies within `tol_hz`. The default tolerance
        accepts frequencies quoted to three decimals (2.067 for 62/30 Hz).
        """
        k = int(round(freq_hz * self.bins_per_hz))
        if abs(k / self.bins_per_hz - freq_hz) > tol_hz or not 0 <= k < self.n_bins:
            return None
        return k


@dataclass(frozen=True)
class Spectrum:
    """Magnitude spectrum of one window on one axis."""

    magnitudes: np.ndarray
    grid: FrequencyGrid
    window_start: int = 0

    @property
    def bin_hz(self):
        return self.grid.bin_hz

    @property
    def f_nyquist(self):
        return self.grid.f_nyquist

    @property
    def frequencies(self):
        return self.grid.frequencies


@lru_cache(maxsize=32)
def _hann(tau):
    u = np.arange(tau)
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * u / (tau - 1)))
    # force exact symmetry; cos rounding differs slightly between u and tau-1-u
    w = 0.5 * (w + w[::-1])
    w.setflags(write=False)
    return w


def hann_weights(tau):
    """
    Symmetric Hann taper ``0.5 * (1 - cos(2 pi u / (tau - 1)))``.

    Parameters
    ----------
    tau : int
        Window length in samples, at least 2.

    Returns
    -------
    numpy.ndarray
        Read-only (tau,) array with zeros at both ends.
    """
    if int(tau) != tau or tau < 2:
        raise ConfigurationError(f"Hann window needs tau >= 2, got {tau}")
    return _hann(int(tau))


def _suppress_mask(grid, hp_cutoff_hz):
    freqs = grid.frequencies
    mask = freqs <= hp_cutoff_hz
    mask[0] = True
    return mask


def block_magnitudes(samples, starts, config, f0):
    """
    Magnitude spectra for a batch of windows.

    Parameters
    ----------
    samples : numpy.ndarray
        (N, 3) float64 array holding every window.
    starts : numpy.ndarray
        (W,) window start indices into `samples`.
    config : WindowConfig
    f0 : int

    Returns
    -------
    numpy.ndarray
        (W, 3, n_bins) C-contiguous magnitudes.
    """
    tau = config.tau(f0)
    grid = config.grid(f0)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    prepared = _backend.kernels.prepare_windows(samples, starts, tau, hann_weights(tau), grid.nfft)
    mags = np.abs(np.fft.rfft(prepared, axis=-1))
    mags[..., _suppress_mask(grid, config.hp_cutoff_hz)] = 0.0
    return np.ascontiguousarray(mags)


def window_spectrum(segment, config, f0, window_start=0):
    """
    Magnitude spectrum of one axis segment.

    Parameters
    ----------
    segment : array_like
        (tau_s * f0,) samples of a single axis.
    config : WindowConfig
    f0 : int
    window_start : int, optional
        Recorded on the result only.

    Returns
    -------
    Spectrum
    """
    seg = np.asarray(segment, dtype=np.float64)
    tau = config.tau(f0)
    if seg.ndim != 1 or seg.size != tau:
        raise ShapeError(f"segment must hold {tau} samples, got shape {seg.shape}")
    if not np.isfinite(seg).all():
        raise InvalidSampleError("non-finite sample in segment")
    tri = np.zeros((tau, 3))
    tri[:, 0] = seg
    mags = block_magnitudes(tri, np.zeros(1, dtype=np.int64), config, f0)[0, 0]
    grid = config.grid(f0)
    return Spectrum(mags, grid, window_start)


def window_starts(n_samples, config, f0):
    """Start indices of every window lying fully inside `n_samples`."""
    tau = config.tau(f0)
    if n_samples < tau:
        return np.zeros(0, dtype=np.int64)
    n_win = (n_samples - tau) // config.stride(f0) + 1
    return np.arange(n_win, dtype=np.int64) * config.stride(f0)


def sliding_spectra(signal, config, block=256):
    """
    Tri-axial spectra for every window position, in start order.

    Yields
    ------
    window_start : int
    spectra : tuple of Spectrum
        One per axis.
    """
    f0 = signal.f0
    grid = config.grid(f0)
    starts = window_starts(len(signal), config, f0)
    for lo in range(0, starts.size, block):
        chunk = starts[lo : lo + block]
        mags = block_magnitudes(signal.samples, chunk, config, f0)
        for start, m in zip(chunk, mags):
            yield int(start) + signal.start_offset, tuple(
                Spectrum(m[k], grid, int(start) + signal.start_offset)
                for k in range(3)
            )

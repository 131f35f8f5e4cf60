"""
Raw tri-axial signal container and vector-magnitude counts.

Samples are indexed by integer position from the first observation (0-based).
Acceleration is in units of g.
"""
from dataclasses import dataclass, field

import numpy as np

from shwalk import _backend
from shwalk.errors import BoundaryError, ConfigurationError, InvalidSampleError, ShapeError

__all__ = [
    "TriaxialSignal",
    "EpochGrid",
    "vector_magnitude",
    "vm_count",
    "epoch_vm_series",
]


@dataclass(frozen=True)
class TriaxialSignal:
    """
    Uniformly sampled 3-axis acceleration.

    Parameters
    ----------
    samples : numpy.ndarray
        (N, 3) array of acceleration values, in g.
    f0 : int
        Sampling frequency, in Hz.
    start_offset : int, optional
        Sample index of the first row. Default 0.
    """

    samples: np.ndarray
    f0: int
    start_offset: int = 0
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ShapeError(f"samples must have shape (N, 3), got {arr.shape}")
        object.__setattr__(self, "samples", arr)
        f0 = self.f0
        if isinstance(f0, float) and f0.is_integer():
            f0 = int(f0)
        if not isinstance(f0, (int, np.integer)) or f0 <= 0:
            raise ConfigurationError(f"f0 must be a positive integer, got {self.f0!r}")
        object.__setattr__(self, "f0", int(f0))
        if self.check and arr.size and not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
            raise InvalidSampleError(f"non-finite sample at index {bad}")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self):
        return len(self) / self.f0

    def scaled(self, c):
        """Return a copy with every sample multiplied by `c`."""
        return TriaxialSignal(self.samples * c, self.f0, self.start_offset)


@dataclass(frozen=True)
class EpochGrid:
    """Whole 1-second epochs covered by a signal of `n_samples` at `f0`."""

    n_samples: int
    f0: int
    epoch_len_s: int = 1

    @property
    def n_epochs(self):
        return self.n_samples // (self.f0 * self.epoch_len_s)

    @classmethod
    def for_signal(cls, signal):
        return cls(len(signal), signal.f0)


def vector_magnitude(sample):
    """
    Euclidean norm of an acceleration triple.

    Parameters
    ----------
    sample : array_like
        (3,) triple, or (N, 3) array of triples.

    Returns
    -------
    float or numpy.ndarray
        Vector magnitude in g.
    """
    arr = np.asarray(sample, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ShapeError(f"expected trailing dimension 3, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidSampleError("non-finite acceleration component")
    vm = np.sqrt(np.einsum("...i,...i->...", arr, arr))
    return float(vm) if vm.ndim == 0 else vm


def vm_count(signal, center, tau):
    """
    Mean absolute deviation of the vector magnitude from 1 g.

    The window holds `tau` samples, ``[center - tau // 2, center - tau // 2 + tau)``.

    Parameters
    ----------
    signal : TriaxialSignal
    center : int
        Sample index of the window center.
    tau : int
        Window length in samples.

    Returns
    -------
    float
    """
    if tau < 1:
        raise ConfigurationError(f"tau must be >= 1, got {tau}")
    lo = center - tau // 2
    hi = lo + tau
    if lo < 0 or hi > len(signal):
        raise BoundaryError(f"window [{lo}, {hi}) outside signal of length {len(signal)}")
    vm = vector_magnitude(signal.samples[lo:hi])
    return float(np.mean(np.abs(vm - 1.0)))


def epoch_vm_series(signal):
    """
    Per-second vector-magnitude counts.

    Each epoch averages ``|vm - 1|`` over its own `f0` samples; a partial
    trailing epoch is dropped.

    Returns
    -------
    numpy.ndarray
        (n_epochs,) array of counts, in g.
    """
    n_epochs = EpochGrid.for_signal(signal).n_epochs
    if n_epochs == 0:
        return np.zeros(0)
    return _backend.kernels.epoch_vm(signal.samples[: n_epochs * signal.f0], signal.f0)

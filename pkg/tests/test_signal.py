import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from shwalk.errors import BoundaryError, ConfigurationError, InvalidSampleError
from shwalk.signal import EpochGrid, TriaxialSignal, epoch_vm_series, vector_magnitude, vm_count


@pytest.mark.parametrize("sample,expected", [((1, 0, 0), 1.0), ((0, 0, 0), 0.0), ((0.6, 0.8, 0.0), 1.0)])
def test_vector_magnitude_examples(sample, expected):
    assert vector_magnitude(sample) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("bad", [(np.nan, 0, 0), (0, np.inf, 0)])
def test_vector_magnitude_rejects_non_finite(bad):
    with pytest.raises(InvalidSampleError):
        vector_magnitude(bad)


_ACCEL = st.one_of(st.just(0.0), st.floats(1e-100, 1e6), st.floats(-1e6, -1e-100))


@given(arrays(np.float64, (20, 3), elements=_ACCEL))
def test_vector_magnitude_matches_hypot(x):
    vm = vector_magnitude(x)
    assert np.all(vm >= 0)
    np.testing.assert_allclose(vm, np.hypot(np.hypot(x[:, 0], x[:, 1]), x[:, 2]), rtol=1e-12)


def test_vm_count_examples():
    ones = TriaxialSignal(np.tile([1.0, 0, 0], (100, 1)), 10)
    zeros = TriaxialSignal(np.zeros((100, 3)), 10)
    alt = np.zeros((100, 3))
    alt[::2, 0] = 2.0
    alt = TriaxialSignal(alt, 10)
    assert vm_count(ones, 50, 20) == 0.0
    assert vm_count(zeros, 50, 20) == 1.0
    assert vm_count(alt, 50, 20) == 1.0


def test_vm_count_boundary():
    sig = TriaxialSignal(np.zeros((100, 3)), 10)
    with pytest.raises(BoundaryError):
        vm_count(sig, 5, 20)
    with pytest.raises(BoundaryError):
        vm_count(sig, 95, 20)


def test_epoch_vm_series_matches_loop(backend):
    rng = np.random.default_rng(1)
    x = rng.normal(0, 0.5, (50 * 7 + 13, 3))
    sig = TriaxialSignal(x, 50)
    got = epoch_vm_series(sig)
    expected = [np.mean([abs(np.sqrt(sum(v * v for v in row)) - 1) for row in x[e * 50:(e + 1) * 50]])
                for e in range(7)]
    np.testing.assert_allclose(got, expected, rtol=1e-12)


def test_epoch_vm_series_empty():
    assert epoch_vm_series(TriaxialSignal(np.zeros((49, 3)), 50)).size == 0


def test_epoch_grid():
    assert EpochGrid(n_samples=149, f0=50).n_epochs == 2
    assert EpochGrid.for_signal(TriaxialSignal(np.zeros((150, 3)), 50)).n_epochs == 3


@pytest.mark.parametrize("f0", [0, -5, 2.5])
def test_signal_rejects_bad_f0(f0):
    with pytest.raises(ConfigurationError):
        TriaxialSignal(np.zeros((10, 3)), f0)


def test_signal_rejects_non_finite_and_bad_shape():
    x = np.zeros((10, 3))
    x[3, 1] = np.nan
    with pytest.raises(InvalidSampleError):
        TriaxialSignal(x, 10)
    with pytest.raises(ValueError):
        TriaxialSignal(np.zeros((10, 2)), 10)


@settings(max_examples=25)
@given(st.floats(0.01, 100))
def test_vm_nonnegative_for_scaled_signal(c):
    x = np.random.default_rng(0).normal(size=(200, 3))
    sig = TriaxialSignal(x, 50).scaled(c)
    assert np.all(epoch_vm_series(sig) >= 0)

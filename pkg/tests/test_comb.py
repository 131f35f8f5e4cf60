import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shwalk.comb import (
    DetectionParams,
    build_comb,
    comb_bank,
    decide_window,
    score,
    score_block,
    score_matrix,
    spectrum_areas,
)
from shwalk.errors import ConfigurationError, GridError, ShapeError
from shwalk.spectral import FrequencyGrid, Spectrum, WindowConfig, window_spectrum

from conftest import sinusoid_signal

GRID = FrequencyGrid(50, 10, 1)


def _teeth_hz(comb):
    return [sorted(round(float(comb.grid.frequency(b)), 4) for b in tooth) for tooth in comb.teeth]


def _oracle_teeth(s, n_m, grid, mode="points", orders=None):
    """Tooth frequencies by direct enumeration on the frequency axis."""
    half = 1.0 / grid.tau_s
    freqs = grid.frequencies
    out = []
    for l in orders or range(2, n_m + 1):
        c = l * s / 2
        if c > grid.f_nyquist + 1e-9:
            continue
        if mode == "points":
            # centre rounded up to a bin when it falls half-way
            kc = int(np.floor(c * grid.bins_per_hz + 0.5 + 1e-9))
            cand = [freqs[kc] - half, freqs[kc], freqs[kc] + half]
        else:
            cand = freqs[np.abs(freqs - c) <= half + 1e-9]
        tooth = sorted(round(float(f), 4) for f in cand if half - 1e-9 <= f <= grid.f_nyquist + 1e-9)
        if tooth:
            out.append(tooth)
    return out


def test_comb_at_two_hz():
    comb = build_comb(2.0, DetectionParams(), GRID)
    assert comb.centers_hz == pytest.approx((2.0, 3.0, 4.0, 5.0, 6.0))
    expected = [[c - 0.1, c, c + 0.1] for c in (2.0, 3.0, 4.0, 5.0, 6.0)]
    np.testing.assert_allclose(_teeth_hz(comb), expected, atol=1e-9)
    assert comb.tooth_halfwidth_hz == pytest.approx(0.1)


def test_comb_fig3_tooth_on_padded_grid():
    grid = FrequencyGrid(50, 10, 3)
    comb = build_comb(2.067, DetectionParams(), grid)
    first = {round(float(f), 3) for f in grid.frequency(np.asarray(comb.teeth[0]))}
    assert first == {1.967, 2.067, 2.167}
    assert comb.centers_hz[1] == pytest.approx(3.10, abs=1e-3)


def test_comb_nyquist_clipping():
    comb = build_comb(4.0, DetectionParams(n_m=17), GRID)
    assert len(comb.teeth) == 11  # centres 4, 6, ..., 24 Hz
    assert max(comb.centers_hz) == pytest.approx(24.0)
    assert max(comb.frequencies) <= 25.0


def test_prose_mode_adds_one_tooth():
    a = build_comb(2.0, DetectionParams(), GRID)
    b = build_comb(2.0, DetectionParams(teeth_count_mode="prose"), GRID)
    assert len(b.teeth) == len(a.teeth) + 1 == 6


@pytest.mark.parametrize("s", [0.5, 2.05, 4.5])
def test_build_comb_errors(s):
    with pytest.raises(GridError):
        build_comb(s, DetectionParams(), GRID)


@pytest.mark.parametrize("tau,pad,mode", list(itertools.product([4, 10, 15], [1, 2, 3], ["points", "band"])))
def test_comb_matches_enumeration(tau, pad, mode):
    grid = FrequencyGrid(50, tau, pad)
    params = DetectionParams(n_m=9, tooth_mode=mode)
    for k in comb_bank(grid, params).candidate_bins:
        s = float(grid.frequency(k))
        comb = build_comb(s, params, grid)
        assert _teeth_hz(comb) == _oracle_teeth(s, 9, grid, mode)
        assert all(b >= pad for b in comb.bins)


def test_band_mode_width_at_pad_one():
    comb = build_comb(2.0, DetectionParams(tooth_mode="band"), GRID)
    assert all(len(t) == 3 for t in comb.teeth)


def test_spectrum_areas_examples():
    comb = build_comb(2.0, DetectionParams(), GRID)
    zero = Spectrum(np.zeros(GRID.n_bins), GRID, 0)
    assert spectrum_areas(zero, comb) == (0.0, 0.0)
    inside = np.zeros(GRID.n_bins)
    inside[list(comb.bins)] = 1.0
    total, c = spectrum_areas(Spectrum(inside, GRID, 0), comb)
    assert total == c > 0
    one = np.zeros(GRID.n_bins)
    one[100] = 1.0
    assert spectrum_areas(Spectrum(one, GRID, 0), comb) == (pytest.approx(0.1), 0.0)
    with pytest.raises(ShapeError):
        spectrum_areas(Spectrum(np.zeros(10), GRID, 0), comb)


def test_score_examples():
    comb = build_comb(2.0, DetectionParams(), GRID)
    m = np.zeros(GRID.n_bins)
    m[20] = 0.5  # 2.0 Hz, inside
    m[100] = 0.5  # 10 Hz, outside
    assert score(Spectrum(m, GRID, 0), comb) == pytest.approx(1.0)
    m[20] = 0
    assert score(Spectrum(m, GRID, 0), comb) == 0.0
    assert score(Spectrum(np.zeros(GRID.n_bins), GRID, 0), comb) == 0.0
    only = np.zeros(GRID.n_bins)
    only[20] = 1.0
    assert score(Spectrum(only, GRID, 0), comb, cap=1e9) == 1e9


def test_true_fundamental_beats_wrong_one():
    sig = sinusoid_signal([(2.0, 1.0)], 10, noise_sd=np.sqrt(0.05), seed=11)
    spec = window_spectrum(sig.samples[:, 2], WindowConfig(), 50)
    p = DetectionParams()
    assert score(spec, build_comb(2.0, p, GRID)) > score(spec, build_comb(2.8, p, GRID))


def _tri(sig, start=0, config=WindowConfig()):
    tau = config.tau(sig.f0)
    return [window_spectrum(sig.samples[start:start + tau, k], config, sig.f0, start) for k in range(3)]


def test_constant_axes_not_walking():
    sig = sinusoid_signal([], 10)
    d = decide_window(_tri(sig), DetectionParams())
    assert d.max_score == 0.0 and not d.is_walking


def test_walk_on_one_axis_and_scaling():
    sig = sinusoid_signal([(2.0, 0.3), (3.0, 0.15), (4.0, 0.05)], 10, noise_sd=0.02, seed=2, axis=0)
    d = decide_window(_tri(sig), DetectionParams())
    assert d.is_walking and abs(d.s_hat - 2.0) <= 0.1 + 1e-9
    d10 = decide_window(_tri(sig.scaled(10)), DetectionParams())
    assert (d10.is_walking, d10.s_hat, d10.best_axis) == (d.is_walking, d.s_hat, d.best_axis)
    assert d10.max_score == pytest.approx(d.max_score, rel=1e-9)


def test_ties_go_to_lowest_frequency():
    # no spectral mass: every candidate scores 0
    sig = sinusoid_signal([], 10)
    assert decide_window(_tri(sig), DetectionParams()).s_hat == pytest.approx(1.2)


def test_empty_candidate_range():
    with pytest.raises(ConfigurationError):
        comb_bank(FrequencyGrid(50, 2, 1), DetectionParams(f_min=1.2, f_max=1.4))


def _brute_force(mags, grid, params):
    """Best score per window by calling score() on every (window, candidate, axis)."""
    combs = [build_comb(float(grid.frequency(k)), params, grid)
             for k in comb_bank(grid, params).candidate_bins]
    out = []
    for w in range(mags.shape[0]):
        best = (-1.0, None, None)
        for c, comb in enumerate(combs):
            for k in range(3):
                y = score(Spectrum(mags[w, k], grid, 0), comb, params.score_cap)
                if y > best[0]:
                    best = (y, c, k)
        out.append(best)
    return out


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]), st.integers(2, 8))
def test_score_block_matches_brute_force(seed, pad, n_m):
    grid = FrequencyGrid(20, 5, pad)
    params = DetectionParams(n_m=n_m, f_max=3.0)
    rng = np.random.default_rng(seed)
    mags = rng.exponential(size=(4, 3, grid.n_bins))
    mags[rng.random(mags.shape) < 0.3] = 0.0
    mags[..., 0] = 0.0
    mags[0] = 0.0
    bank = comb_bank(grid, params)
    from shwalk import _backend
    kernels = [_backend.python_kernels] + ([_backend.compiled_kernels()] if _backend.compiled_kernels() else [])
    expected = _brute_force(mags, grid, params)
    for kern in kernels:
        best, cand, axis = kern.score_windows(mags, bank.index, params.score_cap)
        for w, (y, c, k) in enumerate(expected):
            assert best[w] == pytest.approx(y, rel=1e-12, abs=1e-15)
            assert cand[w] == c
            assert axis[w] == k


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations([0, 1, 2]))
def test_axis_permutation_invariance(seed, perm):
    rng = np.random.default_rng(seed)
    mags = rng.exponential(size=(3, 3, GRID.n_bins))
    mags[..., 0] = 0
    bank = comb_bank(GRID, DetectionParams())
    a = score_block(mags, bank)
    b = score_block(mags[:, list(perm)], bank)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_comb_area_bounded_by_total(seed):
    rng = np.random.default_rng(seed)
    params = DetectionParams()
    m = rng.exponential(size=GRID.n_bins)
    for k in comb_bank(GRID, params).candidate_bins[::4]:
        comb = build_comb(float(GRID.frequency(k)), params, GRID)
        total, c = spectrum_areas(Spectrum(m, GRID, 0), comb)
        assert 0 <= c <= total


def test_score_matrix_consistent_with_block():
    rng = np.random.default_rng(0)
    mags = rng.exponential(size=(5, 3, GRID.n_bins))
    bank = comb_bank(GRID, DetectionParams())
    y = score_matrix(mags, bank)
    best, cand, _ = score_block(mags, bank)
    np.testing.assert_allclose(y.max(axis=(1, 2)), best, rtol=1e-12)
    np.testing.assert_array_equal(y.max(axis=1).argmax(axis=1), cand)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.floats(0.01, 1.0), min_size=2, max_size=2, unique=True))
def test_threshold_monotone_per_window(seed, deltas):
    lo, hi = sorted(deltas)
    sig = sinusoid_signal([(1.8, 0.1)], 10, noise_sd=0.1, seed=seed % 1000)
    a = decide_window(_tri(sig), DetectionParams(delta=lo))
    b = decide_window(_tri(sig), DetectionParams(delta=hi))
    assert a.is_walking >= b.is_walking


@pytest.mark.parametrize("kwargs", [dict(delta=0), dict(f_min=0), dict(f_min=3, f_max=2), dict(n_m=1),
                                    dict(teeth_count_mode="x"), dict(tooth_mode="x")])
def test_params_validation(kwargs):
    with pytest.raises(ConfigurationError):
        DetectionParams(**kwargs)


def test_f_max_above_nyquist_rejected():
    with pytest.raises(ConfigurationError):
        comb_bank(FrequencyGrid(6, 10, 1), DetectionParams())

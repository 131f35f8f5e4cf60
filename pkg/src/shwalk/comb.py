"""
Harmonic comb scoring of window spectra.

For a candidate fundamental ``s`` the comb has teeth centred at ``l * s / 2``
for ``l = 2 .. n_m``. Each tooth covers the centre bin and the bins one
``1 / tau_s`` step either side. A window's periodicity score for ``s`` on one
axis is the spectral area under the comb divided by the area outside it.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from shwalk import _backend
from shwalk.errors import ConfigurationError, GridError, ShapeError
from shwalk.spectral import FrequencyGrid, Spectrum

__all__ = [
    "DetectionParams",
    "CombSpec",
    "CombBank",
    "WindowDecision",
    "build_comb",
    "comb_bank",
    "spectrum_areas",
    "score",
    "decide_window",
    "score_block",
]

TEETH_COUNT_MODES = ("formula", "prose")
TOOTH_MODES = ("points", "band")


@dataclass(frozen=True)
class DetectionParams:
    """
    Thresholding and comb parameters.

    Parameters
    ----------
    delta : float
        A window is walking when its best score exceeds `delta`.
    f_min, f_max : float
        Candidate fundamental range, in Hz.
    n_m : int
        Harmonic count; teeth run over ``l = 2 .. n_m`` ('formula') or
        ``l = 2 .. n_m + 1`` ('prose', i.e. exactly n_m teeth).
    teeth_count_mode : {'formula', 'prose'}
    tooth_mode : {'points', 'band'}
        'points' uses the three grid points ``c - 1/tau_s, c, c + 1/tau_s``;
        'band' uses every bin within ``1/tau_s`` of ``c``. Identical when
        ``pad_factor == 1``.
    score_cap : float
        Finite stand-in for an infinite score (all mass inside the comb).
    """

    delta: float = 0.115
    f_min: float = 1.2
    f_max: float = 4.0
    n_m: int = 6
    teeth_count_mode: str = "formula"
    tooth_mode: str = "points"
    score_cap: float = 1e9

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError(f"delta must be > 0, got {self.delta}")
        if not 0 < self.f_min < self.f_max:
            raise ConfigurationError("need 0 < f_min < f_max")
        if isinstance(self.n_m, bool) or int(self.n_m) != self.n_m or self.n_m < 2:
            raise ConfigurationError(f"n_m must be an integer >= 2, got {self.n_m}")
        if self.teeth_count_mode not in TEETH_COUNT_MODES:
            raise ConfigurationError(f"teeth_count_mode must be one of {TEETH_COUNT_MODES}")
        if self.tooth_mode not in TOOTH_MODES:
            raise ConfigurationError(f"tooth_mode must be one of {TOOTH_MODES}")
        if not self.score_cap > 0:
            raise ConfigurationError("score_cap must be > 0")

    @property
    def harmonic_orders(self):
        top = self.n_m if self.teeth_count_mode == "formula" else self.n_m + 1
        return range(2, top + 1)

    def check_grid(self, grid):
        if self.f_max > grid.f_nyquist:
            raise ConfigurationError(f"f_max {self.f_max} exceeds Nyquist {grid.f_nyquist}")


@dataclass(frozen=True)
class CombSpec:
    """Comb support for one candidate fundamental."""

    s: float
    n_m: int
    tooth_halfwidth_hz: float
    bins: tuple
    teeth: tuple  # one tuple of bin indices per retained tooth
    centers_hz: tuple
    grid: FrequencyGrid

    @property
    def frequencies(self):
        return self.grid.frequency(np.asarray(self.bins))


@dataclass(frozen=True)
class WindowDecision:
    window_start: int
    max_score: float
    s_hat: float
    is_walking: bool
    best_axis: int


def _tooth_bins(center2, grid, params):
    """Bins of a tooth whose centre is at ``center2 / 2`` bins."""
    pad = grid.pad_factor
    lo_bin, hi_bin = pad, grid.n_bins - 1
    if params.tooth_mode == "points":
        # half-bin centres round up to the next bin
        c = (center2 + 1) // 2
        bins = (c - pad, c, c + pad)
    else:
        lo = -(-(center2 - 2 * pad) // 2)
        hi = (center2 + 2 * pad) // 2
        bins = range(lo, hi + 1)
    return tuple(b for b in bins if lo_bin <= b <= hi_bin)


def _build_comb_bin(k_s, params, grid):
    teeth = []
    centers = []
    for order in params.harmonic_orders:
        center2 = order * k_s
        if center2 > 2 * (grid.n_bins - 1):
            continue  # centre above Nyquist
        bins = _tooth_bins(center2, grid, params)
        if bins:
            teeth.append(bins)
            centers.append(center2 / (2 * grid.bins_per_hz))
    support = tuple(sorted(set(b for tooth in teeth for b in tooth)))
    return CombSpec(
        s=float(grid.frequency(k_s)),
        n_m=params.n_m,
        tooth_halfwidth_hz=1.0 / grid.tau_s,
        bins=support,
        teeth=tuple(teeth),
        centers_hz=tuple(centers),
        grid=grid,
    )


def build_comb(s, params, grid):
    """
    Comb support for candidate fundamental `s`.

    Parameters
    ----------
    s : float
        Candidate fundamental in Hz; must lie on `grid` and in
        ``[params.f_min, params.f_max]``.
    params : DetectionParams
    grid : FrequencyGrid

    Returns
    -------
    CombSpec
    """
    k_s = grid.bin_of(s)
    if k_s is None:
        raise GridError(f"{s} Hz is not on the {grid.bin_hz:.6g} Hz grid")
    if not params.f_min - 5e-4 <= s <= params.f_max + 5e-4:
        raise GridError(f"{s} Hz outside candidate range [{params.f_min}, {params.f_max}]")
    return _build_comb_bin(k_s, params, grid)


@dataclass(frozen=True)
class CombBank:
    """Every candidate comb for one (grid, params) pair, packed for the kernels."""

    grid: FrequencyGrid
    params: DetectionParams
    candidate_bins: np.ndarray  # (C,) fundamental bin per candidate
    combs: tuple
    index: np.ndarray  # (C, width) int64 comb bins, right-padded with -1

    @property
    def candidates_hz(self):
        return self.grid.frequency(self.candidate_bins)


@lru_cache(maxsize=64)
def comb_bank(grid, params):
    """Precompute combs for every grid bin in ``[f_min, f_max]``."""
    params.check_grid(grid)
    eps = 1e-9
    k_lo = int(np.ceil(params.f_min * grid.bins_per_hz - eps))
    k_hi = int(np.floor(params.f_max * grid.bins_per_hz + eps))
    if k_hi < k_lo:
        raise ConfigurationError("no grid frequency inside [f_min, f_max]")
    cand = np.arange(k_lo, k_hi + 1, dtype=np.int64)
    combs = tuple(_build_comb_bin(int(k), params, grid) for k in cand)
    width = max(len(c.bins) for c in combs)
    index = np.full((cand.size, width), -1, dtype=np.int64)
    for i, c in enumerate(combs):
        index[i, : len(c.bins)] = c.bins
    cand.setflags(write=False)
    index.setflags(write=False)
    return CombBank(grid, params, cand, combs, index)


def _check_spectrum(spec, comb):
    if spec.magnitudes.ndim != 1 or spec.magnitudes.size != comb.grid.n_bins:
        raise ShapeError(
            f"spectrum has {spec.magnitudes.size} bins, comb grid expects {comb.grid.n_bins}"
        )


def spectrum_areas(spec, comb):
    """
    Total and comb-covered area of a spectrum.

    Returns
    -------
    (float, float)
        ``(IS_total, IS_comb)``, each a bin sum times ``bin_hz``.
    """
    _check_spectrum(spec, comb)
    if spec.grid != comb.grid:
        raise ShapeError("spectrum and comb are on different grids")
    mags = spec.magnitudes
    total = float(mags.sum()) * spec.bin_hz
    in_comb = float(mags[list(comb.bins)].sum()) * spec.bin_hz if comb.bins else 0.0
    return total, min(in_comb, total)


def score(spec, comb, cap=1e9):
    """
    Periodicity score: comb area over the area outside the comb.

    Zero when the comb area is zero (including all-zero spectra); `cap`
    when all of the spectrum lies under the comb.
    """
    total, in_comb = spectrum_areas(spec, comb)
    if in_comb <= 0:
        return 0.0
    rest = total - in_comb
    if rest <= 0:
        return float(cap)
    return float(min(in_comb / rest, cap))


def score_block(mags, bank):
    """
    Best comb score per window for a batch of tri-axial spectra.

    Parameters
    ----------
    mags : numpy.ndarray
        (W, 3, n_bins) magnitudes on ``bank.grid``.
    bank : CombBank

    Returns
    -------
    max_score : numpy.ndarray
        (W,) maximum over candidates and axes.
    best_cand : numpy.ndarray
        (W,) index into ``bank.candidate_bins``; ties go to the lowest frequency.
    best_axis : numpy.ndarray
        (W,) axis attaining the maximum.
    """
    mags = np.ascontiguousarray(mags, dtype=np.float64)
    if mags.ndim != 3 or mags.shape[1:] != (3, bank.grid.n_bins):
        raise ShapeError(f"expected (W, 3, {bank.grid.n_bins}) magnitudes, got {mags.shape}")
    return _backend.kernels.score_windows(mags, bank.index, float(bank.params.score_cap))


def score_matrix(mags, bank):
    """Full (W, 3, C) score array; used for inspection and tuning."""
    return _backend.python_kernels.score_matrix(
        np.asarray(mags, dtype=np.float64), bank.index, float(bank.params.score_cap)
    )


def decide_window(tri_spectra, params):
    """
    Walking decision for one window.

    Parameters
    ----------
    tri_spectra : sequence of Spectrum
        One spectrum per axis, all on the same grid.
    params : DetectionParams

    Returns
    -------
    WindowDecision
    """
    if len(tri_spectra) != 3:
        raise ShapeError("need exactly three spectra")
    first = tri_spectra[0]
    grid = first.grid
    for sp in tri_spectra:
        if sp.grid != grid or sp.magnitudes.size != grid.n_bins:
            raise ShapeError("spectra do not share a grid")
    bank = comb_bank(grid, params)
    mags = np.stack([sp.magnitudes for sp in tri_spectra])[None]
    max_score, best, axis = score_block(mags, bank)
    s_hat = float(bank.candidates_hz[best[0]])
    return WindowDecision(
        window_start=first.window_start,
        max_score=float(max_score[0]),
        s_hat=s_hat,
        is_walking=bool(max_score[0] > params.delta),
        best_axis=int(axis[0]),
    )

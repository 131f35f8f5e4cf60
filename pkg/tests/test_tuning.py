import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import gaussian_kde

from shwalk.comb import DetectionParams
from shwalk.errors import InsufficientDataError
from shwalk.synth import SegmentSpec, generate
from shwalk.tuning import (
    DeltaEstimate,
    LabeledScoreSet,
    coefficient_of_variation,
    cv_study,
    delta_study,
    estimate_delta_population,
    estimate_delta_subject,
    log_kde,
    silverman_bandwidth,
)


def gaussian_intersection(m1, s1, m2, s2):
    """Crossing of two normal densities lying between the means."""
    a = 1 / (2 * s1**2) - 1 / (2 * s2**2)
    b = m2 / s2**2 - m1 / s1**2
    c = m1**2 / (2 * s1**2) - m2**2 / (2 * s2**2) - np.log(s2 / s1)
    roots = np.roots([a, b, c])
    return float(next(r.real for r in roots if m1 < r.real < m2))


def test_intersection_oracle_sanity():
    from scipy.stats import norm
    x = gaussian_intersection(0.05, 0.01, 0.25, 0.03)
    assert norm.pdf(x, 0.05, 0.01) == pytest.approx(norm.pdf(x, 0.25, 0.03), rel=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_two_gaussian_crossing(seed):
    rng = np.random.default_rng(seed)
    non = rng.normal(0.05, 0.01, 5000)
    walk = rng.normal(0.25, 0.03, 5000)
    est = estimate_delta_subject(LabeledScoreSet(walk, non))
    assert not est.degraded
    assert est.delta == pytest.approx(gaussian_intersection(0.05, 0.01, 0.25, 0.03), abs=0.01)


def test_point_masses_separate_perfectly():
    est = estimate_delta_subject(LabeledScoreSet(np.ones(40), np.zeros(40)))
    assert 0 < est.delta < 1


def test_identical_distributions_degraded():
    x = np.random.default_rng(5).gamma(2, 0.05, 200)
    est = estimate_delta_subject(LabeledScoreSet(x, x.copy()))
    assert est.degraded and est.delta == pytest.approx(np.median(x))


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        estimate_delta_subject(LabeledScoreSet(np.ones(29), np.zeros(100)))
    est = estimate_delta_subject(LabeledScoreSet(np.ones(5), np.zeros(5)), min_scores=5)
    assert isinstance(est, DeltaEstimate)


def test_silverman_bandwidth():
    x = np.random.default_rng(0).normal(size=400)
    sd = x.std(ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    assert silverman_bandwidth(x) == pytest.approx(0.9 * min(sd, iqr / 1.34) * 400 ** -0.2)
    assert silverman_bandwidth(np.ones(10)) == 0


def test_log_kde_matches_scipy():
    x = np.random.default_rng(1).normal(size=300)
    grid = np.linspace(-3, 3, 50)
    bw = silverman_bandwidth(x)
    ref = gaussian_kde(x, bw_method=bw / x.std(ddof=1))(grid)
    np.testing.assert_allclose(np.exp(log_kde(x, grid, bw)), ref, rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.5), st.floats(0.005, 0.1))
def test_delta_within_score_range(seed, shift, sd):
    rng = np.random.default_rng(seed)
    non = np.abs(rng.normal(0.08, sd, 60))
    walk = np.abs(rng.normal(0.08 + shift, sd, 60))
    est = estimate_delta_subject(LabeledScoreSet(walk, non))
    allv = np.concatenate([walk, non])
    assert allv.min() <= est.delta <= allv.max()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 2.0))
def test_separated_classes_zero_training_error(seed, gap):
    rng = np.random.default_rng(seed)
    non = rng.uniform(0.0, 0.1, 50)
    walk = rng.uniform(0.1 + gap, 0.2 + gap, 50)
    d = estimate_delta_subject(LabeledScoreSet(walk, non)).delta
    assert np.all(non <= d) and np.all(walk > d)


def test_population_median():
    assert estimate_delta_population([0.10, 0.115, 0.13]) == 0.115
    assert estimate_delta_population([0.2]) == 0.2
    assert estimate_delta_population([DeltaEstimate(0.3, False, 1)]) == 0.3
    with pytest.raises(InsufficientDataError):
        estimate_delta_population([])


@given(st.permutations([0.1, 0.2, 0.15, 0.4, 0.12]))
def test_population_permutation_invariant(vals):
    assert estimate_delta_population(vals) == 0.15


def test_coefficient_of_variation():
    assert coefficient_of_variation([2.0, 2.0, 2.0]) == 0.0
    assert coefficient_of_variation([2.0]) is None
    w = np.array([1.9, 2.0, 2.2, 2.1])
    assert coefficient_of_variation(w) == pytest.approx(w.std(ddof=1) / w.mean())
    assert coefficient_of_variation(3 * w) == pytest.approx(coefficient_of_variation(w))


def _walk_subject(seed, drift=0.0, wobble=0.0):
    specs = [SegmentSpec("rest", 30, noise_sd=0.01),
             SegmentSpec("harmonic_walk", 120, fundamental_hz=2.0, drift_hz_per_s=drift, wobble_hz=wobble,
                         wobble_period_s=30, noise_sd=0.0 if not (drift or wobble) else 0.02),
             SegmentSpec("rest", 30, noise_sd=0.01)]
    sig, labels = generate(specs, 50, seed)
    return f"S{seed}", sig, labels


def test_cv_study_constant_walk_and_cardinality():
    rows, curves = cv_study([_walk_subject(1)], range(2, 18))
    assert len(rows) == 16 and len(curves) == 16
    assert [r[1] for r in rows] == list(range(2, 18))
    assert all(r[2] == 0.0 for r in rows)


def test_cv_study_drifting_walk():
    rows, _ = cv_study([_walk_subject(2, wobble=0.1)], [4, 6])
    assert all(r[2] is not None and 0 < r[2] < 1 for r in rows)


def test_delta_study_rows():
    subjects = [_walk_subject(3, wobble=0.05), _walk_subject(4, wobble=0.05)]
    rows, pop = delta_study(subjects, [4, 6], base_params=DetectionParams())
    assert len(rows) == 4 and set(pop) == {4, 6}
    for n_m in (4, 6):
        vals = [r[2] for r in rows if r[1] == n_m]
        assert pop[n_m]["delta"] == pytest.approx(np.median(vals))
        assert pop[n_m]["count"] == 2

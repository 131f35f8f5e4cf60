"""
Parameter selection from labelled recordings.

The threshold is set per subject where the kernel density of walking scores
overtakes that of non-walking scores, and the population threshold is the
median over subjects. The harmonic count is studied through the coefficient
of variation of the walking frequency over a sustained walk; the default
``n_m = 6`` is kept fixed, the study only reports.
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from shwalk.comb import DetectionParams
from shwalk.errors import InsufficientDataError
from shwalk.evaluation import per_second_truth
from shwalk.pipeline import Detector

__all__ = [
    "LabeledScoreSet",
    "DeltaEstimate",
    "silverman_bandwidth",
    "log_kde",
    "estimate_delta_subject",
    "estimate_delta_population",
    "quartile_summary",
    "score_sets",
    "delta_study",
    "cv_study",
    "coefficient_of_variation",
]

KDE_GRID_POINTS = 512
MIN_SCORES = 30


@dataclass(frozen=True)
class LabeledScoreSet:
    walking_scores: np.ndarray
    nonwalking_scores: np.ndarray
    subject_id: str = ""


@dataclass(frozen=True)
class DeltaEstimate:
    delta: float
    degraded: bool
    n_crossings: int
    subject_id: str = ""


def silverman_bandwidth(x):
    """
    Silverman's rule of thumb, ``0.9 * min(sd, IQR / 1.34) * n ** -0.2``.

    Falls back to the standard deviation when the IQR is zero. Returns 0 for
    a sample with no spread.
    """
    x = np.asarray(x, dtype=np.float64)
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    return 0.9 * spread * x.size ** -0.2


def log_kde(samples, grid, bandwidth):
    """Log of a Gaussian kernel density estimate evaluated on `grid`."""
    samples = np.asarray(samples, dtype=np.float64)
    z = (np.asarray(grid)[:, None] - samples[None, :]) / bandwidth
    return logsumexp(-0.5 * z * z, axis=1) - np.log(samples.size * bandwidth * np.sqrt(2 * np.pi))


def _misclassified(walk, non, delta):
    return int(np.count_nonzero(non > delta) + np.count_nonzero(walk <= delta))


def estimate_delta_subject(score_set, grid_points=KDE_GRID_POINTS, min_scores=MIN_SCORES):
    """
    Threshold at the crossing of the walking and non-walking score densities.

    Only crossings where the non-walking density dominates below and the
    walking density above are considered; among several the one with the
    fewest training misclassifications wins (lowest on ties). With no such
    crossing the midpoint of the class medians is returned, flagged degraded.

    Parameters
    ----------
    score_set : LabeledScoreSet
    grid_points : int
    min_scores : int
        Minimum scores per class.

    Returns
    -------
    DeltaEstimate
    """
    walk = np.asarray(score_set.walking_scores, dtype=np.float64)
    non = np.asarray(score_set.nonwalking_scores, dtype=np.float64)
    if walk.size < min_scores or non.size < min_scores:
        raise InsufficientDataError(
            f"need {min_scores} scores per class, got {walk.size} walking / {non.size} non-walking"
        )
    lo = min(walk.min(), non.min())
    hi = max(walk.max(), non.max())
    fallback = 0.5 * (np.median(walk) + np.median(non))
    if hi <= lo:
        return DeltaEstimate(float(fallback), True, 0, score_set.subject_id)
    grid = np.linspace(lo, hi, grid_points)
    floor = 0.01 * (hi - lo)  # zero-spread classes
    bw_walk = silverman_bandwidth(walk) or floor
    bw_non = silverman_bandwidth(non) or floor
    diff = log_kde(walk, grid, bw_walk) - log_kde(non, grid, bw_non)

    nz = np.flatnonzero(diff != 0)
    crossings = []
    for i, k in zip(nz[:-1], nz[1:]):
        if diff[i] < 0 < diff[k]:
            if k == i + 1:
                x = grid[i] + (grid[k] - grid[i]) * (-diff[i]) / (diff[k] - diff[i])
            else:
                x = 0.5 * (grid[i + 1] + grid[k - 1])
            crossings.append(float(x))
    if not crossings:
        return DeltaEstimate(float(fallback), True, 0, score_set.subject_id)
    errors = [_misclassified(walk, non, x) for x in crossings]
    best = crossings[int(np.argmin(errors))]
    return DeltaEstimate(float(min(max(best, lo), hi)), False, len(crossings), score_set.subject_id)


def estimate_delta_population(deltas):
    """Median of subject thresholds."""
    vals = [d.delta if isinstance(d, DeltaEstimate) else d for d in deltas]
    vals = np.asarray([v for v in vals if v is not None], dtype=np.float64)
    if vals.size == 0:
        raise InsufficientDataError("no subject thresholds")
    return float(np.median(vals))


def quartile_summary(values):
    """Box-plot numbers for a set of values."""
    v = np.asarray([x for x in values if x is not None and not np.isnan(x)], dtype=np.float64)
    if v.size == 0:
        return {"count": 0}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"count": int(v.size), "min": float(v.min()), "q1": float(q1), "median": float(med),
            "q3": float(q3), "max": float(v.max())}


def score_sets(subjects, config=None, params_list=None, threads=1):
    """
    Per-second fused scores split by truth, for each subject and parameter set.

    Parameters
    ----------
    subjects : iterable of (subject_id, TriaxialSignal, LabelTrack)
    params_list : sequence of DetectionParams

    Yields
    ------
    subject_id, list of (DetectionParams, LabeledScoreSet, DetectionResult, truth)
    """
    params_list = list(params_list or [DetectionParams()])
    for sid, signal, labels in subjects:
        results = Detector(config, params_list, threads=threads).run(signal)
        out = []
        for p, res in zip(params_list, results):
            truth = per_second_truth(labels, len(res.epochs))
            sc = res.epochs.score
            out.append((p, LabeledScoreSet(sc[truth == 1], sc[truth == 0], sid), res, truth))
        yield sid, out


def _nm_params(base, n_m_range):
    return [replace(base, n_m=int(n)) for n in n_m_range]


def delta_study(subjects, n_m_range=range(2, 18), config=None, base_params=None, threads=1,
                min_scores=MIN_SCORES):
    """
    Subject thresholds for every harmonic count.

    Returns
    -------
    rows : list of (subject_id, n_m, delta or None, degraded)
    population : dict
        ``n_m -> {"delta": median, **quartile_summary}``
    """
    base = base_params or DetectionParams()
    plist = _nm_params(base, n_m_range)
    rows = []
    for sid, items in score_sets(subjects, config, plist, threads):
        for p, sset, _, _ in items:
            try:
                est = estimate_delta_subject(sset, min_scores=min_scores)
                rows.append((sid, p.n_m, est.delta, est.degraded))
            except InsufficientDataError:
                rows.append((sid, p.n_m, None, True))
    population = {}
    for p in plist:
        vals = [r[2] for r in rows if r[1] == p.n_m and r[2] is not None]
        summary = quartile_summary(vals)
        summary["delta"] = estimate_delta_population(vals) if vals else None
        population[p.n_m] = summary
    return rows, population


def coefficient_of_variation(w):
    """Sample sd over mean; None for fewer than two values."""
    w = np.asarray(w, dtype=np.float64)
    w = w[~np.isnan(w)]
    if w.size < 2:
        return None
    return float(w.std(ddof=1) / w.mean())


def cv_study(subjects, n_m_range=range(2, 18), config=None, base_params=None, threads=1):
    """
    Coefficient of variation of the walking frequency over labelled walking.

    For each subject and harmonic count, detection runs over the recording
    and the CV is taken over seconds that are both labelled walking and
    detected walking.

    Returns
    -------
    rows : list of (subject_id, n_m, cv or None)
    curves : list of (n_m, mean_cv, median_cv)
        Across-subject mean and median, ignoring absent cells.
    """
    base = base_params or DetectionParams()
    plist = _nm_params(base, n_m_range)
    rows = []
    for sid, items in score_sets(subjects, config, plist, threads):
        for p, _, res, truth in items:
            ep = res.epochs
            sel = (truth == 1) & (ep.y != 0)
            rows.append((sid, p.n_m, coefficient_of_variation(ep.w[sel])))
    curves = []
    for p in plist:
        vals = [r[2] for r in rows if r[1] == p.n_m and r[2] is not None]
        if vals:
            curves.append((p.n_m, float(np.mean(vals)), float(np.median(vals))))
        else:
            curves.append((p.n_m, None, None))
    return rows, curves

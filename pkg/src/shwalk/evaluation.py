"""
Evaluation against interval labels: per-second ROC curves and overlap
between two label tracks.
"""
from dataclasses import dataclass, field

import numpy as np

from shwalk.errors import ConfigurationError, UndefinedROCError

__all__ = ["LabelTrack", "RocResult", "per_second_truth", "roc_curve", "label_overlap"]

WALKING_LABELS = frozenset({"walking", "walk", "shw"})
NONWALKING = "nonwalking"
SOURCES = ("observer", "corrected")


@dataclass(frozen=True)
class LabelTrack:
    """
    Ordered, non-overlapping labelled intervals in seconds from recording start.

    Any label in `walking_labels` counts as walking; every other label,
    including activity names, counts as non-walking.
    """

    intervals: tuple = ()
    source: str = "observer"
    walking_labels: frozenset = field(default=WALKING_LABELS, compare=False)

    def __post_init__(self):
        ivs = tuple((float(a), float(b), str(lab)) for a, b, lab in self.intervals)
        for a, b, _ in ivs:
            if not a < b:
                raise ConfigurationError(f"interval start {a} must be < end {b}")
        for (_, b0, _), (a1, _, _) in zip(ivs[:-1], ivs[1:]):
            if a1 < b0:
                raise ConfigurationError("intervals must be ordered and non-overlapping")
        if self.source not in SOURCES:
            raise ConfigurationError(f"source must be one of {SOURCES}")
        object.__setattr__(self, "intervals", ivs)

    def is_walking_label(self, label):
        return label.lower() in self.walking_labels

    @property
    def end_s(self):
        return self.intervals[-1][1] if self.intervals else 0.0

    @property
    def walking_seconds_total(self):
        return sum(b - a for a, b, lab in self.intervals if self.is_walking_label(lab))

    def walking_mask(self, n_seconds=None):
        """Boolean per-second walking indicator (a second counts by its midpoint)."""
        truth = per_second_truth(self, n_seconds)
        return truth == 1

    def walking_runs(self):
        """Merged walking intervals as (start_s, end_s) pairs."""
        runs = []
        for a, b, lab in self.intervals:
            if not self.is_walking_label(lab):
                continue
            if runs and runs[-1][1] == a:
                runs[-1] = (runs[-1][0], b)
            else:
                runs.append((a, b))
        return runs


def per_second_truth(track, n_seconds=None):
    """
    Per-second labels: 1 walking, 0 non-walking, -1 unlabelled.

    Second ``e`` takes the label of the interval containing ``e + 0.5``.
    """
    if n_seconds is None:
        n_seconds = int(np.ceil(track.end_s))
    truth = np.full(n_seconds, -1, dtype=np.int8)
    mid = np.arange(n_seconds) + 0.5
    for a, b, lab in track.intervals:
        lo = np.searchsorted(mid, a, side="left")
        hi = np.searchsorted(mid, b, side="left")
        truth[lo:hi] = 1 if track.is_walking_label(lab) else 0
    return truth


@dataclass
class RocResult:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    n_positive: int
    n_negative: int


def roc_curve(scores, truth):
    """
    ROC curve of per-second scores against truth.

    Parameters
    ----------
    scores : array_like
        Per-second scores (e.g. the fused epoch score).
    truth : LabelTrack or array_like
        A label track, or per-second labels (1, 0, or -1 to exclude).

    Returns
    -------
    RocResult
        Points for thresholds ``+inf``, every distinct score in decreasing
        order, and ``-inf``; a second is positive when ``score >= threshold``.
        AUC by the trapezoid rule.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if isinstance(truth, LabelTrack):
        truth = per_second_truth(truth, scores.size)
    truth = np.asarray(truth)
    n = min(scores.size, truth.size)
    scores, truth = scores[:n], truth[:n]
    keep = truth >= 0
    scores, labels = scores[keep], truth[keep] == 1
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedROCError("truth must contain both walking and non-walking seconds")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    l_sorted = labels[order]
    tp = np.cumsum(l_sorted)
    fp = np.cumsum(~l_sorted)
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s_sorted.size - 1]
    thresholds = np.r_[np.inf, s_sorted[last], -np.inf]
    tpr = np.r_[0.0, tp[last] / n_pos, 1.0]
    fpr = np.r_[0.0, fp[last] / n_neg, 1.0]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocResult(thresholds, fpr, tpr, auc, n_pos, n_neg)


OVERLAP_MODES = ("jaccard", "recall")


def label_overlap(a, b, mode="jaccard", n_seconds=None):
    """
    Agreement between the walking seconds of two label tracks.

    Parameters
    ----------
    a, b : LabelTrack or array_like of bool
    mode : {'jaccard', 'recall'}
        'jaccard' is ``|A & B| / |A | B|``; 'recall' is ``|A & B| / |B|``.
    n_seconds : int, optional
        Common span; defaults to the longer of the two tracks.

    Returns
    -------
    float
        In [0, 1]; 1.0 when both walking sets are empty, 0.0 for recall
        against an empty `b`.
    """
    if mode not in OVERLAP_MODES:
        raise ConfigurationError(f"mode must be one of {OVERLAP_MODES}")
    if n_seconds is None:
        n_seconds = max(_span(a), _span(b))
    ma, mb = _mask(a, n_seconds), _mask(b, n_seconds)
    inter = int(np.count_nonzero(ma & mb))
    denom = int(np.count_nonzero(ma | mb)) if mode == "jaccard" else int(np.count_nonzero(mb))
    if denom == 0:
        return 0.0 if (ma | mb).any() else 1.0
    return inter / denom


def _span(x):
    if isinstance(x, LabelTrack):
        return int(np.ceil(x.end_s))
    return np.asarray(x).size


def _mask(x, n):
    if isinstance(x, LabelTrack):
        return x.walking_mask(n)
    m = np.zeros(n, dtype=bool)
    x = np.asarray(x, dtype=bool)[:n]
    m[: x.size] = x
    return m

"""
Fusion of overlapping window decisions into per-second output, bout
extraction and daily summaries.

A window starting at second ``j * stride_s`` votes for the seconds it covers
(all ``tau_s`` of them under 'inclusive' coverage). A second is walking when
any covering window is walking; its walking frequency comes from the
highest-scoring covering walking window, the earliest one on ties.
"""
from dataclasses import dataclass

import numpy as np

from shwalk.errors import AlignmentError

__all__ = [
    "EpochRecord",
    "EpochTable",
    "Bout",
    "BoutSummary",
    "EpochFuser",
    "fuse_epochs",
    "extract_bouts",
    "summarize_bouts",
    "hourly_walking_matrix",
    "iwf_distribution",
    "DEFAULT_BAND_EDGES",
]

SECONDS_PER_DAY = 86400
DEFAULT_BAND_EDGES = (10.0, 30.0, 60.0)


@dataclass(frozen=True)
class EpochRecord:
    """One second of output: walking flag, walking frequency, vm count."""

    epoch_index: int
    y: int
    w: float | None
    v: float
    support_count: int = 0
    score: float = 0.0


@dataclass
class EpochTable:
    """Column-oriented sequence of epoch records."""

    epoch: np.ndarray
    y: np.ndarray
    w: np.ndarray  # NaN where y == 0
    v: np.ndarray
    support: np.ndarray
    score: np.ndarray

    def __len__(self):
        return self.epoch.size

    def __iter__(self):
        return self.records()

    def records(self):
        for i in range(len(self)):
            w = self.w[i]
            yield EpochRecord(
                int(self.epoch[i]),
                int(self.y[i]),
                None if np.isnan(w) else float(w),
                float(self.v[i]),
                int(self.support[i]),
                float(self.score[i]),
            )

    @classmethod
    def empty(cls):
        return cls(
            np.zeros(0, np.int64),
            np.zeros(0, np.int8),
            np.zeros(0),
            np.zeros(0),
            np.zeros(0, np.int32),
            np.zeros(0),
        )

    @classmethod
    def concat(cls, tables):
        tables = list(tables)
        if not tables:
            return cls.empty()
        return cls(*(np.concatenate([getattr(t, f) for t in tables]) for f in cls._fields()))

    @classmethod
    def from_records(cls, records):
        records = list(records)
        return cls(
            np.array([r.epoch_index for r in records], dtype=np.int64),
            np.array([r.y for r in records], dtype=np.int8),
            np.array([np.nan if r.w is None else r.w for r in records], dtype=np.float64),
            np.array([r.v for r in records], dtype=np.float64),
            np.array([r.support_count for r in records], dtype=np.int32),
            np.array([r.score for r in records], dtype=np.float64),
        )

    @staticmethod
    def _fields():
        return ("epoch", "y", "w", "v", "support", "score")

    @property
    def walking_seconds(self):
        return int(np.count_nonzero(self.y))


class EpochFuser:
    """
    Sequential fold from ordered window results to epoch results.

    Push consecutive blocks of window results with :meth:`push`; each call
    returns the epochs that no later window can cover. :meth:`finish` flushes
    the remainder. Only the last ``ceil(coverage / stride)`` windows are kept
    between calls.

    Parameters
    ----------
    config : spectral.WindowConfig
    params : comb.DetectionParams
    """

    def __init__(self, config, params):
        self.stride = config.stride_s
        self.cover = config.coverage_s
        self.delta = params.delta
        self.keep = -(-self.cover // self.stride)
        self._j0 = 0  # index of first retained window
        self._score = np.zeros(0)
        self._s_hat = np.zeros(0)
        self._next_epoch = 0

    @property
    def next_epoch(self):
        return self._next_epoch

    def push(self, first_window, max_score, s_hat):
        n_have = self._j0 + self._score.size
        if first_window != n_have:
            raise AlignmentError(f"expected window {n_have}, got {first_window}")
        self._score = np.concatenate([self._score, np.asarray(max_score, dtype=np.float64)])
        self._s_hat = np.concatenate([self._s_hat, np.asarray(s_hat, dtype=np.float64)])
        n_windows = self._j0 + self._score.size
        # windows >= n_windows start at or after this second
        ready = n_windows * self.stride
        out = self._fuse(self._next_epoch, ready)
        self._trim()
        return out

    def finish(self, n_epochs):
        if n_epochs < self._next_epoch:
            raise AlignmentError(f"{n_epochs} epochs but {self._next_epoch} already emitted")
        return self._fuse(self._next_epoch, n_epochs)

    def _trim(self):
        drop = max(self._score.size - self.keep, 0)
        if drop:
            self._score = self._score[drop:]
            self._s_hat = self._s_hat[drop:]
            self._j0 += drop

    def _fuse(self, e0, e1):
        n = max(e1 - e0, 0)
        epochs = np.arange(e0, e0 + n, dtype=np.int64)
        best_any = np.zeros(n)
        best_walk = np.full(n, -np.inf)
        w = np.full(n, np.nan)
        support = np.zeros(n, dtype=np.int32)
        j_end = self._j0 + self._score.size
        # earliest covering window first so strict '>' keeps it on ties
        for d in range(self.cover - 1, -1, -1):
            start = epochs - d
            j = start // self.stride
            ok = (start >= 0) & (start % self.stride == 0) & (j >= self._j0) & (j < j_end)
            if not ok.any():
                continue
            pos = np.where(ok, j - self._j0, 0)
            sc = np.where(ok, self._score[pos], -np.inf)
            best_any = np.maximum(best_any, sc)
            walking = ok & (sc > self.delta)
            support += walking
            better = walking & (sc > best_walk)
            best_walk = np.where(better, sc, best_walk)
            w = np.where(better, self._s_hat[pos], w)
        self._next_epoch = e0 + n
        y = (support > 0).astype(np.int8)
        return epochs, y, w, support, best_any


def fuse_epochs(decisions, vm, config, params, f0):
    """
    Fuse an ordered stream of window decisions into per-second records.

    Parameters
    ----------
    decisions : iterable of comb.WindowDecision
        Ordered by window start, starting at sample 0.
    vm : array_like
        Per-second vm counts; fixes the number of epochs.
    config : spectral.WindowConfig
    params : comb.DetectionParams
    f0 : int
        Sampling frequency, to convert window starts to seconds.

    Returns
    -------
    EpochTable
    """
    vm = np.asarray(vm, dtype=np.float64)
    n_epochs = vm.size
    decisions = list(decisions)
    stride = config.stride(f0)
    for j, dec in enumerate(decisions):
        if dec.window_start != j * stride:
            raise AlignmentError(f"window {j} starts at {dec.window_start}, expected {j * stride}")
    n_expected = max((n_epochs - config.tau_s) // config.stride_s + 1, 0)
    if len(decisions) != n_expected:
        raise AlignmentError(f"{len(decisions)} windows for {n_epochs} epochs, expected {n_expected}")
    fuser = EpochFuser(config, params)
    parts = []
    if decisions:
        parts.append(
            fuser.push(
                0,
                [d.max_score for d in decisions],
                [d.s_hat for d in decisions],
            )
        )
    parts.append(fuser.finish(n_epochs))
    return assemble(parts, vm)


def assemble(parts, vm):
    """Build an EpochTable from fuser outputs and the matching vm counts."""
    cols = [np.concatenate(c) for c in zip(*parts)] if parts else [np.zeros(0)] * 5
    epochs, y, w, support, score = cols
    if epochs.size != np.asarray(vm).size:
        raise AlignmentError(f"{epochs.size} fused epochs, {np.asarray(vm).size} vm values")
    return EpochTable(epochs.astype(np.int64), y.astype(np.int8), w, np.asarray(vm, dtype=np.float64),
                      support.astype(np.int32), score)


@dataclass(frozen=True)
class Bout:
    """
    A maximal run of walking seconds.

    `n_windows` counts window positions from the first to the last walking
    window of the run; ``duration_s = n_windows * stride_s + tau_s - stride_s``
    which for a 1 s stride is ``n_windows + overlap * tau_s``.
    """

    start_epoch: int
    end_epoch: int  # exclusive
    n_windows: int
    duration_s: float
    mean_iwf: float
    mean_vm: float

    @property
    def n_epochs(self):
        return self.end_epoch - self.start_epoch


def _runs(flags):
    f = np.concatenate([[0], np.asarray(flags, dtype=np.int8) != 0, [0]]).astype(np.int8)
    edges = np.diff(f)
    return np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)


def extract_bouts(epochs, config):
    """
    Bouts from an epoch table.

    Parameters
    ----------
    epochs : EpochTable
    config : spectral.WindowConfig

    Returns
    -------
    list of Bout
        Disjoint and ordered by start.
    """
    starts, ends = _runs(epochs.y)
    bouts = []
    for a, b in zip(starts, ends):
        length = int(b - a)
        n_windows = max((length - config.coverage_s) // config.stride_s + 1, 1)
        duration = n_windows * config.stride_s + config.tau_s - config.stride_s
        w = epochs.w[a:b]
        w = w[~np.isnan(w)]
        bouts.append(
            Bout(
                start_epoch=int(epochs.epoch[a]),
                end_epoch=int(epochs.epoch[b - 1]) + 1,
                n_windows=int(n_windows),
                duration_s=float(duration),
                mean_iwf=float(w.mean()) if w.size else float("nan"),
                mean_vm=float(epochs.v[a:b].mean()),
            )
        )
    return bouts


@dataclass
class BoutSummary:
    """Per-day bout counts and walking seconds split by duration band."""

    band_edges: tuple
    counts: np.ndarray  # (n_days, n_bands)
    seconds: np.ndarray  # (n_days, n_bands)

    @property
    def n_days(self):
        return self.counts.shape[0]

    @property
    def total_counts(self):
        return self.counts.sum(axis=1)

    @property
    def total_seconds(self):
        return self.seconds.sum(axis=1)

    def band_labels(self):
        edges = self.band_edges
        labels = [f"<={edges[0]:g}"]
        labels += [f"({lo:g},{hi:g}]" for lo, hi in zip(edges[:-1], edges[1:])]
        labels.append(f">{edges[-1]:g}")
        return labels


def bout_day(bout, origin_s=0):
    return (bout.start_epoch + origin_s) // SECONDS_PER_DAY


def summarize_bouts(bouts, band_edges=DEFAULT_BAND_EDGES, n_days=None, origin_s=0):
    """
    Daily bout counts and durations per duration band.

    Bands are closed on the right: with the default edges a bout falls in
    ``<=10``, ``(10, 30]``, ``(30, 60]`` or ``>60`` seconds.

    Parameters
    ----------
    bouts : sequence of Bout
    band_edges : sequence of float
        Increasing upper band edges.
    n_days : int, optional
        Number of day rows; inferred from the last bout if omitted.
    origin_s : int, optional
        Seconds between the start of the first day and the first epoch.

    Returns
    -------
    BoutSummary
    """
    edges = tuple(float(e) for e in band_edges)
    if any(b <= a for a, b in zip(edges[:-1], edges[1:])):
        raise ValueError("band edges must be strictly increasing")
    days = np.array([bout_day(b, origin_s) for b in bouts], dtype=np.int64)
    durations = np.array([b.duration_s for b in bouts], dtype=np.float64)
    if n_days is None:
        n_days = int(days.max()) + 1 if days.size else 1
    n_bands = len(edges) + 1
    counts = np.zeros((n_days, n_bands), dtype=np.int64)
    seconds = np.zeros((n_days, n_bands), dtype=np.float64)
    band = np.searchsorted(np.asarray(edges), durations, side="left")
    np.add.at(counts, (days, band), 1)
    np.add.at(seconds, (days, band), durations)
    return BoutSummary(edges, counts, seconds)


def hourly_walking_matrix(epochs, n_days=None, origin_s=0):
    """
    Walking minutes per (day, hour).

    Returns
    -------
    numpy.ndarray
        (n_days, 24) array with entries in [0, 60].
    """
    hours = (epochs.epoch + origin_s) // 3600
    if n_days is None:
        n_days = int(hours.max()) // 24 + 1 if hours.size else 1
    counts = np.bincount(hours[epochs.y != 0], minlength=n_days * 24)[: n_days * 24]
    return counts.reshape(n_days, 24) / 60.0


def iwf_distribution(epochs):
    """
    Five-number summary of walking frequency over walking epochs.

    Returns
    -------
    dict
        Keys ``count, min, q1, median, q3, max``; only ``count`` (0) when
        there are no walking epochs.
    """
    w = epochs.w[(epochs.y != 0) & ~np.isnan(epochs.w)]
    if w.size == 0:
        return {"count": 0}
    q1, med, q3 = np.percentile(w, [25, 50, 75])
    return {
        "count": int(w.size),
        "min": float(w.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(w.max()),
    }

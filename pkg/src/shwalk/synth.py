"""
Labelled synthetic tri-axial accelerometry.

Four segment kinds: rest (gravity plus sensor noise), position change (the
gravity direction swings smoothly to a new orientation), compound (several
frequency- and amplitude-modulated components with no stable period) and
harmonic walk (sinusoids at multiples of half the step frequency). Device
rotation events re-orient everything from their time onward.

All randomness is drawn from ``numpy.random.SeedSequence`` substreams, so a
given (specs, f0, seed) always produces the same bytes.
"""
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from shwalk.errors import ConfigurationError
from shwalk.evaluation import LabelTrack
from shwalk.signal import TriaxialSignal

__all__ = [
    "SegmentSpec",
    "CorpusSpec",
    "generate",
    "iter_generate",
    "plan_corpus",
    "make_corpus",
    "truth_stats",
]

KINDS = ("rest", "position_change", "compound", "harmonic_walk")
WALK_LABEL = "walking"


def _unit(v, name):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if v.shape != (3,) or not np.isfinite(n) or n == 0:
        raise ConfigurationError(f"{name} must be a non-zero 3-vector")
    return v / n


@dataclass(frozen=True)
class SegmentSpec:
    """
    One labelled stretch of synthetic signal.

    Parameters
    ----------
    kind : {'rest', 'position_change', 'compound', 'harmonic_walk'}
    duration_s : float
        At least 1 s.
    fundamental_hz : float
        Step frequency of a harmonic walk.
    amplitudes : tuple of float
        Walk amplitudes in g; entry ``i`` sits at ``(i + 2) * fundamental / 2``.
    phases : tuple of float, optional
        Phase offsets in radians; random when omitted.
    drift_hz_per_s : float
        Linear drift of the step frequency.
    wobble_hz, wobble_period_s : float
        Sinusoidal modulation of the step frequency.
    direction : tuple, optional
        Movement axis in the device frame; random when omitted.
    noise_sd : float
        White Gaussian noise per axis, in g.
    gravity : tuple
        Unit gravity direction at segment start.
    to_gravity : tuple, optional
        End orientation of a position change; random when omitted.
    transition_s : float
        Duration of the position-change swing.
    amplitude : float
        Overall scale of compound components, in g.
    n_components : int
        Compound component count (at least 3).
    rotations : tuple of (float, tuple)
        ``(time_s, rotation_vector)`` events; from ``time_s`` (relative to the
        segment start) the device orientation becomes ``rotation_vector``.
    """

    kind: str
    duration_s: float
    fundamental_hz: float = 2.0
    amplitudes: tuple = (0.3, 0.15, 0.05)
    phases: tuple | None = None
    drift_hz_per_s: float = 0.0
    wobble_hz: float = 0.0
    wobble_period_s: float = 20.0
    direction: tuple | None = None
    noise_sd: float = 0.0
    gravity: tuple = (0.0, 0.0, 1.0)
    to_gravity: tuple | None = None
    transition_s: float = 2.0
    amplitude: float = 0.3
    n_components: int = 4
    rotations: tuple = ()

    def validate(self, f0):
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.duration_s >= 1:
            raise ConfigurationError("duration_s must be >= 1")
        if self.noise_sd < 0 or self.amplitude < 0:
            raise ConfigurationError("noise_sd and amplitude must be >= 0")
        _unit(self.gravity, "gravity")
        if self.kind == "harmonic_walk":
            if not 0 < self.fundamental_hz < f0 / 2:
                raise ConfigurationError("fundamental_hz must lie in (0, f0/2)")
            if any(a < 0 for a in self.amplitudes):
                raise ConfigurationError("amplitudes must be >= 0")
            if self.phases is not None and len(self.phases) != len(self.amplitudes):
                raise ConfigurationError("phases and amplitudes differ in length")
            top = (len(self.amplitudes) + 1) / 2 * self.fundamental_hz
            if top >= f0 / 2:
                raise ConfigurationError("highest walk harmonic reaches Nyquist")
        if self.kind == "compound" and self.n_components < 3:
            raise ConfigurationError("compound needs at least 3 components")
        for t, rv in self.rotations:
            if not 0 <= t < self.duration_s or np.shape(rv) != (3,):
                raise ConfigurationError("rotation events need 0 <= time < duration and a 3-vector")

    @property
    def label(self):
        return WALK_LABEL if self.kind == "harmonic_walk" else self.kind

    def n_samples(self, f0):
        return int(round(self.duration_s * f0))

    def to_dict(self):
        d = asdict(self)
        d["rotations"] = [[t, list(rv)] for t, rv in self.rotations]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("amplitudes", "phases", "direction", "gravity", "to_gravity"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        d["rotations"] = tuple((float(t), tuple(rv)) for t, rv in d.get("rotations", ()))
        return cls(**d)


def _smooth_process(rng, t, n_terms=4, f_lo=0.03, f_hi=0.4):
    """Zero-mean, unit-variance smooth random process (random sum of slow sinusoids)."""
    freqs = rng.uniform(f_lo, f_hi, n_terms)
    phases = rng.uniform(0, 2 * np.pi, n_terms)
    amps = rng.uniform(0.5, 1.0, n_terms)
    x = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])).sum(0)
    return x / np.sqrt(0.5 * np.sum(amps**2))


def _random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _render(spec, f0, rng):
    """Device-frame motion (n, 3) before orientation and noise, plus gravity (n, 3)."""
    n = spec.n_samples(f0)
    t = np.arange(n) / f0
    g0 = _unit(spec.gravity, "gravity")
    gravity = np.broadcast_to(g0, (n, 3)).copy()
    motion = np.zeros((n, 3))
    if spec.kind == "position_change":
        if spec.to_gravity is None:
            axis = np.cross(g0, _random_unit(rng))
            g1 = Rotation.from_rotvec(axis / np.linalg.norm(axis) * np.pi / 2).apply(g0)
        else:
            g1 = _unit(spec.to_gravity, "to_gravity")
        mid = spec.duration_s / 2
        ramp = np.clip((t - mid) / max(spec.transition_s, 1.0 / f0) + 0.5, 0.0, 1.0)
        a = ramp * ramp * (3 - 2 * ramp)  # smoothstep
        g = (1 - a)[:, None] * g0 + a[:, None] * g1
        gravity = g / np.linalg.norm(g, axis=1, keepdims=True)
    elif spec.kind == "compound":
        for _ in range(spec.n_components):
            fc = np.exp(rng.uniform(np.log(0.4), np.log(6.0)))
            depth = rng.uniform(0.4, 0.8)
            inst_f = fc * np.exp(depth * _smooth_process(rng, t, f_lo=0.1, f_hi=0.6))
            phase = 2 * np.pi * np.cumsum(inst_f) / f0 + rng.uniform(0, 2 * np.pi)
            env = spec.amplitude * np.abs(_smooth_process(rng, t, f_lo=0.05, f_hi=0.5))
            motion += (env * np.sin(phase))[:, None] * _random_unit(rng)[None, :]
    elif spec.kind == "harmonic_walk":
        direction = _random_unit(rng) if spec.direction is None else _unit(spec.direction, "direction")
        phases = spec.phases
        if phases is None:
            phases = rng.uniform(0, 2 * np.pi, len(spec.amplitudes))
        inst_f = spec.fundamental_hz + spec.drift_hz_per_s * t
        if spec.wobble_hz:
            inst_f = inst_f + spec.wobble_hz * np.sin(2 * np.pi * t / spec.wobble_period_s)
        # cycle phase of the fundamental; sample 0 at phase 0
        cyc = 2 * np.pi * np.concatenate([[0.0], np.cumsum(inst_f[:-1])]) / f0
        walk = np.zeros(n)
        for i, (amp, ph) in enumerate(zip(spec.amplitudes, phases)):
            walk += amp * np.sin((i + 2) / 2 * cyc + ph)
        motion = walk[:, None] * direction[None, :]
    return motion, gravity


class _Orientation:
    """Device orientation carried across segments."""

    def __init__(self):
        self.matrix = np.eye(3)

    def apply(self, x, events, f0):
        out = np.empty_like(x)
        cuts = [0] + [int(round(t * f0)) for t, _ in events] + [x.shape[0]]
        mats = [self.matrix] + [Rotation.from_rotvec(rv).as_matrix() for _, rv in events]
        for (lo, hi), m in zip(zip(cuts[:-1], cuts[1:]), mats):
            out[lo:hi] = x[lo:hi] @ m.T
        self.matrix = mats[-1]
        return out


def iter_generate(specs, f0, seed):
    """
    Generate segment by segment.

    Yields
    ------
    spec : SegmentSpec
    samples : numpy.ndarray
        (n, 3) acceleration in g for this segment.
    """
    orientation = _Orientation()
    for i, spec in enumerate(specs):
        spec.validate(f0)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        motion, gravity = _render(spec, f0, rng)
        x = orientation.apply(motion + gravity, spec.rotations, f0)
        if spec.noise_sd > 0:
            x = x + rng.normal(0.0, spec.noise_sd, x.shape)
        yield spec, x


def labels_for(specs, f0, source="observer"):
    intervals = []
    t = 0
    for spec in specs:
        n = spec.n_samples(f0)
        intervals.append((t / f0, (t + n) / f0, spec.label))
        t += n
    return LabelTrack(tuple(intervals), source)


def generate(specs, f0, seed):
    """
    Render a sequence of segments.

    Parameters
    ----------
    specs : sequence of SegmentSpec
    f0 : int
        Sampling frequency in Hz.
    seed : int

    Returns
    -------
    signal : TriaxialSignal
    labels : LabelTrack
        Harmonic walks labelled 'walking', other segments by their kind.
    """
    specs = list(specs)
    parts = [x for _, x in iter_generate(specs, f0, seed)]
    samples = np.concatenate(parts) if parts else np.zeros((0, 3))
    return TriaxialSignal(samples, f0), labels_for(specs, f0)


def truth_stats(specs, f0):
    """Walking seconds, merged bout lengths and step frequencies of a plan."""
    track = labels_for(specs, f0)
    bouts = [b - a for a, b in track.walking_runs()]
    iwf = [s.fundamental_hz for s in specs if s.kind == "harmonic_walk"]
    return {
        "walking_seconds": float(track.walking_seconds_total),
        "bouts_s": [float(b) for b in bouts],
        "iwf_hz": [float(w) for w in iwf],
    }


@dataclass(frozen=True)
class CorpusSpec:
    """
    Random corpus layout.

    When `segments` is given every subject uses that explicit list and the
    random-plan fields are ignored.
    """

    subjects: int = 1
    duration_s: int = 7200
    days: float = 0
    f0: int = 50
    mixture: dict = field(
        default_factory=lambda: {
            "rest": 0.35,
            "position_change": 0.1,
            "compound": 0.25,
            "harmonic_walk": 0.3,
        }
    )
    segment_s: tuple = (30, 240)
    walk_hz: tuple = (1.4, 2.5)
    walk_amplitude: tuple = (0.1, 0.5)
    noise_sd: tuple = (0.01, 0.05)
    drift_hz_per_s: float = 0.002
    wobble_hz: float = 0.08
    compound_amplitude: tuple = (0.1, 0.5)
    rotations_per_hour: float = 1.0
    start_unix_seconds: int = 0
    segments: tuple | None = None

    @property
    def total_s(self):
        return int(round(self.days * 86400)) if self.days else int(self.duration_s)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("segments") is not None:
            d["segments"] = tuple(
                s if isinstance(s, SegmentSpec) else SegmentSpec.from_dict(s) for s in d["segments"]
            )
        for key in ("segment_s", "walk_hz", "walk_amplitude", "noise_sd", "compound_amplitude"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        if self.segments is not None:
            d["segments"] = [s.to_dict() for s in self.segments]
        return d


def subject_seed(seed, index):
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def _plan_subject(spec, rng):
    kinds = [k for k in KINDS if spec.mixture.get(k, 0) > 0]
    weights = np.array([spec.mixture[k] for k in kinds], dtype=np.float64)
    if not kinds or not np.all(weights >= 0):
        raise ConfigurationError("mixture needs at least one positive weight")
    weights = weights / weights.sum()
    total = spec.total_s
    lo, hi = spec.segment_s
    t = 0
    gravity = np.array([0.0, 0.0, 1.0])
    plan = []
    while t < total:
        dur = int(min(rng.integers(lo, hi + 1), total - t))
        kind = kinds[rng.choice(len(kinds), p=weights)]
        noise = float(rng.uniform(*spec.noise_sd))
        seg = dict(kind=kind, duration_s=dur, noise_sd=noise, gravity=tuple(gravity))
        if kind == "harmonic_walk":
            n_h = int(rng.integers(2, 5))
            base = rng.uniform(*spec.walk_amplitude)
            seg.update(
                fundamental_hz=float(rng.uniform(*spec.walk_hz)),
                amplitudes=tuple(float(base * 0.6**i) for i in range(n_h)),
                drift_hz_per_s=float(rng.uniform(-spec.drift_hz_per_s, spec.drift_hz_per_s)),
                wobble_hz=float(rng.uniform(0, spec.wobble_hz)),
                wobble_period_s=float(rng.uniform(10, 60)),
            )
        elif kind == "compound":
            seg.update(amplitude=float(rng.uniform(*spec.compound_amplitude)),
                       n_components=int(rng.integers(3, 6)))
        elif kind == "position_change":
            axis = np.cross(gravity, _random_unit(rng))
            g1 = Rotation.from_rotvec(axis / np.linalg.norm(axis) * rng.uniform(0.5, 1.5)).apply(gravity)
            seg["to_gravity"] = tuple(float(v) for v in g1)
            gravity = g1
        n_rot = rng.poisson(spec.rotations_per_hour * dur / 3600.0)
        if n_rot:
            times = np.sort(rng.uniform(0, dur, n_rot))
            seg["rotations"] = tuple(
                (float(tt), tuple(float(v) for v in Rotation.random(random_state=rng).as_rotvec()))
                for tt in times
            )
        plan.append(SegmentSpec(**seg))
        t += dur
    return plan


def plan_corpus(spec, seed):
    """
    Segment plans for every subject.

    Returns
    -------
    list of (subject_id, subject_seed, list of SegmentSpec)
    """
    out = []
    for s in range(spec.subjects):
        sid = f"S{s + 1:02d}"
        sseed = subject_seed(seed, s)
        if spec.segments is not None:
            plan = list(spec.segments)
        else:
            plan = _plan_subject(spec, np.random.default_rng(sseed))
        out.append((sid, sseed, plan))
    return out


def make_corpus(spec, seed, out_dir, fmt="binary"):
    """
    Write a synthetic corpus: one signal and one label file per subject plus
    ``manifest.json``.

    Parameters
    ----------
    spec : CorpusSpec or dict
    seed : int
    out_dir : str or os.PathLike
    fmt : {'binary', 'csv'}

    Returns
    -------
    dict
        The manifest.
    """
    from shwalk import io

    if isinstance(spec, dict):
        spec = CorpusSpec.from_dict(spec)
    os.makedirs(out_dir, exist_ok=True)
    f0 = spec.f0
    entries = []
    written = []
    try:
        for sid, sseed, plan in plan_corpus(spec, seed):
            n_samples = sum(p.n_samples(f0) for p in plan)
            ext = "shwa" if fmt == "binary" else "csv"
            sig_name = f"{sid}.{ext}"
            lab_name = f"{sid}_labels.csv"
            header = io.RecordingHeader(f0=f0, n_samples=n_samples,
                                        start_unix_seconds=spec.start_unix_seconds, subject_id=sid)
            chunks = (x for _, x in iter_generate(plan, f0, sseed))
            sig_path = os.path.join(out_dir, sig_name)
            written.append(sig_path)
            io.write_signal(sig_path, header, chunks, fmt=fmt)
            lab_path = os.path.join(out_dir, lab_name)
            written.append(lab_path)
            io.write_labels(lab_path, labels_for(plan, f0))
            entry = {
                "subject_id": sid,
                "signal": sig_name,
                "labels": lab_name,
                "seed": sseed,
                "n_samples": n_samples,
            }
            entry.update(truth_stats(plan, f0))
            entries.append(entry)
        manifest = {
            "format_version": 1,
            "seed": int(seed),
            "f0": f0,
            "format": fmt,
            "corpus": spec.to_dict(),
            "subjects": entries,
        }
        man_path = os.path.join(out_dir, "manifest.json")
        written.append(man_path)
        io.write_json(man_path, manifest)
    except BaseException:
        for p in written:
            if os.path.exists(p):
                os.remove(p)
        raise
    return manifest

"""
Command-line interface.

Subcommands: detect, summarize, tune-delta, cv-study, roc, overlap, simulate.
"""
import argparse
import json
import os
import shutil
import sys
import tempfile

import numpy as np

from shwalk import io
from shwalk.comb import DetectionParams
from shwalk.errors import SHWError
from shwalk.evaluation import label_overlap, roc_curve
from shwalk.pipeline import Detector
from shwalk.segmentation import (
    DEFAULT_BAND_EDGES,
    EpochTable,
    extract_bouts,
    hourly_walking_matrix,
    iwf_distribution,
    summarize_bouts,
)
from shwalk.spectral import WindowConfig

__all__ = ["main", "build_parser"]


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _harmonics(text):
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("harmonic count must be >= 2")
    return value


def _int_range(text):
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    if lo < 2 or hi < lo:
        raise argparse.ArgumentTypeError("need 2 <= LO <= HI")
    return range(lo, hi + 1)


def _edges(text):
    try:
        vals = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if any(b <= a for a, b in zip(vals[:-1], vals[1:])):
        raise argparse.ArgumentTypeError("band edges must increase")
    return vals


def _add_window_args(p):
    p.add_argument("--tau", type=_positive_int, default=10, help="window length, seconds")
    p.add_argument("--stride", type=_positive_int, default=1, help="window shift, seconds")
    p.add_argument("--pad-factor", type=_positive_int, default=1)
    p.add_argument("--coverage", choices=("inclusive", "interior"), default="inclusive")


def _add_detection_args(p):
    _add_window_args(p)
    p.add_argument("--delta", type=_positive_float, default=0.115)
    p.add_argument("--harmonics", type=_harmonics, default=6)
    p.add_argument("--fmin", type=_positive_float, default=1.2)
    p.add_argument("--fmax", type=_positive_float, default=4.0)
    p.add_argument("--teeth-count-mode", choices=("formula", "prose"), default="formula")
    p.add_argument("--format", choices=("auto", "binary", "csv"), default="auto",
                   help="input signal format")
    p.add_argument("--f0", type=_positive_int, default=None, help="sampling rate for CSV input")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--chunk-samples", type=_positive_int, default=io.DEFAULT_CHUNK)
    p.add_argument("--seed", type=int, default=0)


def _add_subject_inputs(p):
    p.add_argument("--manifest", help="corpus manifest.json written by `simulate`")
    p.add_argument("--input", action="append", default=[], help="signal file (repeatable)")
    p.add_argument("--labels", action="append", default=[], help="label CSV matching each --input")


def build_parser():
    parser = argparse.ArgumentParser(prog="shwalk", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect walking in a recording")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--in-memory", action="store_true", help="load the whole file before detecting")
    p.add_argument("--origin-s", type=int, default=0,
                   help="seconds from the start of day 0 to the first sample")
    p.add_argument("--band-edges", type=_edges, default=DEFAULT_BAND_EDGES)
    _add_detection_args(p)

    p = sub.add_parser("summarize", help="bouts and summaries from an epochs.csv")
    p.add_argument("--epochs", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--subject-id", default="")
    p.add_argument("--origin-s", type=int, default=0)
    p.add_argument("--band-edges", type=_edges, default=DEFAULT_BAND_EDGES)
    _add_window_args(p)

    p = sub.add_parser("tune-delta", help="subject and population thresholds")
    _add_subject_inputs(p)
    p.add_argument("--output", required=True)
    p.add_argument("--harmonics-range", type=_int_range, default=range(2, 18))
    p.add_argument("--min-scores", type=_positive_int, default=30)
    _add_detection_args(p)

    p = sub.add_parser("cv-study", help="walking-frequency CV against harmonic count")
    _add_subject_inputs(p)
    p.add_argument("--output", required=True)
    p.add_argument("--harmonics-range", type=_int_range, default=range(2, 18))
    _add_detection_args(p)

    p = sub.add_parser("roc", help="ROC curve of per-second scores against labels")
    p.add_argument("--input", help="signal file to score")
    p.add_argument("--scores", help="scores.csv written by detect")
    p.add_argument("--labels", required=True)
    p.add_argument("--output", required=True)
    _add_detection_args(p)

    p = sub.add_parser("overlap", help="agreement between two label files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--mode", choices=("jaccard", "recall"), default="jaccard")
    p.add_argument("--span-s", type=_positive_int, default=None)
    p.add_argument("--output", required=True, help="CSV file")

    p = sub.add_parser("simulate", help="write a synthetic labelled corpus")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", help="corpus spec JSON")
    p.add_argument("--subjects", type=_positive_int, default=None)
    p.add_argument("--duration-s", type=_positive_int, default=None)
    p.add_argument("--days", type=_positive_float, default=None)
    p.add_argument("--f0", type=_positive_int, default=None)
    p.add_argument("--format", choices=("binary", "csv"), default="binary")
    return parser


# ------------------------------------------------------------------ helpers
def _config(args):
    return WindowConfig(tau_s=args.tau, stride_s=args.stride, pad_factor=args.pad_factor,
                        coverage=args.coverage)


def _params(args):
    return DetectionParams(delta=args.delta, f_min=args.fmin, f_max=args.fmax, n_m=args.harmonics,
                           teeth_count_mode=args.teeth_count_mode)


def _fmt(args):
    return None if args.format == "auto" else args.format


class _Staging:
    """Output files are written under a hidden directory and moved in on commit."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".staging-", dir=out_dir)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def commit(self):
        for name in sorted(os.listdir(self.tmp)):
            os.replace(os.path.join(self.tmp, name), os.path.join(self.out_dir, name))
        os.rmdir(self.tmp)

    def abort(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if et is None:
            self.commit()
        else:
            self.abort()
        return False


def _band_keys(edges):
    """Comma-free column keys for duration bands: le10, 10to30, ..., gt60."""
    keys = [f"le{edges[0]:g}"]
    keys += [f"{lo:g}to{hi:g}" for lo, hi in zip(edges[:-1], edges[1:])]
    keys.append(f"gt{edges[-1]:g}")
    return keys


def write_summaries(stage, epochs, config, subject_id, origin_s=0, band_edges=DEFAULT_BAND_EDGES,
                    extra=None):
    """Bouts, banded totals, hourly matrix, IWF samples and the JSON summary."""
    bouts = extract_bouts(epochs, config)
    n_days = max(int((len(epochs) + origin_s - 1) // 86400) + 1, 1) if len(epochs) else 1
    summary = summarize_bouts(bouts, band_edges, n_days=n_days, origin_s=origin_s)
    hourly = hourly_walking_matrix(epochs, n_days=n_days, origin_s=origin_s)
    iwf = iwf_distribution(epochs)
    labels = summary.band_labels()

    io.write_csv(
        stage.path("bouts.csv"),
        ["start_epoch", "end_epoch", "n_windows", "duration_s", "mean_iwf", "mean_vm", "day"],
        [(b.start_epoch, b.end_epoch, b.n_windows, b.duration_s, b.mean_iwf, b.mean_vm,
          (b.start_epoch + origin_s) // 86400) for b in bouts],
    )
    keys = _band_keys(summary.band_edges)
    header = ["day"] + [f"count_{k}" for k in keys] + [f"seconds_{k}" for k in keys]
    header += ["count_total", "seconds_total"]
    io.write_csv(
        stage.path("bands.csv"),
        header,
        [[d] + summary.counts[d].tolist() + summary.seconds[d].tolist()
         + [int(summary.total_counts[d]), float(summary.total_seconds[d])] for d in range(n_days)],
    )
    io.write_csv(
        stage.path("hourly.csv"),
        ["day"] + [f"h{h:02d}" for h in range(24)],
        [[d] + hourly[d].tolist() for d in range(n_days)],
    )
    walking = (epochs.y != 0) & ~np.isnan(epochs.w)
    io.write_csv(
        stage.path("iwf.csv"),
        ["subject_id", "epoch", "w"],
        [(subject_id, e, w) for e, w in zip(epochs.epoch[walking].tolist(), epochs.w[walking].tolist())],
    )
    days = []
    for d in range(n_days):
        days.append({
            "day": d,
            "walking_seconds": int(np.count_nonzero(epochs.y[(epochs.epoch + origin_s) // 86400 == d])),
            "bout_seconds": float(summary.total_seconds[d]),
            "n_bouts": int(summary.total_counts[d]),
            "bands": {lab: {"count": int(summary.counts[d, i]), "seconds": float(summary.seconds[d, i])}
                      for i, lab in enumerate(labels)},
        })
    doc = {
        "subject_id": subject_id,
        "n_epochs": len(epochs),
        "walking_seconds": epochs.walking_seconds,
        "n_bouts": len(bouts),
        "band_edges_s": list(summary.band_edges),
        "days": days,
        "iwf": iwf,
        "window": {"tau_s": config.tau_s, "stride_s": config.stride_s, "coverage": config.coverage},
    }
    if extra:
        doc.update(extra)
    io.write_json(stage.path("summary.json"), doc)


def _subjects(args):
    """(subject_id, TriaxialSignal, LabelTrack) from a manifest or --input/--labels pairs."""
    pairs = []
    if args.manifest:
        with open(args.manifest) as fh:
            man = json.load(fh)
        base = os.path.dirname(os.path.abspath(args.manifest))
        for entry in man["subjects"]:
            pairs.append((entry["subject_id"], os.path.join(base, entry["signal"]),
                          os.path.join(base, entry["labels"])))
    if len(args.input) != len(args.labels):
        raise SHWError("each --input needs a matching --labels")
    for path, lab in zip(args.input, args.labels):
        pairs.append((None, path, lab))
    if not pairs:
        raise SHWError("no subjects: give --manifest or --input/--labels")
    for sid, path, lab in pairs:
        signal, header = io.read_signal(path, _fmt(args), args.f0)
        yield sid or header.subject_id or os.path.splitext(os.path.basename(path))[0], signal, io.read_labels(lab)


# ---------------------------------------------------------------- commands
def cmd_detect(args):
    config, params = _config(args), _params(args)
    reader = io.open_signal(args.input, _fmt(args), args.f0, args.chunk_samples)
    detector = Detector(config, params, threads=args.threads)
    with _Staging(args.output) as stage:
        parts = []
        with io.EpochWriter(stage.path("epochs.csv")) as ew, \
                io.atomic_open(stage.path("scores.csv"), "w", newline="") as sf:
            sf.write("epoch,score\n")
            if args.in_memory:
                pieces = [detector.run(reader.read_all()).epochs]
            else:
                pieces = detector.iter_epochs(reader.chunks(), reader.f0)
            for piece in pieces:
                ew.write(piece)
                sf.write("".join(f"{e},{s!r}\n" for e, s in zip(piece.epoch.tolist(), piece.score.tolist())))
                parts.append(piece)
        epochs = EpochTable.concat(parts)
        h = reader.header
        extra = {
            "f0": h.f0,
            "n_samples": h.n_samples,
            "start_unix_seconds": h.start_unix_seconds,
            "params": {"delta": params.delta, "f_min": params.f_min, "f_max": params.f_max,
                       "n_m": params.n_m, "teeth_count_mode": params.teeth_count_mode,
                       "pad_factor": config.pad_factor},
        }
        write_summaries(stage, epochs, config, h.subject_id, args.origin_s, args.band_edges, extra)
    return 0


def cmd_summarize(args):
    config = _config(args)
    epochs = io.read_epochs(args.epochs)
    with _Staging(args.output) as stage:
        write_summaries(stage, epochs, config, args.subject_id, args.origin_s, args.band_edges)
    return 0


def cmd_tune_delta(args):
    from shwalk.tuning import delta_study

    rows, population = delta_study(_subjects(args), args.harmonics_range, _config(args), _params(args),
                                   args.threads, args.min_scores)
    with _Staging(args.output) as stage:
        io.write_csv(stage.path("delta.csv"), ["subject_id", "n_m", "delta", "degraded"],
                     [(s, n, d, int(g)) for s, n, d, g in rows])
        io.write_json(stage.path("delta_summary.json"),
                      {"population": {str(k): v for k, v in population.items()}})
    return 0


def cmd_cv_study(args):
    from shwalk.tuning import cv_study

    rows, curves = cv_study(_subjects(args), args.harmonics_range, _config(args), _params(args), args.threads)
    with _Staging(args.output) as stage:
        io.write_csv(stage.path("cv.csv"), ["subject_id", "n_m", "cv"], rows)
        io.write_csv(stage.path("cv_curves.csv"), ["n_m", "mean_cv", "median_cv"], curves)
    return 0


def cmd_roc(args):
    labels = io.read_labels(args.labels)
    if args.scores:
        scores = io.read_scores(args.scores)
    elif args.input:
        reader = io.open_signal(args.input, _fmt(args), args.f0, args.chunk_samples)
        res = Detector(_config(args), _params(args), threads=args.threads).run_chunks(reader.chunks(), reader.f0)
        scores = res.epochs.score
    else:
        raise SHWError("roc needs --scores or --input")
    roc = roc_curve(scores, labels)
    with _Staging(args.output) as stage:
        io.write_csv(stage.path("roc.csv"), ["threshold", "fpr", "tpr"],
                     zip(roc.thresholds.tolist(), roc.fpr.tolist(), roc.tpr.tolist()))
        io.write_json(stage.path("roc.json"),
                      {"auc": roc.auc, "n_positive": roc.n_positive, "n_negative": roc.n_negative})
    return 0


def cmd_overlap(args):
    a, b = io.read_labels(args.a), io.read_labels(args.b, source="corrected")
    n = args.span_s or int(np.ceil(max(a.end_s, b.end_s)))
    ma, mb = a.walking_mask(n), b.walking_mask(n)
    value = label_overlap(ma, mb, args.mode, n)
    io.write_csv(args.output, ["a", "b", "mode", "overlap", "a_walking_s", "b_walking_s", "intersection_s"],
                 [(os.path.basename(args.a), os.path.basename(args.b), args.mode, value,
                   int(ma.sum()), int(mb.sum()), int((ma & mb).sum()))])
    return 0


def cmd_simulate(args):
    from shwalk.synth import CorpusSpec, make_corpus

    spec = {}
    if args.spec:
        with open(args.spec) as fh:
            spec = json.load(fh)
    for key, val in (("subjects", args.subjects), ("duration_s", args.duration_s),
                     ("days", args.days), ("f0", args.f0)):
        if val is not None:
            spec[key] = val
    corpus = CorpusSpec.from_dict(spec)
    with _Staging(args.output) as stage:
        make_corpus(corpus, args.seed, stage.tmp, fmt=args.format)
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "summarize": cmd_summarize,
    "tune-delta": cmd_tune_delta,
    "cv-study": cmd_cv_study,
    "roc": cmd_roc,
    "overlap": cmd_overlap,
    "simulate": cmd_simulate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (SHWError, OSError) as exc:
        print(f"shwalk {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

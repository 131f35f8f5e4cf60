"""
File formats and streaming readers/writers.

Binary signal layout (little-endian)::

    magic        4s   b"SHWA"
    version      u16  1
    f0           u32  samples per second per axis
    n_samples    u64  samples per axis
    start        i64  recording start, unix seconds
    id_len       u16  length of the subject id
    subject_id   id_len bytes, UTF-8
    payload      n_samples * 3 * f32, axis-interleaved (x, y, z per sample)

CSV signals have a ``t,x,y,z`` header (``t`` optional and ignored for
spacing); the sampling rate comes from the caller or a ``<file>.json``
sidecar. Every writer is atomic: output goes to a temporary file in the
target directory and is renamed into place on success.
"""
import contextlib
import csv
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from shwalk.errors import ConfigurationError, ParseError, TruncatedError
from shwalk.evaluation import LabelTrack
from shwalk.segmentation import EpochTable
from shwalk.signal import TriaxialSignal

__all__ = [
    "RecordingHeader",
    "SignalReader",
    "open_signal",
    "read_signal",
    "write_signal",
    "read_labels",
    "write_labels",
    "write_epochs",
    "read_epochs",
    "EpochWriter",
    "atomic_open",
    "write_json",
    "write_csv",
]

MAGIC = b"SHWA"
VERSION = 1
_FIXED = struct.Struct("<4sHIQqH")
_SAMPLE_BYTES = 12
DEFAULT_CHUNK = 1 << 18


@dataclass(frozen=True)
class RecordingHeader:
    f0: int
    n_samples: int
    start_unix_seconds: int = 0
    subject_id: str = ""
    device_id: str | None = None
    version: int = VERSION

    def __post_init__(self):
        if int(self.f0) != self.f0 or self.f0 <= 0:
            raise ConfigurationError(f"f0 must be a positive integer, got {self.f0}")
        if self.n_samples < 0:
            raise ConfigurationError("n_samples must be >= 0")

    def pack(self):
        sid = self.subject_id.encode("utf-8")
        return _FIXED.pack(MAGIC, self.version, int(self.f0), int(self.n_samples),
                           int(self.start_unix_seconds), len(sid)) + sid


@contextlib.contextmanager
def atomic_open(path, mode="w", **kwargs):
    """Open a temporary sibling of `path`; rename over `path` only on success."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix="-" + os.path.basename(path), dir=directory)
    os.close(fd)
    try:
        with open(tmp, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


# ---------------------------------------------------------------- signals
BINARY_SUFFIXES = (".shwa", ".bin")


def sniff_format(path):
    """'binary' for the SHWA magic or a binary suffix, else 'csv'."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC or os.fspath(path).lower().endswith(BINARY_SUFFIXES):
        return "binary"
    return "csv"


class SignalReader:
    """
    Chunked reader over a recording file.

    Use :meth:`chunks` to stream (n, 3) float64 blocks; memory use is bounded
    by `chunk_samples`.
    """

    def __init__(self, path, fmt=None, f0=None, chunk_samples=DEFAULT_CHUNK):
        self.path = os.fspath(path)
        self.fmt = fmt or sniff_format(self.path)
        if self.fmt not in ("binary", "csv"):
            raise ConfigurationError(f"unknown signal format {self.fmt!r}")
        if chunk_samples < 1:
            raise ConfigurationError("chunk_samples must be >= 1")
        self.chunk_samples = int(chunk_samples)
        if self.fmt == "binary":
            self.header, self._payload_offset = _read_binary_header(self.path)
            if f0 is not None and int(f0) != self.header.f0:
                raise ConfigurationError(f"f0 {f0} disagrees with file header {self.header.f0}")
        else:
            self.header = _csv_header(self.path, f0)
            self._payload_offset = 0

    @property
    def f0(self):
        return self.header.f0

    def chunks(self):
        if self.fmt == "binary":
            yield from self._binary_chunks()
        else:
            yield from self._csv_chunks()

    def read_all(self):
        parts = list(self.chunks())
        samples = np.concatenate(parts) if parts else np.zeros((0, 3))
        return TriaxialSignal(samples, self.f0)

    def _binary_chunks(self):
        remaining = self.header.n_samples
        offset = self._payload_offset
        buf = np.empty((min(remaining, self.chunk_samples), 3), dtype="<f4")
        with open(self.path, "rb") as fh:
            fh.seek(offset)
            while remaining > 0:
                n = min(remaining, self.chunk_samples)
                view = buf[:n]
                got = fh.readinto(memoryview(view).cast("B"))
                if got != view.nbytes:
                    raise TruncatedError(
                        f"payload ended early: expected {self.header.n_samples} samples", offset + got
                    )
                offset += got
                remaining -= n
                yield view.astype(np.float64)

    def _csv_chunks(self):
        import pandas as pd

        last_t = -math.inf
        line = 2
        reader = pd.read_csv(self.path, chunksize=self.chunk_samples, dtype=np.float64)
        try:
            for frame in reader:
                cols = list(frame.columns)
                if not {"x", "y", "z"} <= set(cols):
                    raise ParseError(f"CSV header must contain x,y,z, got {cols}", 1)
                if "t" in cols:
                    t = frame["t"].to_numpy()
                    prev = np.r_[last_t, t[:-1]]
                    bad = np.flatnonzero(~(t > prev))
                    if bad.size:
                        raise ParseError("timestamps not strictly increasing", line + int(bad[0]))
                    if t.size:
                        last_t = t[-1]
                vals = frame[["x", "y", "z"]].to_numpy(dtype=np.float64)
                bad = np.flatnonzero(~np.isfinite(vals).all(axis=1))
                if bad.size:
                    raise ParseError("missing or non-finite value", line + int(bad[0]))
                line += len(frame)
                yield np.ascontiguousarray(vals)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed CSV: {exc}", line) from exc


def _read_binary_header(path):
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        raw = fh.read(_FIXED.size)
        if len(raw) < _FIXED.size:
            raise ParseError("file shorter than the fixed header", len(raw))
        magic, version, f0, n_samples, start, id_len = _FIXED.unpack(raw)
        if magic != MAGIC:
            raise ParseError(f"bad magic {magic!r}", 0)
        if version != VERSION:
            raise ParseError(f"unsupported version {version}", 4)
        if f0 == 0:
            raise ParseError("f0 must be > 0", 6)
        sid_raw = fh.read(id_len)
        if len(sid_raw) < id_len:
            raise ParseError("subject id truncated", _FIXED.size + len(sid_raw))
    try:
        sid = sid_raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("subject id is not UTF-8", _FIXED.size + exc.start) from exc
    offset = _FIXED.size + id_len
    payload = size - offset
    if payload < n_samples * _SAMPLE_BYTES:
        complete = payload // _SAMPLE_BYTES
        raise TruncatedError(
            f"header declares {n_samples} samples but payload holds {complete}",
            offset + complete * _SAMPLE_BYTES,
        )
    if payload > n_samples * _SAMPLE_BYTES:
        raise ParseError("trailing bytes after payload", offset + n_samples * _SAMPLE_BYTES)
    return RecordingHeader(f0, n_samples, start, sid, version=version), offset


def _csv_header(path, f0):
    meta = {}
    sidecar = path + ".json"
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            meta = json.load(fh)
    if f0 is None:
        f0 = meta.get("f0")
    if f0 is None:
        raise ConfigurationError("CSV signals need f0 from the caller or a .json sidecar")
    n = 0
    with open(path, "rb") as fh:
        for n, _ in enumerate(fh):
            pass
    return RecordingHeader(
        f0=int(f0),
        n_samples=max(n, 0),
        start_unix_seconds=int(meta.get("start_unix_seconds", 0)),
        subject_id=str(meta.get("subject_id", "")),
        device_id=meta.get("device_id"),
    )


def open_signal(path, fmt=None, f0=None, chunk_samples=DEFAULT_CHUNK):
    return SignalReader(path, fmt, f0, chunk_samples)


def read_signal(path, fmt=None, f0=None):
    """Read a whole recording into memory."""
    reader = SignalReader(path, fmt, f0)
    return reader.read_all(), reader.header


def write_signal(path, header, chunks, fmt="binary"):
    """
    Write a recording from an iterable of (n, 3) chunks.

    The chunks must hold exactly ``header.n_samples`` rows in total.
    """
    path = os.fspath(path)
    if isinstance(chunks, TriaxialSignal):
        chunks = [chunks.samples]
    elif isinstance(chunks, np.ndarray):
        chunks = [chunks]
    count = 0
    if fmt == "binary":
        with atomic_open(path, "wb") as fh:
            fh.write(header.pack())
            for c in chunks:
                c = np.asarray(c)
                fh.write(np.ascontiguousarray(c, dtype="<f4").tobytes())
                count += c.shape[0]
            _check_count(count, header)
    elif fmt == "csv":
        with atomic_open(path, "w", newline="") as fh:
            fh.write("t,x,y,z\n")
            for c in chunks:
                c = np.asarray(c, dtype=np.float64)
                t = (count + np.arange(c.shape[0])) / header.f0
                np.savetxt(fh, np.column_stack([t, c]), fmt="%.9g", delimiter=",")
                count += c.shape[0]
            _check_count(count, header)
        meta = {
            "f0": header.f0,
            "start_unix_seconds": header.start_unix_seconds,
            "subject_id": header.subject_id,
        }
        if header.device_id is not None:
            meta["device_id"] = header.device_id
        write_json(path + ".json", meta)
    else:
        raise ConfigurationError(f"unknown signal format {fmt!r}")


def _check_count(count, header):
    if count != header.n_samples:
        raise ConfigurationError(f"wrote {count} samples, header declares {header.n_samples}")


# ----------------------------------------------------------------- labels
def read_labels(path, source="observer"):
    intervals = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["start_s", "end_s", "label"]:
            raise ParseError("label file needs a start_s,end_s,label header", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                intervals.append((float(row[0]), float(row[1]), row[2].strip()))
            except (IndexError, ValueError) as exc:
                raise ParseError(f"bad label row {row!r}", lineno) from exc
    try:
        return LabelTrack(tuple(intervals), source)
    except ConfigurationError as exc:
        raise ParseError(str(exc)) from exc


def write_labels(path, track):
    with atomic_open(path, "w", newline="") as fh:
        fh.write("start_s,end_s,label\n")
        for a, b, lab in track.intervals:
            fh.write(f"{_num(a)},{_num(b)},{lab}\n")


# ----------------------------------------------------------------- epochs
def _num(x):
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


class EpochWriter:
    """Incremental ``epoch,y,w,v`` CSV writer; the file appears on clean close only."""

    HEADER = "epoch,y,w,v\n"

    def __init__(self, path):
        self.path = path
        self._cm = atomic_open(path, "w", newline="")
        self._fh = self._cm.__enter__()
        self._fh.write(self.HEADER)

    def write(self, table):
        lines = []
        for e, y, w, v in zip(table.epoch.tolist(), table.y.tolist(), table.w.tolist(), table.v.tolist()):
            wf = "" if (y == 0 or w != w) else repr(w)
            lines.append(f"{e},{y},{wf},{v!r}\n")
        self._fh.write("".join(lines))

    def close(self):
        self._cm.__exit__(None, None, None)

    def abort(self, exc):
        self._cm.__exit__(type(exc), exc, exc.__traceback__)

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if et is None:
            self.close()
        else:
            self._cm.__exit__(et, ev, tb)
        return False


def write_epochs(records, path):
    """
    Write epochs as CSV with columns ``epoch,y,w,v``.

    `w` is left empty for non-walking seconds. Floats use the shortest
    round-trip representation, so :func:`read_epochs` restores them exactly.
    """
    if not isinstance(records, EpochTable):
        records = EpochTable.from_records(records)
    with EpochWriter(path) as writer:
        writer.write(records)


def read_epochs(path):
    epochs, ys, ws, vs = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["epoch", "y", "w", "v"]:
            raise ParseError("epoch file needs an epoch,y,w,v header", 1)
        for lineno, row in enumerate(reader, start=2):
            try:
                e, y, w, v = row
                epochs.append(int(e))
                ys.append(int(y))
                ws.append(float(w) if w else math.nan)
                vs.append(float(v))
            except ValueError as exc:
                raise ParseError(f"bad epoch row {row!r}", lineno) from exc
    n = len(epochs)
    return EpochTable(
        np.array(epochs, dtype=np.int64),
        np.array(ys, dtype=np.int8),
        np.array(ws, dtype=np.float64),
        np.array(vs, dtype=np.float64),
        np.zeros(n, dtype=np.int32),
        np.zeros(n),
    )


# ------------------------------------------------------------ other tables
def write_json(path, obj):
    with atomic_open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    """Write rows of plain values; None and NaN become empty fields."""
    with atomic_open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\n")


def read_scores(path):
    """Read an ``epoch,score`` CSV into a score array indexed by epoch."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return np.zeros(0)
    epochs = data[:, 0].astype(np.int64)
    out = np.zeros(int(epochs.max()) + 1)
    out[epochs] = data[:, 1]
    return out

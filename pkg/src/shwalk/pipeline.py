"""
Streaming detection pipeline.

Samples arrive in arbitrary chunks. Windows are processed in blocks whose
composition depends only on absolute window index, so any chunking and any
thread count give bit-identical results.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from shwalk import _backend
from shwalk.comb import DetectionParams, WindowDecision, comb_bank, score_block
from shwalk.errors import ConfigurationError, ShapeError
from shwalk.segmentation import EpochFuser, EpochTable, assemble
from shwalk.signal import TriaxialSignal
from shwalk.spectral import WindowConfig, block_magnitudes

__all__ = ["Detector", "DetectionResult", "WindowTable", "detect"]

DEFAULT_BLOCK_WINDOWS = 512


@dataclass
class WindowTable:
    """Per-window results in start order."""

    start: np.ndarray  # sample index
    max_score: np.ndarray
    s_hat: np.ndarray
    best_axis: np.ndarray
    delta: float

    def __len__(self):
        return self.start.size

    @property
    def is_walking(self):
        return self.max_score > self.delta

    def decisions(self):
        for i in range(len(self)):
            yield WindowDecision(
                int(self.start[i]),
                float(self.max_score[i]),
                float(self.s_hat[i]),
                bool(self.max_score[i] > self.delta),
                int(self.best_axis[i]),
            )


@dataclass
class DetectionResult:
    epochs: EpochTable
    f0: int
    n_samples: int
    config: WindowConfig
    params: DetectionParams
    windows: WindowTable | None = field(default=None, repr=False)


class _Variant:
    """Per-parameter-set state: comb bank, fuser and collected outputs."""

    def __init__(self, config, params, grid, keep_windows):
        self.params = params
        self.bank = comb_bank(grid, params)
        self.fuser = EpochFuser(config, params)
        self.parts = []
        self.keep_windows = keep_windows
        self.win_parts = []


class Detector:
    """
    Sustained harmonic walking detector.

    Parameters
    ----------
    config : WindowConfig, optional
    params : DetectionParams or sequence of DetectionParams, optional
        Several parameter sets share one spectral pass.
    threads : int, optional
        Worker threads for window blocks. Output does not depend on it.
    block_windows : int, optional
        Windows per block.
    keep_windows : bool, optional
        Also return per-window results.
    """

    def __init__(self, config=None, params=None, threads=1, block_windows=DEFAULT_BLOCK_WINDOWS,
                 keep_windows=False):
        self.config = config or WindowConfig()
        if params is None:
            params = DetectionParams()
        self.multi = not isinstance(params, DetectionParams)
        self.params_list = list(params) if self.multi else [params]
        if not self.params_list:
            raise ConfigurationError("need at least one parameter set")
        if threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if block_windows < 1:
            raise ConfigurationError("block_windows must be >= 1")
        self.threads = int(threads)
        self.block_windows = int(block_windows)
        self.keep_windows = keep_windows

    # ------------------------------------------------------------------ API
    def run(self, signal):
        """Detect over an in-memory TriaxialSignal."""
        return self.run_chunks([signal.samples], signal.f0)

    def run_chunks(self, chunks, f0):
        """
        Detect over a stream of (n, 3) sample chunks.

        Returns
        -------
        DetectionResult or list of DetectionResult
            A list when several parameter sets were given.
        """
        results = None
        for results in self._stream(chunks, f0):
            pass
        return results if self.multi else results[0]

    def iter_epochs(self, chunks, f0):
        """
        Yield EpochTable pieces as soon as they are final.

        Only valid for a single parameter set. Bounded memory: past windows
        and samples are discarded.
        """
        if self.multi:
            raise ConfigurationError("iter_epochs needs a single parameter set")
        yield from self._stream(chunks, f0, emit=True)

    # ------------------------------------------------------------- internals
    def _stream(self, chunks, f0, emit=False):
        cfg = self.config
        f0 = TriaxialSignal(np.zeros((0, 3)), f0).f0
        tau, stride = cfg.tau(f0), cfg.stride(f0)
        grid = cfg.grid(f0)
        variants = [_Variant(cfg, p, grid, self.keep_windows) for p in self.params_list]
        bw = self.block_windows

        buf = np.zeros((0, 3))
        buf_start = 0  # absolute sample index of buf[0]
        n_seen = 0
        next_block = 0
        vm_next = 0  # next epoch whose vm is not yet computed
        vm_pending = np.zeros(0)
        vm_first = 0  # epoch index of vm_pending[0]

        pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None

        def block_job(block_idx, samples, offset, n_windows):
            starts = np.arange(block_idx * bw, block_idx * bw + n_windows, dtype=np.int64) * stride
            mags = block_magnitudes(samples, starts - offset, cfg, f0)
            return block_idx, starts, [score_block(mags, v.bank) for v in variants]

        def run_jobs(jobs):
            if pool is None or len(jobs) == 1:
                return [block_job(*j) for j in jobs]
            return list(pool.map(lambda j: block_job(*j), jobs))

        def consume(results):
            nonlocal vm_pending, vm_first
            out = []
            for block_idx, starts, scored in results:
                for v, (score, cand, axis) in zip(variants, scored):
                    s_hat = v.bank.candidates_hz[cand]
                    fused = v.fuser.push(block_idx * bw, score, s_hat)
                    if not emit:
                        v.parts.append(fused)
                    if v.keep_windows:
                        v.win_parts.append((starts, score, s_hat, axis))
                    out.append(fused)
            return out

        def take_vm(parts):
            nonlocal vm_pending, vm_first
            tables = []
            for epochs, *rest in parts:
                n = epochs.size
                if n == 0:
                    continue
                lo = int(epochs[0]) - vm_first
                tables.append(assemble([(epochs, *rest)], vm_pending[lo : lo + n]))
            return tables

        try:
            for chunk in chunks:
                chunk = np.asarray(chunk, dtype=np.float64)
                if chunk.ndim != 2 or chunk.shape[1] != 3:
                    raise ShapeError(f"chunk must have shape (n, 3), got {chunk.shape}")
                if chunk.size:
                    TriaxialSignal(chunk, f0)  # finiteness check
                buf = np.concatenate([buf, chunk]) if buf.size else np.ascontiguousarray(chunk)
                n_seen += chunk.shape[0]

                # vm counts for every complete epoch
                n_ep = n_seen // f0
                if n_ep > vm_next:
                    lo = vm_next * f0 - buf_start
                    vm_new = _backend.kernels.epoch_vm(buf[lo : lo + (n_ep - vm_next) * f0], f0)
                    vm_pending = np.concatenate([vm_pending, vm_new])
                    vm_next = n_ep

                # full blocks whose last window is inside the data
                jobs = []
                while (next_block * bw + bw - 1) * stride + tau <= n_seen:
                    lo = next_block * bw * stride - buf_start
                    hi = (next_block * bw + bw - 1) * stride + tau - buf_start
                    jobs.append((next_block, buf[lo:hi], lo + buf_start, bw))
                    next_block += 1
                    if len(jobs) >= max(self.threads, 1) * 2:
                        done = consume(run_jobs(jobs))
                        jobs = []
                        if emit:
                            yield from take_vm(done)
                if jobs:
                    done = consume(run_jobs(jobs))
                    if emit:
                        yield from take_vm(done)

                # release samples no longer needed
                keep_from = min(next_block * bw * stride, vm_next * f0)
                if keep_from > buf_start:
                    buf = buf[keep_from - buf_start :].copy()
                    buf_start = keep_from
                if emit:
                    trim = variants[0].fuser.next_epoch - vm_first
                    if trim > 0:
                        vm_pending = vm_pending[trim:]
                        vm_first += trim

            # final partial block
            n_windows = max((n_seen - tau) // stride + 1, 0) if n_seen >= tau else 0
            remaining = n_windows - next_block * bw
            if remaining > 0:
                lo = next_block * bw * stride - buf_start
                hi = (n_windows - 1) * stride + tau - buf_start
                done = consume(run_jobs([(next_block, buf[lo:hi], lo + buf_start, remaining)]))
                if emit:
                    yield from take_vm(done)
            n_epochs = n_seen // f0
            final = []
            for v in variants:
                fused = v.fuser.finish(n_epochs)
                v.parts.append(fused)
                final.append(fused)
            if emit:
                yield from take_vm(final[:1])
                return
        finally:
            if pool is not None:
                pool.shutdown(wait=True)

        vm_all = vm_pending
        results = []
        for v in variants:
            epochs = assemble([p for p in v.parts if p[0].size], vm_all) if n_epochs else EpochTable.empty()
            windows = None
            if v.keep_windows:
                if v.win_parts:
                    cols = [np.concatenate(c) for c in zip(*v.win_parts)]
                else:
                    cols = [np.zeros(0, np.int64), np.zeros(0), np.zeros(0), np.zeros(0, np.int64)]
                windows = WindowTable(*cols, delta=v.params.delta)
            results.append(DetectionResult(epochs, f0, n_seen, self.config, v.params, windows))
        yield results


def detect(signal, config=None, params=None, **kwargs):
    """Run the detector over an in-memory signal."""
    return Detector(config, params, **kwargs).run(signal)

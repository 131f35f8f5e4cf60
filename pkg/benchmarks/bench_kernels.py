"""
Compare the compiled kernels with the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--seconds N] [--repeat R]``.
Each kernel is fed identical inputs; the script also checks that both
backends agree before reporting timings.
"""
import argparse
import timeit

import numpy as np

from shwalk import _backend
from shwalk.comb import DetectionParams, comb_bank
from shwalk.spectral import WindowConfig, hann_weights, window_starts


def _inputs(seconds, f0, seed):
    rng = np.random.default_rng(seed)
    t = np.arange(seconds * f0) / f0
    x = rng.normal(0, 0.05, (t.size, 3))
    x[:, 2] += 1.0 + 0.3 * np.sin(2 * np.pi * 2.0 * t)
    return np.ascontiguousarray(x)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--seconds", type=int, default=3600)
    ap.add_argument("--f0", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    compiled = _backend.compiled_kernels()
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    backends = {"python": _backend.python_kernels, "cython": compiled}

    f0 = args.f0
    config, params = WindowConfig(), DetectionParams()
    samples = _inputs(args.seconds, f0, args.seed)
    starts = window_starts(len(samples), config, f0).astype(np.int64)
    tau = config.tau(f0)
    grid = config.grid(f0)
    taper = hann_weights(tau)
    bank = comb_bank(grid, params)
    wins = _backend.python_kernels.prepare_windows(samples, starts, tau, taper, grid.nfft)
    mags = np.ascontiguousarray(np.abs(np.fft.rfft(wins, axis=-1)))
    mags[..., 0] = 0.0

    cases = {
        "epoch_vm": lambda k: k.epoch_vm(samples, f0),
        "prepare_windows": lambda k: k.prepare_windows(samples, starts, tau, taper, grid.nfft),
        "score_windows": lambda k: k.score_windows(mags, bank.index, params.score_cap),
    }
    print(f"{args.seconds} s at {f0} Hz, {len(starts)} windows, {bank.index.shape[0]} candidates")
    print(f"{'kernel':<18}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for name, fn in cases.items():
        ref = fn(backends["python"])
        out = fn(backends["cython"])
        for a, b in zip(ref if isinstance(ref, tuple) else (ref,), out if isinstance(out, tuple) else (out,)):
            np.testing.assert_allclose(np.asarray(a), np.asarray(b), rtol=1e-12, atol=1e-12)
        times = {}
        for label, k in backends.items():
            times[label] = min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
        print(f"{name:<18}{times['python']:>12.4f}{times['cython']:>12.4f}"
              f"{times['python'] / times['cython']:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

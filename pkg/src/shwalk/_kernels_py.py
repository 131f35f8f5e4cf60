"""Pure numpy implementations of the hot kernels.

Same call signatures as the compiled ``_kernels`` module; used when the
extension is unavailable or ``SHWALK_PURE_PYTHON`` is set.
"""
import numpy as np


def epoch_vm(samples, f0):
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    n_epochs = samples.shape[0] // f0
    x = samples[: n_epochs * f0]
    vm = np.sqrt(x[:, 0] * x[:, 0] + x[:, 1] * x[:, 1] + x[:, 2] * x[:, 2])
    return np.abs(vm - 1.0).reshape(n_epochs, f0).mean(axis=1)


def prepare_windows(samples, starts, tau, taper, nfft):
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    idx = starts[:, None] + np.arange(tau)[None, :]
    seg = samples[idx]  # (W, tau, 3)
    seg = np.transpose(seg, (0, 2, 1))
    # centre on the first sample so constant windows cancel exactly
    seg = seg - seg[:, :, :1]
    seg -= seg.mean(axis=2, keepdims=True)
    out = np.zeros((starts.size, 3, nfft))
    out[:, :, :tau] = seg * taper
    return out


def score_windows(mags, comb_idx, cap):
    y = score_matrix(mags, comb_idx, cap)  # (W, 3, C)
    per_s = y.max(axis=1)
    best = np.argmax(per_s, axis=1)
    rows = np.arange(y.shape[0])
    max_score = per_s[rows, best]
    best_axis = np.argmax(y[rows, :, best], axis=1)
    return max_score, best.astype(np.int64), best_axis.astype(np.int64)


def score_matrix(mags, comb_idx, cap):
    mags = np.asarray(mags, dtype=np.float64)
    total = mags.sum(axis=-1)
    # padded comb entries (-1) point at an appended zero bin
    padded = np.concatenate([mags, np.zeros(mags.shape[:-1] + (1,))], axis=-1)
    idx = np.where(comb_idx < 0, mags.shape[-1], comb_idx)
    comb = padded[..., idx].sum(axis=-1)  # (..., C)
    rest = total[..., None] - comb
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(rest > 0, comb / rest, cap)
    y = np.where(comb > 0, np.minimum(y, cap), 0.0)
    return y

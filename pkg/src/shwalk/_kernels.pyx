# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: window preparation, comb scoring, epoch vm counts."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


def epoch_vm(double[:, ::1] samples, Py_ssize_t f0):
    cdef Py_ssize_t n_epochs = samples.shape[0] // f0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n_epochs)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t e, i, r
    cdef double acc, x, y, z
    with nogil:
        for e in range(n_epochs):
            acc = 0.0
            for i in range(f0):
                r = e * f0 + i
                x = samples[r, 0]
                y = samples[r, 1]
                z = samples[r, 2]
                acc += fabs(sqrt(x * x + y * y + z * z) - 1.0)
            out[e] = acc / f0
    return out_arr


def prepare_windows(double[:, ::1] samples, const cnp.int64_t[::1] starts, Py_ssize_t tau,
                    const double[::1] taper, Py_ssize_t nfft):
    cdef Py_ssize_t n_win = starts.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out_arr = np.zeros((n_win, 3, nfft))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t w, k, u, s0
    cdef double mean, x0
    with nogil:
        for w in range(n_win):
            s0 = starts[w]
            for k in range(3):
                # centre on the first sample so constant windows cancel exactly
                x0 = samples[s0, k]
                mean = 0.0
                for u in range(tau):
                    mean += samples[s0 + u, k] - x0
                mean = mean / tau
                for u in range(tau):
                    out[w, k, u] = ((samples[s0 + u, k] - x0) - mean) * taper[u]
    return out_arr


def score_windows(const double[:, :, ::1] mags, const cnp.int64_t[:, ::1] comb_idx, double cap):
    cdef Py_ssize_t n_win = mags.shape[0]
    cdef Py_ssize_t n_bins = mags.shape[2]
    cdef Py_ssize_t n_cand = comb_idx.shape[0]
    cdef Py_ssize_t width = comb_idx.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] score_arr = np.empty(n_win)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cand_arr = np.empty(n_win, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] axis_arr = np.empty(n_win, dtype=np.int64)
    cdef double[::1] score_out = score_arr
    cdef cnp.int64_t[::1] cand_out = cand_arr
    cdef cnp.int64_t[::1] axis_out = axis_arr
    cdef Py_ssize_t w, k, c, j, b, best_c, best_k, arg_k
    cdef double total[3]
    cdef double comb, rest, y, y_s, best
    with nogil:
        for w in range(n_win):
            for k in range(3):
                total[k] = 0.0
                for b in range(n_bins):
                    total[k] += mags[w, k, b]
            best = -1.0
            best_c = 0
            best_k = 0
            for c in range(n_cand):
                y_s = -1.0
                arg_k = 0
                for k in range(3):
                    comb = 0.0
                    for j in range(width):
                        b = comb_idx[c, j]
                        if b < 0:
                            break
                        comb += mags[w, k, b]
                    if comb > 0.0:
                        rest = total[k] - comb
                        if rest > 0.0:
                            y = comb / rest
                            if y > cap:
                                y = cap
                        else:
                            y = cap
                    else:
                        y = 0.0
                    if y > y_s:
                        y_s = y
                        arg_k = k
                if y_s > best:
                    best = y_s
                    best_c = c
                    best_k = arg_k
            score_out[w] = best
            cand_out[w] = best_c
            axis_out[w] = best_k
    return score_arr, cand_arr, axis_arr

"""Fallback Goertzel bank: the same recurrence run by ``scipy.signal.lfilter``."""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

_CHUNK_SAMPLES = 1 << 21


def goertzel_frames(x, starts, length, freqs, fs, window=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    freqs = np.asarray(freqs, dtype=np.float64)
    out = np.zeros((starts.size, freqs.size))
    if starts.size == 0 or length == 0:
        return out
    # zero padding so out-of-range frames read zeros
    pad_lo = max(0, -int(starts.min()))
    pad_hi = max(0, int(starts.max()) + length - x.size)
    xp = np.pad(x, (pad_lo, pad_hi)) if pad_lo or pad_hi else x
    offs = np.arange(length)
    coefs = 2.0 * np.cos(2.0 * np.pi * freqs / fs)
    step = max(1, _CHUNK_SAMPLES // length)
    for c0 in range(0, starts.size, step):
        idx = starts[c0:c0 + step, None] + pad_lo + offs
        frames = xp[idx]
        if window is not None:
            frames = frames * window
        for j, c in enumerate(coefs):
            y = lfilter([1.0], [1.0, -c, 1.0], frames, axis=1)
            q1 = y[:, -1]
            q2 = y[:, -2] if length > 1 else 0.0
            out[c0:c0 + step, j] = q1 * q1 + q2 * q2 - c * q1 * q2
    return out

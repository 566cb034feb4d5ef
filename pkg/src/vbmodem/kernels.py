"""Backend selection for the Goertzel bank.

The compiled extension is used when it imports; setting
``VBMODEM_BACKEND=python`` forces the scipy fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _goertzel_py

try:
    from . import _goertzel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKEND = "compiled" if _compiled is not None and os.environ.get("VBMODEM_BACKEND") != "python" else "python"


def goertzel_frames_python(x, starts, length, freqs, fs, window=None):
    return _goertzel_py.goertzel_frames(x, starts, length, freqs, fs, window)


def goertzel_frames_compiled(x, starts, length, freqs, fs, window=None):
    if _compiled is None:
        raise RuntimeError("compiled Goertzel extension is not available")
    return _compiled.goertzel_frames(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(starts, dtype=np.int64),
        int(length),
        np.ascontiguousarray(freqs, dtype=np.float64),
        float(fs),
        None if window is None else np.ascontiguousarray(window, dtype=np.float64),
    )


def goertzel_frames(x, starts, length, freqs, fs, window=None):
    """Goertzel power for every (frame start, frequency) pair.

    Frame ``i`` covers ``x[starts[i] : starts[i] + length]``; samples outside
    ``x`` read as zero. Returns an array of shape ``(len(starts), len(freqs))``
    holding ``|sum_n x[n] w[n] exp(-j 2 pi f n / fs)|**2``.
    """
    if BACKEND == "compiled":
        return goertzel_frames_compiled(x, starts, length, freqs, fs, window)
    return goertzel_frames_python(x, starts, length, freqs, fs, window)

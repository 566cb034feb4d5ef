"""Time the compiled and pure-Python Goertzel banks on a realistic decode load.

    python benchmarks/bench_kernels.py [--seconds 60] [--repeat 3]
"""

import argparse
import time

import numpy as np

from vbmodem import kernels
from vbmodem.freqplan import default_plan


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=60.0, help="audio length")
    ap.add_argument("--fs", type=int, default=96000)
    ap.add_argument("--tone-ms", type=float, default=50.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x = rng.standard_normal(int(args.seconds * args.fs))
    freqs = np.array(default_plan().frequencies, dtype=np.float64)
    n = int(args.tone_ms * args.fs / 1000)
    # alignment-style dense framing: hop n/8, length n/2
    hop, length = n // 8, n // 2
    starts = np.arange(0, x.size, hop, dtype=np.int64)
    window = np.hanning(length)

    backends = [("python", kernels.goertzel_frames_python)]
    if kernels._compiled is not None:
        backends.insert(0, ("compiled", kernels.goertzel_frames_compiled))
    else:
        print("compiled extension not built; timing python only")

    print(f"{starts.size} frames x {freqs.size} freqs x {length} samples")
    results = {}
    for name, fn in backends:
        for win in (None, window):
            t, out = _best(lambda: fn(x, starts, length, freqs, args.fs, win), args.repeat)
            tag = f"{name}/{'hann' if win is not None else 'rect'}"
            results[tag] = (t, out)
            rate = starts.size * freqs.size * length / t / 1e6
            print(f"{tag:16s} {t * 1e3:9.1f} ms  {rate:8.1f} Msample-probes/s")

    if "compiled/rect" in results:
        for win in ("rect", "hann"):
            tc, oc = results[f"compiled/{win}"]
            tp, op = results[f"python/{win}"]
            err = np.max(np.abs(oc - op) / np.maximum(np.abs(op), 1e-300))
            print(f"{win}: speedup {tp / tc:.2f}x, max relative difference {err:.2e}")


if __name__ == "__main__":
    main()

"""Mono 16-bit PCM WAV persistence."""

from __future__ import annotations

import wave

import numpy as np

from .modem import SampleBuffer


class WavFormatError(ValueError):
    pass


def quantize(samples: np.ndarray) -> np.ndarray:
    q = np.round(np.asarray(samples, dtype=np.float64) * 32767)
    return np.clip(q, -32768, 32767).astype("<i2")


def write_wav(path, buf: SampleBuffer) -> None:
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(buf.sample_rate))
        w.writeframes(quantize(buf.samples).tobytes())


def read_wav(path) -> SampleBuffer:
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1 or w.getsampwidth() != 2:
                raise WavFormatError(
                    f"{path}: need mono 16-bit PCM, got {w.getnchannels()} ch "
                    f"x {8 * w.getsampwidth()} bit")
            rate = w.getframerate()
            data = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise WavFormatError(f"{path}: {exc}") from exc
    pcm = np.frombuffer(data[: len(data) // 2 * 2], dtype="<i2")
    return SampleBuffer(pcm.astype(np.float64) / 32767, rate)

"""Transmit chain: framing, Golay, Gray tones, audio synthesis, carrier modulation."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil

import numpy as np

from .freqplan import FrequencyPlan
from .golay import encode_int
from .graymap import ToneSymbol, tone_of_bits

HEADER_BITS = 16
WORD_MESSAGE_BITS = 12
WORD_BITS = 24
BITS_PER_TONE = 6
TONES_PER_WORD = WORD_BITS // BITS_PER_TONE
PREAMBLE_SILENCE_MS = 200
MAX_PAYLOAD = 1 << HEADER_BITS


class PayloadTooLong(ValueError):
    pass


@dataclass(frozen=True)
class SampleBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class ModemConfig:
    tone_ms: float = 50
    gap_ms: float = 50
    carrier_hz: float | None = None
    sample_rate: int = 96000
    amplitude: float = 0.8
    # raised-cosine edge on every tone burst, capped at a sixth of the tone
    ramp_ms: float = 2.0

    def __post_init__(self):
        if self.tone_ms <= 0:
            raise ValueError("tone_ms must be positive")
        if self.gap_ms < 0:
            raise ValueError("gap_ms must be non-negative")
        if not 0 < self.amplitude <= 1:
            raise ValueError("amplitude must lie in (0, 1]")

    @property
    def tone_samples(self) -> int:
        return int(round(self.tone_ms * self.sample_rate / 1000))

    @property
    def gap_samples(self) -> int:
        return int(round(self.gap_ms * self.sample_rate / 1000))

    @property
    def period_samples(self) -> int:
        return self.tone_samples + self.gap_samples

    def check_nyquist(self, plan: FrequencyPlan) -> None:
        if self.carrier_hz is None:
            return
        top = self.carrier_hz + max(plan.group_a) + max(plan.group_b)
        if top >= self.sample_rate / 2:
            raise ValueError(
                f"upper sideband {top} Hz exceeds Nyquist {self.sample_rate / 2} Hz; "
                "raise sample_rate or lower carrier_hz")


def frame_bits(payload_len: int) -> int:
    """Pre-Golay bit count for a payload of ``payload_len`` bytes, padding included."""
    raw = HEADER_BITS + 8 * payload_len
    return ceil(raw / WORD_MESSAGE_BITS) * WORD_MESSAGE_BITS


def tone_count(payload_len: int) -> int:
    return frame_bits(payload_len) // WORD_MESSAGE_BITS * TONES_PER_WORD


def pack_payload(payload: bytes) -> np.ndarray:
    """16-bit big-endian length, payload MSB first, zero pad to a 12-bit multiple."""
    if len(payload) >= MAX_PAYLOAD:
        raise PayloadTooLong(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD - 1}")
    head = len(payload).to_bytes(2, "big")
    bits = np.unpackbits(np.frombuffer(head + bytes(payload), dtype=np.uint8))
    pad = frame_bits(len(payload)) - bits.size
    return np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])


def codeword_bits(payload: bytes) -> np.ndarray:
    """Channel bits: every 12-bit message replaced by its 24-bit codeword."""
    msgs = pack_payload(payload).reshape(-1, WORD_MESSAGE_BITS)
    weights = 1 << np.arange(WORD_MESSAGE_BITS - 1, -1, -1)
    words = [encode_int(int(m)) for m in msgs @ weights]
    shifts = np.arange(WORD_BITS - 1, -1, -1)
    return ((np.array(words, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def encode_payload(payload: bytes, plan: FrequencyPlan) -> list[ToneSymbol]:
    bits = codeword_bits(payload).reshape(-1, BITS_PER_TONE)
    return [tone_of_bits(group.tolist(), plan) for group in bits]


def _edge_window(n: int, cfg: ModemConfig) -> np.ndarray:
    r = min(int(round(cfg.ramp_ms * cfg.sample_rate / 1000)), n // 6)
    w = np.ones(n)
    if r > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * (np.arange(r) + 0.5) / r)
        w[:r] = ramp
        w[n - r:] = ramp[::-1]
    return w


def _baseband_burst(tone: ToneSymbol, n: int, cfg: ModemConfig) -> np.ndarray:
    t = np.arange(n) / cfg.sample_rate
    m = np.sin(2 * np.pi * tone.f1 * t) + np.sin(2 * np.pi * tone.f2 * t)
    return 0.5 * cfg.amplitude * m * _edge_window(n, cfg)


def _usb_burst(tone: ToneSymbol, n: int, cfg: ModemConfig) -> np.ndarray:
    # carrier plus the two upper sidebands; peak of the bracket is at most 2
    fc = cfg.carrier_hz
    t = np.arange(n) / cfg.sample_rate
    y = (np.sin(2 * np.pi * fc * t)
         - 0.5 * np.cos(2 * np.pi * (fc + tone.f1) * t)
         - 0.5 * np.cos(2 * np.pi * (fc + tone.f2) * t))
    return 0.5 * cfg.amplitude * y * _edge_window(n, cfg)


def _render(segments, cfg: ModemConfig, burst) -> np.ndarray:
    """``segments`` is a list of ``(tone, tone_samples, gap_samples)``."""
    total = sum(n + g for _, n, g in segments)
    out = np.zeros(total)
    cache: dict[tuple[ToneSymbol, int], np.ndarray] = {}
    pos = 0
    for tone, n, g in segments:
        key = (tone, n)
        if key not in cache:
            cache[key] = burst(tone, n, cfg)
        out[pos:pos + n] = cache[key]
        pos += n + g
    return out


def _body_segments(tones, cfg: ModemConfig):
    return [(t, cfg.tone_samples, cfg.gap_samples) for t in tones]


def synthesize(tones, cfg: ModemConfig) -> SampleBuffer:
    """Baseband dual-tone audio, ``tone_ms`` of sound then ``gap_ms`` of silence per symbol."""
    return SampleBuffer(_render(_body_segments(tones, cfg), cfg, _baseband_burst),
                        cfg.sample_rate)


def modulate(tones, cfg: ModemConfig) -> SampleBuffer:
    """Upper-sideband carrier audio for each tone; gaps are silent."""
    if cfg.carrier_hz is None:
        raise ValueError("modulate needs cfg.carrier_hz")
    top = cfg.carrier_hz + max((t.f1 for t in tones), default=0)
    if top >= cfg.sample_rate / 2:
        raise ValueError(f"sideband at {top} Hz violates Nyquist for {cfg.sample_rate} Hz")
    return SampleBuffer(_render(_body_segments(tones, cfg), cfg, _usb_burst),
                        cfg.sample_rate)


def preamble_segments(plan: FrequencyPlan, cfg: ModemConfig):
    """Four double-length (A0, B0) tones then one (A7, B7) tone."""
    first = ToneSymbol(plan.group_a[0], plan.group_b[0])
    last = ToneSymbol(plan.group_a[-1], plan.group_b[-1])
    segs = [(first, 2 * cfg.tone_samples, cfg.gap_samples)] * 4
    segs.append((last, cfg.tone_samples, cfg.gap_samples))
    return segs


def preamble_samples(plan: FrequencyPlan, cfg: ModemConfig) -> int:
    return sum(n + g for _, n, g in preamble_segments(plan, cfg))


def body_offset(plan: FrequencyPlan, cfg: ModemConfig) -> int:
    """Sample index of the first data tone in a transmission."""
    return preamble_samples(plan, cfg) + int(round(PREAMBLE_SILENCE_MS * cfg.sample_rate / 1000))


def build_transmission(payload: bytes, plan: FrequencyPlan, cfg: ModemConfig) -> SampleBuffer:
    cfg.check_nyquist(plan)
    burst = _usb_burst if cfg.carrier_hz is not None else _baseband_burst
    tones = encode_payload(payload, plan)
    pre = _render(preamble_segments(plan, cfg), cfg, burst)
    gap = np.zeros(body_offset(plan, cfg) - pre.size)
    body = _render(_body_segments(tones, cfg), cfg, burst)
    return SampleBuffer(np.concatenate([pre, gap, body]), cfg.sample_rate)


def raw_bit_rate(tone_ms, gap_ms):
    """Channel bits per second: six bits per symbol period."""
    return Fraction(BITS_PER_TONE * 1000) / (Fraction(tone_ms) + Fraction(gap_ms))


def effective_bit_rate(tone_ms, gap_ms, fec: bool = True):
    r = raw_bit_rate(tone_ms, gap_ms)
    return r / 2 if fec else r


def bits_per_call(seconds, tone_ms, gap_ms, fec: bool = True) -> int:
    """Information bits carried by ``seconds`` of tone body."""
    return int(effective_bit_rate(tone_ms, gap_ms, fec) * seconds)

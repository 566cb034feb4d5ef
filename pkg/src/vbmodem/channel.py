"""Receive-path simulation: microphone square law, phone band, noise, loss, AGC."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from math import gcd, inf, isfinite

import numpy as np
from scipy.signal import firwin, kaiserord, lfilter, lfilter_zi, oaconvolve, resample_poly

from .modem import SampleBuffer

TELEPHONY_RATE = 8000
# inches -> dB; sweep labels only
DISTANCE_PRESETS_DB = {0: 0.0, 25: 6.0, 50: 10.0, 100: 14.0}

_NOISE_STREAM = 1
_LOSS_STREAM = 2
_PROFILE_STREAM = 3


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"          # none | white | profile
    snr_db: float = inf
    profile_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("none", "white", "profile"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "profile" and not self.profile_path:
            raise ValueError("profile noise needs profile_path")


@dataclass(frozen=True)
class LossSpec:
    probability: float = 0.0
    frame_ms: float = 20.0

    def __post_init__(self):
        if not 0 <= self.probability <= 1:
            raise ValueError("loss probability must lie in [0, 1]")
        if self.frame_ms <= 0:
            raise ValueError("frame_ms must be positive")


@dataclass(frozen=True)
class AgcSpec:
    target_rms: float = 0.1
    time_constant_ms: float = 200.0


@dataclass(frozen=True)
class ChannelConfig:
    gain_a: float = 1.0
    gain_b: float = 0.3
    band_low_hz: float = 300.0
    band_high_hz: float = 3400.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    loss: LossSpec = field(default_factory=LossSpec)
    agc: AgcSpec | None = None
    attenuation_db: float = 0.0
    telephony_resample: bool = False
    seed: int = 0
    oversample: int = 4

    def __post_init__(self):
        if self.gain_b < 0:
            raise ValueError("gain_b must be non-negative")
        if not 0 < self.band_low_hz < self.band_high_hz:
            raise ValueError("need 0 < band_low_hz < band_high_hz")
        if self.oversample < 1:
            raise ValueError("oversample must be >= 1")

    # flat key=value form used by config files and the CLI
    def to_mapping(self) -> dict[str, str]:
        d = {
            "gain_a": self.gain_a, "gain_b": self.gain_b,
            "band_low_hz": self.band_low_hz, "band_high_hz": self.band_high_hz,
            "noise": self.noise.kind, "snr_db": self.noise.snr_db,
            "loss_prob": self.loss.probability, "loss_frame_ms": self.loss.frame_ms,
            "agc": "on" if self.agc else "off",
            "attenuation_db": self.attenuation_db,
            "telephony_resample": "on" if self.telephony_resample else "off",
            "seed": self.seed, "oversample": self.oversample,
        }
        if self.noise.profile_path:
            d["noise_file"] = self.noise.profile_path
        if self.agc:
            d["agc_target_rms"] = self.agc.target_rms
            d["agc_time_constant_ms"] = self.agc.time_constant_ms
        return {k: str(v) for k, v in d.items()}

    @classmethod
    def from_mapping(cls, m: dict[str, str]) -> "ChannelConfig":
        def flag(v):
            return str(v).lower() in ("1", "on", "true", "yes")

        noise_kind = m.get("noise", "none")
        if noise_kind == "none" and "noise_file" in m:
            noise_kind = "profile"
        elif noise_kind == "none" and "snr_db" in m:
            noise_kind = "white"
        noise = NoiseSpec(noise_kind, float(m.get("snr_db", inf)), m.get("noise_file"))
        loss = LossSpec(float(m.get("loss_prob", 0.0)), float(m.get("loss_frame_ms", 20.0)))
        agc = None
        if flag(m.get("agc", "off")) or "agc_target_rms" in m:
            agc = AgcSpec(float(m.get("agc_target_rms", 0.1)),
                          float(m.get("agc_time_constant_ms", 200.0)))
        known = {"gain_a", "gain_b", "band_low_hz", "band_high_hz", "noise", "snr_db",
                 "noise_file", "loss_prob", "loss_frame_ms", "agc", "agc_target_rms",
                 "agc_time_constant_ms", "attenuation_db", "telephony_resample", "seed",
                 "oversample"}
        unknown = set(m) - known
        if unknown:
            raise ValueError(f"unknown channel keys: {sorted(unknown)}")
        return cls(
            gain_a=float(m.get("gain_a", 1.0)), gain_b=float(m.get("gain_b", 0.3)),
            band_low_hz=float(m.get("band_low_hz", 300)),
            band_high_hz=float(m.get("band_high_hz", 3400)),
            noise=noise, loss=loss, agc=agc,
            attenuation_db=float(m.get("attenuation_db", 0.0)),
            telephony_resample=flag(m.get("telephony_resample", "off")),
            seed=int(m.get("seed", 0)), oversample=int(m.get("oversample", 4)),
        )


class NoiseProfileError(ValueError):
    pass


@lru_cache(maxsize=8)
def _interp_filter(up: int) -> np.ndarray:
    # 85 dB stopband from the original Nyquist down to 0.9 of it, so no image
    # of a near-Nyquist input survives upsampling to mix back into the band
    numtaps, beta = kaiserord(85.0, 0.1 / up)
    return firwin(numtaps | 1, 0.95 / up, window=("kaiser", beta))


_CHUNK = 1 << 18
_MARGIN = 256


def mic_nonlinearity(buf: SampleBuffer, gain_a: float = 1.0, gain_b: float = 0.3,
                     oversample: int = 4) -> SampleBuffer:
    """``A*s + B*s**2`` evaluated at ``oversample`` times the input rate.

    The square is formed on the upsampled signal and low-passed back to the
    original Nyquist before decimation, so products above the input Nyquist
    (``2*fc`` and friends) are removed instead of folding into the voiceband.
    Processed in overlapping blocks to bound memory.
    """
    x = buf.samples
    if gain_b == 0 or oversample == 1:
        return SampleBuffer(gain_a * x + gain_b * x * x, buf.sample_rate)
    h = _interp_filter(oversample)
    out = np.empty_like(x)
    n = x.size
    for start in range(0, n, _CHUNK):
        stop = min(n, start + _CHUNK)
        lo = max(0, start - _MARGIN)
        hi = min(n, stop + _MARGIN)
        u = resample_poly(x[lo:hi], oversample, 1, window=h)
        y = gain_a * u + gain_b * u * u
        d = resample_poly(y, 1, oversample, window=h)
        out[start:stop] = d[start - lo:start - lo + stop - start]
    return SampleBuffer(out, buf.sample_rate)


@lru_cache(maxsize=16)
def bandpass_taps(sample_rate: int, low_hz: float, high_hz: float) -> np.ndarray:
    nyq = sample_rate / 2
    if not 0 < low_hz < high_hz < nyq:
        raise ValueError("need 0 < low < high < Nyquist")
    width = min(300.0, low_hz, nyq - high_hz)
    numtaps, beta = kaiserord(60.0, width / nyq)
    numtaps |= 1  # odd length: integer group delay, type I linear phase
    return firwin(numtaps, [low_hz, high_hz], pass_zero=False, window=("kaiser", beta),
                  fs=sample_rate)


def voiceband_filter(buf: SampleBuffer, low_hz: float = 300.0,
                     high_hz: float = 3400.0) -> SampleBuffer:
    """Linear-phase band-pass, delay compensated (output aligned with input)."""
    h = bandpass_taps(int(buf.sample_rate), float(low_hz), float(high_hz))
    if buf.samples.size == 0:
        return buf
    y = oaconvolve(buf.samples, h)
    d = (h.size - 1) // 2
    return SampleBuffer(y[d:d + buf.samples.size], buf.sample_rate)


def telephony_resample(buf: SampleBuffer, rate: int = TELEPHONY_RATE) -> SampleBuffer:
    """Down to the telephone rate and back up, both with linear-phase filters."""
    if buf.sample_rate == rate:
        return buf
    r = Fraction(rate, buf.sample_rate)
    down = resample_poly(buf.samples, r.numerator, r.denominator)
    back = resample_poly(down, r.denominator, r.numerator)
    n = buf.samples.size
    if back.size < n:
        back = np.pad(back, (0, n - back.size))
    return SampleBuffer(back[:n], buf.sample_rate)


def active_rms(x: np.ndarray, sample_rate: int, frame_ms: float = 10.0,
               floor_db: float = -40.0) -> float:
    """RMS over 10 ms frames within ``floor_db`` of the loudest frame."""
    n = max(1, int(round(frame_ms * sample_rate / 1000)))
    m = x.size // n
    if m == 0:
        return float(np.sqrt(np.mean(x * x))) if x.size else 0.0
    ms = np.mean(x[: m * n].reshape(m, n) ** 2, axis=1)
    top = ms.max()
    if top == 0:
        return 0.0
    keep = ms >= top * 10 ** (floor_db / 10)
    return float(np.sqrt(ms[keep].mean()))


def _load_profile(path: str, sample_rate: int) -> np.ndarray:
    from .wavio import read_wav

    try:
        prof = read_wav(path)
    except FileNotFoundError as exc:
        raise NoiseProfileError(f"noise profile not found: {path}") from exc
    x = prof.samples
    if x.size == 0 or not np.any(x):
        raise NoiseProfileError(f"noise profile is empty: {path}")
    if prof.sample_rate != sample_rate:
        g = gcd(int(prof.sample_rate), int(sample_rate))
        x = resample_poly(x, sample_rate // g, prof.sample_rate // g)
    return x


def add_noise(buf: SampleBuffer, noise: NoiseSpec, seed: int = 0) -> SampleBuffer:
    """Mix noise so that active-signal RMS / noise RMS equals ``snr_db``.

    Silent input and ``kind == "none"`` (or infinite SNR) return the input.
    """
    if noise.kind == "none" or not isfinite(noise.snr_db) and noise.snr_db > 0:
        return buf
    x = buf.samples
    if x.size == 0:
        return buf
    if noise.kind == "white":
        n = np.random.default_rng([seed, _NOISE_STREAM]).standard_normal(x.size)
    else:
        prof = _load_profile(noise.profile_path, buf.sample_rate)
        off = int(np.random.default_rng([seed, _PROFILE_STREAM]).integers(prof.size))
        n = np.resize(np.roll(prof, -off), x.size)
    s_rms = active_rms(x, buf.sample_rate)
    n_rms = float(np.sqrt(np.mean(n * n)))
    if s_rms == 0 or n_rms == 0:
        return buf
    target = s_rms / 10 ** (noise.snr_db / 20)
    return SampleBuffer(x + n * (target / n_rms), buf.sample_rate)


def loss_mask(n_samples: int, sample_rate: int, frame_ms: float, probability: float,
              seed: int) -> np.ndarray:
    """Boolean per-sample mask, True where the containing frame was dropped."""
    flen = max(1, int(round(frame_ms * sample_rate / 1000)))
    n_frames = -(-n_samples // flen)
    dropped = np.random.default_rng([seed, _LOSS_STREAM]).random(n_frames) < probability
    return np.repeat(dropped, flen)[:n_samples]


def drop_packets(buf: SampleBuffer, frame_ms: float = 20.0, probability: float = 0.0,
                 seed: int = 0) -> SampleBuffer:
    if not 0 <= probability <= 1:
        raise ValueError("probability must lie in [0, 1]")
    if probability == 0:
        return buf
    mask = loss_mask(buf.samples.size, buf.sample_rate, frame_ms, probability, seed)
    y = buf.samples.copy()
    y[mask] = 0.0
    return SampleBuffer(y, buf.sample_rate)


def apply_agc(buf: SampleBuffer, target_rms: float, time_constant_ms: float = 200.0,
              min_gain: float = 0.1, max_gain: float = 10.0) -> SampleBuffer:
    """Drive the windowed RMS toward ``target_rms`` with first-order gain smoothing."""
    if target_rms <= 0:
        raise ValueError("target_rms must be positive")
    x = buf.samples
    if x.size == 0:
        return buf
    w = max(1, int(round(time_constant_ms * buf.sample_rate / 1000)))
    # centred moving mean of x**2, normalised by the samples actually covered
    kernel = np.ones(w)
    energy = oaconvolve(x * x, kernel)[(w - 1) // 2:(w - 1) // 2 + x.size]
    count = oaconvolve(np.ones(x.size), kernel)[(w - 1) // 2:(w - 1) // 2 + x.size]
    rms = np.sqrt(np.maximum(energy, 0) / np.maximum(count, 1))
    with np.errstate(divide="ignore"):
        raw = np.where(rms > 0, target_rms / rms, max_gain)
    raw = np.clip(raw, min_gain, max_gain)
    alpha = 1.0 - np.exp(-1.0 / w)
    b, a = [alpha], [1.0, alpha - 1.0]
    g, _ = lfilter(b, a, raw, zi=lfilter_zi(b, a) * raw[0])
    return SampleBuffer(x * g, buf.sample_rate)


def simulate(buf: SampleBuffer, cfg: ChannelConfig) -> SampleBuffer:
    """Full receive path; bit-identical for identical ``(buf, cfg)``."""
    if cfg.band_high_hz >= buf.sample_rate / 2:
        raise ValueError("band_high_hz must lie below the input Nyquist")
    x = buf
    if cfg.attenuation_db:
        x = SampleBuffer(x.samples * 10 ** (-cfg.attenuation_db / 20), x.sample_rate)
    x = mic_nonlinearity(x, cfg.gain_a, cfg.gain_b, cfg.oversample)
    x = voiceband_filter(x, cfg.band_low_hz, cfg.band_high_hz)
    if cfg.telephony_resample:
        x = telephony_resample(x)
    x = add_noise(x, cfg.noise, cfg.seed)
    x = drop_packets(x, cfg.loss.frame_ms, cfg.loss.probability, cfg.seed)
    if cfg.agc is not None:
        x = apply_agc(x, cfg.agc.target_rms, cfg.agc.time_constant_ms)
    return x


def identity_config(**kw) -> ChannelConfig:
    """Linear microphone, no noise, loss or AGC."""
    return replace(ChannelConfig(gain_b=0.0), **kw)

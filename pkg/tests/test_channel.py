from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import binom

from vbmodem.channel import (AgcSpec, ChannelConfig, LossSpec, NoiseProfileError, NoiseSpec,
                             active_rms, add_noise, apply_agc, drop_packets, identity_config,
                             loss_mask, mic_nonlinearity, simulate, telephony_resample,
                             voiceband_filter)
from vbmodem.graymap import ToneSymbol
from vbmodem.kernels import goertzel_frames
from vbmodem.modem import ModemConfig, SampleBuffer, modulate
from vbmodem.wavio import write_wav

FS = 48000


def sine(f, secs=1.0, fs=FS, amp=0.5):
    t = np.arange(int(secs * fs)) / fs
    return SampleBuffer(amp * np.sin(2 * np.pi * f * t), fs)


def rms(x):
    return float(np.sqrt(np.mean(x * x)))


def mid(x, frac=0.2):
    k = int(frac * x.size)
    return x[k:x.size - k]


def power(x, f, fs=FS):
    return goertzel_frames(x, [0], x.size, [f], fs)[0, 0]


def test_linear_microphone():
    x = sine(1000)
    y = mic_nonlinearity(x, 2.0, 0.0)
    assert np.array_equal(y.samples, 2.0 * x.samples)


def test_square_law_products():
    x = sine(1000, amp=1.0)
    y = mic_nonlinearity(x, 0.0, 1.0).samples
    # sin^2 = (1 - cos 2t) / 2
    assert np.mean(mid(y)) == pytest.approx(0.5, abs=1e-3)
    m = mid(y)
    assert power(m, 2000) > 1e6 * power(m, 1000)


def test_chunked_nonlinearity_matches_whole(monkeypatch):
    import vbmodem.channel as ch

    rng = np.random.default_rng(1)
    x = SampleBuffer(0.3 * rng.standard_normal(5000), FS)
    whole = mic_nonlinearity(x).samples
    monkeypatch.setattr(ch, "_CHUNK", 700)
    chunked = mic_nonlinearity(x).samples
    assert np.max(np.abs(whole - chunked)) < 1e-6


def test_oversampling_guard():
    # 2 * 23 kHz folds to 2 kHz at 48 kHz unless the square runs oversampled
    x = sine(23000, amp=0.8)
    guarded = voiceband_filter(mic_nonlinearity(x, 1.0, 0.3, oversample=4)).samples
    naive = voiceband_filter(mic_nonlinearity(x, 1.0, 0.3, oversample=1)).samples
    assert 10 * np.log10(rms(mid(naive)) ** 2 / rms(mid(guarded)) ** 2) >= 40


@pytest.mark.parametrize("f, lo_db, hi_db", [
    (100, None, -40), (500, -3, 3), (1000, -3, 3), (3000, -3, 3), (4000, None, -40),
    (8000, None, -40)])
def test_voiceband_mask(f, lo_db, hi_db):
    x = sine(f)
    y = voiceband_filter(x).samples
    g = 20 * np.log10(rms(mid(y)) / rms(mid(x.samples)))
    assert g <= hi_db
    if lo_db is not None:
        assert g >= lo_db


def test_voiceband_is_aligned():
    x = sine(1000)
    y = voiceband_filter(x).samples
    assert np.max(np.abs(mid(y) - mid(x.samples))) < 0.01


def test_white_noise_snr():
    x = sine(1000)
    for snr in (0.0, 10.0):
        y = add_noise(x, NoiseSpec("white", snr), seed=3).samples
        n = y - x.samples
        assert rms(n) == pytest.approx(rms(x.samples) / 10 ** (snr / 20), rel=0.01)


def test_snr_measured_over_active_span():
    x = np.concatenate([sine(1000).samples, np.zeros(FS)])
    y = add_noise(SampleBuffer(x, FS), NoiseSpec("white", 0.0), seed=1).samples
    assert rms(y - x) == pytest.approx(rms(x[:FS]), rel=0.01)
    assert active_rms(x, FS) == pytest.approx(rms(x[:FS]), rel=1e-9)


def test_noise_none_and_determinism():
    x = sine(1000)
    assert add_noise(x, NoiseSpec(), seed=1) is x
    a = add_noise(x, NoiseSpec("white", 5), seed=9).samples
    b = add_noise(x, NoiseSpec("white", 5), seed=9).samples
    c = add_noise(x, NoiseSpec("white", 5), seed=10).samples
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_noise_profile(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "hum.wav"
    write_wav(path, SampleBuffer(0.1 * rng.standard_normal(8000), 8000))
    x = sine(1000)
    y = add_noise(x, NoiseSpec("profile", 0.0, str(path)), seed=2).samples
    assert rms(y - x.samples) == pytest.approx(rms(x.samples), rel=0.01)
    empty = tmp_path / "empty.wav"
    write_wav(empty, SampleBuffer(np.zeros(10), 8000))
    for bad in (empty, tmp_path / "missing.wav"):
        with pytest.raises(NoiseProfileError):
            add_noise(x, NoiseSpec("profile", 0.0, str(bad)))


def test_binomial_interval_reference():
    # [28, 74] holds at least 99% of Binomial(1000, 0.05)
    assert binom.cdf(74, 1000, 0.05) - binom.cdf(27, 1000, 0.05) >= 0.99


@pytest.mark.parametrize("seed", range(10))
def test_loss_count_within_binomial_range(seed):
    n_frames, flen = 1000, 960
    mask = loss_mask(n_frames * flen, FS, 20, 0.05, seed)
    dropped = int(mask.reshape(n_frames, flen)[:, 0].sum())
    assert 28 <= dropped <= 74
    # whole frames only
    assert np.all(mask.reshape(n_frames, flen).all(axis=1) == mask.reshape(n_frames, flen)[:, 0])


def test_loss_extremes():
    x = sine(1000)
    assert drop_packets(x, 20, 0.0) is x
    assert not np.any(drop_packets(x, 20, 1.0).samples)
    with pytest.raises(ValueError):
        LossSpec(1.5)


def test_agc_fixed_point():
    x = sine(1000, secs=2, amp=0.1 * np.sqrt(2))
    y = apply_agc(x, 0.1, 200).samples
    assert np.max(np.abs(mid(y, 0.25) - mid(x.samples, 0.25))) <= 0.01 * 0.1 * np.sqrt(2)


def test_agc_converges():
    x = sine(1000, secs=3, amp=0.4 * np.sqrt(2))
    y = apply_agc(x, 0.1, 200).samples
    assert rms(y[-FS // 2:]) == pytest.approx(0.1, rel=0.1)


def test_agc_silence():
    z = SampleBuffer(np.zeros(FS), FS)
    assert not np.any(apply_agc(z, 0.1).samples)


def test_telephony_resample_keeps_band():
    x = sine(1000)
    y = telephony_resample(x).samples
    assert len(y) == len(x)
    assert rms(mid(y)) == pytest.approx(rms(mid(x.samples)), rel=0.01)
    assert rms(mid(telephony_resample(sine(6000)).samples)) < 0.01 * rms(x.samples)


def test_identity_channel_in_band():
    x = sine(1500, amp=0.3)
    y = simulate(x, identity_config()).samples
    g = 20 * np.log10(rms(mid(y)) / rms(mid(x.samples)))
    assert abs(g) <= 3
    assert np.max(np.abs(mid(y) - mid(x.samples))) < 0.01


def test_simulate_deterministic_and_seeded():
    cfg = ModemConfig(carrier_hz=18000, tone_ms=20, gap_ms=20)
    x = modulate([ToneSymbol(1624, 1402)] * 20, cfg)
    ch = ChannelConfig(noise=NoiseSpec("white", 10), loss=LossSpec(0.2), seed=4)
    a, b = simulate(x, ch).samples, simulate(x, ch).samples
    assert np.array_equal(a, b)
    assert not np.array_equal(a, simulate(x, replace(ch, seed=5)).samples)


def test_demodulated_lines(plan):
    # square law brings f_A and f_B (and in-band f1) back into the phone band
    cfg = ModemConfig(carrier_hz=15000, tone_ms=200, gap_ms=0)
    t = ToneSymbol(1624, 1402)
    y = simulate(modulate([t], cfg), ChannelConfig()).samples
    seg = mid(y)
    p = {f: power(seg, f, cfg.sample_rate) for f in plan.frequencies}
    med = np.median(list(p.values()))
    for f in (t.f2, t.difference):
        assert 10 * np.log10(p[f] / med) >= 10
    # sum line at 3026 Hz lies in band: coefficients 1/2, 1/2 vs 1/4 for the difference
    f1 = power(seg, t.f1, cfg.sample_rate)
    assert f1 > p[t.difference] and p[t.f2] > p[t.difference]


def test_config_mapping_round_trip(tmp_path):
    ch = ChannelConfig(noise=NoiseSpec("white", 12.5), loss=LossSpec(0.1, 30),
                       agc=AgcSpec(0.2, 100), attenuation_db=6, seed=7)
    assert ChannelConfig.from_mapping(ch.to_mapping()) == ch
    with pytest.raises(ValueError):
        ChannelConfig.from_mapping({"bogus": "1"})
    with pytest.raises(ValueError):
        ChannelConfig(band_low_hz=3000, band_high_hz=300)

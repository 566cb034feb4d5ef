from itertools import product

import numpy as np
import pytest

from vbmodem.channel import ChannelConfig, LossSpec, NoiseSpec, simulate
from vbmodem.detector import (HeaderInvalid, PreambleNotFound, align, char_errors,
                              decode_transmission, detect_tone, goertzel_power, tone_windows)
from vbmodem.graymap import ToneSymbol, bits_of_tone, tone_of_bits, tone_of_index
from vbmodem.modem import (ModemConfig, SampleBuffer, body_offset, build_transmission,
                           codeword_bits, encode_payload, modulate, synthesize, _render,
                           _usb_burst, preamble_segments)
from vbmodem.wavio import quantize

CARRIERS = (15000, 18000, 20000)


def test_goertzel_matches_dft():
    rng = np.random.default_rng(42)
    for _ in range(100):
        n = int(rng.integers(64, 4096))
        fs = float(rng.choice([8000, 48000, 96000]))
        k = int(rng.integers(1, n // 2))
        x = rng.standard_normal(n)
        ref = abs(np.fft.fft(x)[k]) ** 2
        assert goertzel_power(x, k * fs / n, fs) == pytest.approx(ref, rel=1e-6)


def test_goertzel_orthogonality_and_zero():
    fs, n = 48000, 4800  # 10 Hz bins: 1620/2820 Hz on-grid neighbours of the plan
    t = np.arange(n) / fs
    x = np.sin(2 * np.pi * 1620 * t)
    on = goertzel_power(x, 1620, fs)
    assert goertzel_power(x, 2820, fs) <= 1e-9 * on
    assert goertzel_power(np.zeros(100), 1624, fs) == 0
    with pytest.raises(ValueError):
        goertzel_power([1.0], 100, fs)
    with pytest.raises(ValueError):
        goertzel_power(x, 30000, fs)


def test_clean_baseband_tone(plan):
    cfg = ModemConfig(tone_ms=50, gap_ms=0, sample_rate=48000)
    x = synthesize([ToneSymbol(1794, 1892)], cfg).samples
    tone, (ma, mb) = detect_tone(x, plan, 48000)
    assert tone == ToneSymbol(1794, 1892)
    assert ma > 10 and mb > 10


def test_neighbour_leakage_case(plan):
    # (2674, 1402) plus strong leakage at the next group-A line
    fs, n = 48000, 2400
    t = np.arange(n) / fs
    x = (0.6 * np.sin(2 * np.pi * 2674 * t) + np.sin(2 * np.pi * 2955 * t)
         + np.sin(2 * np.pi * 1402 * t))
    tone, _ = detect_tone(x, plan, fs)
    assert tone == ToneSymbol(2955, 1402)


@pytest.mark.parametrize("fc", CARRIERS)
def test_alphabet_through_default_channel(plan, fc):
    cfg = ModemConfig(carrier_hz=fc)
    tones = [tone_of_index(a, b, plan) for a, b in product(range(8), range(8))]
    rx = simulate(modulate(tones, cfg), ChannelConfig())
    starts, length = tone_windows(0, len(tones), cfg)
    for t, s in zip(tones, starts):
        got, _ = detect_tone(rx.samples[s:s + length], plan, cfg.sample_rate)
        assert got == t


def test_baseband_alphabet_clean(plan):
    cfg = ModemConfig(tone_ms=20, gap_ms=20)
    tones = [tone_of_index(a, b, plan) for a, b in product(range(8), range(8))]
    x = synthesize(tones, cfg).samples
    starts, length = tone_windows(0, len(tones), cfg)
    assert [detect_tone(x[s:s + length], plan, cfg.sample_rate)[0] for s in starts] == tones


@pytest.mark.parametrize("tone_ms", [12, 50])
def test_identity_round_trip(plan, tone_ms):
    cfg = ModemConfig(tone_ms=tone_ms, gap_ms=tone_ms)
    p = bytes(np.random.default_rng(1).integers(0, 256, 64, dtype=np.uint8))
    tx = build_transmission(p, plan, cfg)
    q = SampleBuffer(quantize(tx.samples) / 32767, tx.sample_rate)
    for buf in (tx, q):
        r = decode_transmission(buf, plan, cfg)
        assert r.payload == p
        assert r.words_failed == 0 and r.corrected_bits_total == 0
        assert r.body_start == body_offset(plan, cfg)


def _transmission_with_tone_errors(plan, cfg, payload, edits):
    tones = encode_payload(payload, plan)
    for i, t in edits.items():
        tones[i] = t
    head = _render(preamble_segments(plan, cfg), cfg, _usb_burst)
    gap = np.zeros(body_offset(plan, cfg) - head.size)
    body = modulate(tones, cfg).samples
    return SampleBuffer(np.concatenate([head, gap, body]), cfg.sample_rate)


def test_adjacent_tone_error_corrected(plan):
    cfg = ModemConfig(carrier_hz=18000)
    p = b"Gray"
    orig = encode_payload(p, plan)[5]
    ia = plan.group_a.index(orig.freq_a)
    bad = tone_of_index(ia + 1 if ia < 7 else ia - 1, plan.group_b.index(orig.freq_b), plan)
    flips = sum(a != b for a, b in zip(bits_of_tone(orig, plan), bits_of_tone(bad, plan)))
    assert flips == 1
    rx = simulate(_transmission_with_tone_errors(plan, cfg, p, {5: bad}), ChannelConfig())
    r = decode_transmission(rx, plan, cfg)
    assert r.payload == p
    assert r.corrected_bits_total >= 1 and r.words_failed == 0


def test_two_worst_case_tones_fail_word(plan):
    cfg = ModemConfig(carrier_hz=18000)
    p = b"Gray code"
    tones = encode_payload(p, plan)
    edits = {}
    # tones 4 and 5 share word 1; push each to the tone with all 6 bits inverted
    for i in (4, 5):
        b = [1 - v for v in bits_of_tone(tones[i], plan)]
        edits[i] = tone_of_bits(b, plan)
    rx = simulate(_transmission_with_tone_errors(plan, cfg, p, edits), ChannelConfig())
    r = decode_transmission(rx, plan, cfg, truth=p)
    assert r.words_failed >= 1 or r.payload != p
    assert r.bit_accuracy_pct < 100


def test_pure_noise_has_no_preamble(plan):
    cfg = ModemConfig(carrier_hz=18000)
    x = np.random.default_rng(0).standard_normal(5 * cfg.sample_rate) * 0.1
    with pytest.raises(PreambleNotFound):
        align(SampleBuffer(x, cfg.sample_rate), plan, cfg)
    with pytest.raises(PreambleNotFound):
        align(SampleBuffer(np.zeros(cfg.sample_rate), cfg.sample_rate), plan, cfg)


@pytest.mark.parametrize("fc", CARRIERS)
@pytest.mark.parametrize("snr", [np.inf, 10.0])
def test_alignment_tolerance(plan, fc, snr):
    cfg = ModemConfig(carrier_hz=fc)
    tx = build_transmission(b"alignment check", plan, cfg)
    lead = 12345
    tx = SampleBuffer(np.concatenate([np.zeros(lead), tx.samples]), tx.sample_rate)
    noise = NoiseSpec("white", snr) if np.isfinite(snr) else NoiseSpec()
    rx = simulate(tx, ChannelConfig(noise=noise, seed=2))
    err = align(rx, plan, cfg) - (lead + body_offset(plan, cfg))
    assert abs(err) <= cfg.tone_samples / 4


def test_alignment_survives_preamble_drops(plan):
    cfg = ModemConfig(carrier_hz=18000, tone_ms=20, gap_ms=20)
    tx = build_transmission(b"The quick brown fox jumps over the lazy ", plan, cfg)
    for seed in (6, 8):
        rx = simulate(tx, ChannelConfig(loss=LossSpec(0.05), seed=seed))
        assert abs(align(rx, plan, cfg) - body_offset(plan, cfg)) <= cfg.tone_samples / 4


def test_truncated_recording_header_invalid(plan):
    cfg = ModemConfig(carrier_hz=18000)
    tx = build_transmission(bytes(40), plan, cfg)
    cut = body_offset(plan, cfg) + 20 * cfg.period_samples
    rx = simulate(SampleBuffer(tx.samples[:cut], tx.sample_rate), ChannelConfig())
    with pytest.raises(HeaderInvalid):
        decode_transmission(rx, plan, cfg)


def test_truth_accuracy_and_report(plan):
    cfg = ModemConfig(carrier_hz=18000, tone_ms=20, gap_ms=20)
    p = b"accuracy"
    rx = simulate(build_transmission(p, plan, cfg),
                  ChannelConfig(noise=NoiseSpec("white", -12), seed=1))
    r = decode_transmission(rx, plan, cfg, truth=p)
    sent = codeword_bits(p)
    m = int(np.sum(sent == r.raw_bits))
    assert r.bit_accuracy_pct == pytest.approx(100 * m / sent.size)
    assert 0 <= r.bit_accuracy_pct <= 100
    assert r.words_failed <= r.words_total == len(sent) // 24
    text = r.to_text()
    assert "bit_accuracy_pct=" in text and "words_failed=" in text
    rec = r.to_record()
    assert rec["payload"] == r.payload.hex() and len(rec["per_tone_margin"]) == r.tones_total


def test_decode_deterministic(plan):
    cfg = ModemConfig(carrier_hz=18000, tone_ms=20, gap_ms=20)
    ch = ChannelConfig(noise=NoiseSpec("white", 0), loss=LossSpec(0.1), seed=3)
    tx = build_transmission(b"same in, same out", plan, cfg)
    a = decode_transmission(simulate(tx, ch), plan, cfg, truth=b"same in, same out")
    b = decode_transmission(simulate(tx, ch), plan, cfg, truth=b"same in, same out")
    assert a.to_json() == b.to_json()


def test_heavy_loss_fails_words(plan):
    cfg = ModemConfig(carrier_hz=18000)
    p = b"The quick brown fox jumps over the lazy "
    rx = simulate(build_transmission(p, plan, cfg), ChannelConfig(loss=LossSpec(0.3), seed=1))
    r = decode_transmission(rx, plan, cfg, truth=p)
    assert r.words_failed > 0


def test_char_errors():
    assert char_errors(b"abc", b"abc") == 0
    assert char_errors(b"abd", b"abc") == 1
    assert char_errors(b"a", b"abc") == 2

"""File-level commands and seeded sweeps over the modem and channel."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from decimal import Decimal
from fractions import Fraction
from math import isfinite
from pathlib import Path

import numpy as np

from .channel import ChannelConfig, LossSpec, NoiseSpec, simulate
from .detector import DecodeReport, PreambleNotFound, char_errors, decode_transmission
from .freqplan import FrequencyPlan
from .modem import (ModemConfig, build_transmission, effective_bit_rate, frame_bits,
                    raw_bit_rate, tone_count)
from .wavio import read_wav, write_wav

REFERENCE_PAYLOAD = b"Pack my box with five dozen liquor jugs."
DEFAULT_CARRIER_HZ = 18000.0

MODEM_KEYS = ("tone_ms", "gap_ms", "carrier_hz", "sample_rate", "amplitude", "ramp_ms")


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def modem_config_from_mapping(m: dict[str, str]) -> ModemConfig:
    unknown = set(m) - set(MODEM_KEYS)
    if unknown:
        raise ValueError(f"unknown modem keys: {sorted(unknown)}")
    carrier = m.get("carrier_hz", str(DEFAULT_CARRIER_HZ))
    return ModemConfig(
        tone_ms=float(m.get("tone_ms", 50)),
        gap_ms=float(m.get("gap_ms", m.get("tone_ms", 50))),
        carrier_hz=None if str(carrier).lower() in ("none", "off", "") else float(carrier),
        sample_rate=int(m.get("sample_rate", 96000)),
        amplitude=float(m.get("amplitude", 0.8)),
        ramp_ms=float(m.get("ramp_ms", 2.0)),
    )


def format_rate(r: Fraction) -> str:
    """Exact decimal when one exists, otherwise ``num/den``."""
    d = r.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d != 1:
        return f"{r.numerator}/{r.denominator}"
    v = Decimal(r.numerator) / Decimal(r.denominator)
    return format(v.normalize(), "f")


def rate_summary(cfg: ModemConfig) -> dict[str, str]:
    return {
        "raw_bit_rate": format_rate(raw_bit_rate(cfg.tone_ms, cfg.gap_ms)),
        "effective_bit_rate": format_rate(effective_bit_rate(cfg.tone_ms, cfg.gap_ms)),
    }


# ---- file commands ---------------------------------------------------------

def cmd_encode(payload_path, out_wav, plan: FrequencyPlan, cfg: ModemConfig) -> dict:
    payload = Path(payload_path).read_bytes()
    buf = build_transmission(payload, plan, cfg)
    write_wav(out_wav, buf)
    info = {
        "payload_bytes": str(len(payload)),
        "frame_bits": str(frame_bits(len(payload))),
        "tones": str(tone_count(len(payload))),
        "duration_s": f"{buf.duration:.6f}",
        **rate_summary(cfg),
    }
    return info


def cmd_channel(in_wav, out_wav, ch: ChannelConfig) -> None:
    write_wav(out_wav, simulate(read_wav(in_wav), ch))


def cmd_decode(in_wav, plan: FrequencyPlan, cfg: ModemConfig, truth_path=None,
               out_path=None, fec: bool = True) -> DecodeReport:
    buf = read_wav(in_wav)
    cfg = replace(cfg, sample_rate=buf.sample_rate)
    truth = Path(truth_path).read_bytes() if truth_path else None
    report = decode_transmission(buf, plan, cfg, truth=truth, fec=fec)
    if out_path:
        Path(out_path).write_bytes(report.payload)
    return report


def roundtrip(payload: bytes, plan: FrequencyPlan, cfg: ModemConfig,
              ch: ChannelConfig, fec: bool = True) -> DecodeReport:
    rx = simulate(build_transmission(payload, plan, cfg), ch)
    return decode_transmission(rx, plan, cfg, truth=payload, fec=fec)


# ---- sweeps ----------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    tone_ms_values: tuple[float, ...] = (12, 16, 20, 30, 40, 50)
    carrier_hz_values: tuple[float, ...] = (15000, 18000, 20000)
    snr_db_values: tuple[float, ...] = (30.0,)
    loss_prob_values: tuple[float, ...] = (0.0,)
    attenuation_db_values: tuple[float, ...] = (0.0,)
    trials_per_cell: int = 1
    base_seed: int = 0
    loss_frame_ms: float = 20.0
    sample_rate: int = 96000

    def __post_init__(self):
        for f in ("tone_ms_values", "carrier_hz_values", "snr_db_values",
                  "loss_prob_values", "attenuation_db_values"):
            v = tuple(getattr(self, f))
            if not v:
                raise ValueError(f"{f} must be non-empty")
            object.__setattr__(self, f, v)
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")

    def cells(self):
        return list(itertools.product(self.tone_ms_values, self.carrier_hz_values,
                                      self.snr_db_values, self.loss_prob_values,
                                      self.attenuation_db_values))

    @classmethod
    def from_mapping(cls, m: dict[str, str]) -> "SweepSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(m) - known
        if unknown:
            raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
        kw = {}
        for k, v in m.items():
            if k.endswith("_values"):
                kw[k] = tuple(float(x) for x in str(v).split(",") if x.strip())
            elif k in ("trials_per_cell", "base_seed", "sample_rate"):
                kw[k] = int(v)
            else:
                kw[k] = float(v)
        return cls(**kw)


@dataclass(frozen=True)
class SweepRow:
    tone_ms: float
    gap_ms: float
    carrier_hz: float
    snr_db: float
    loss_prob: float
    attenuation_db: float
    trials: int
    bit_accuracy_pct: float
    char_errors: float
    char_errors_nofec: float
    words_failed: float
    corrected_bits: float
    sync_failures: int
    raw_bit_rate: Fraction
    effective_bit_rate: Fraction

    def to_csv_fields(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Fraction):
                out.append(format_rate(v))
            elif isinstance(v, int):
                out.append(str(v))
            elif f.name in ("tone_ms", "gap_ms", "carrier_hz", "snr_db", "loss_prob",
                            "attenuation_db"):
                out.append(_num(v))
            else:
                out.append(f"{v:.6f}")
        return out


CSV_COLUMNS = tuple(f.name for f in fields(SweepRow))


def _num(v: float) -> str:
    if not isfinite(v):
        return "inf" if v > 0 else "-inf"
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def cell_seed(base_seed: int, params: tuple, trial: int = 0) -> int:
    """Seed for one trial; depends only on its own parameters."""
    key = repr((int(base_seed), tuple(_num(float(p)) for p in params), int(trial)))
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def run_cell(spec: SweepSpec, params: tuple, plan: FrequencyPlan,
             payload: bytes = REFERENCE_PAYLOAD) -> SweepRow:
    tone, carrier, snr, loss, atten = params
    cfg = ModemConfig(tone_ms=tone, gap_ms=tone, carrier_hz=carrier,
                      sample_rate=spec.sample_rate)
    tx = build_transmission(payload, plan, cfg)
    acc, ce, ce_off, wf, cb, sync_fail = [], [], [], [], [], 0
    for t in range(spec.trials_per_cell):
        ch = ChannelConfig(
            noise=NoiseSpec("white", snr) if isfinite(snr) else NoiseSpec(),
            loss=LossSpec(loss, spec.loss_frame_ms),
            attenuation_db=atten,
            seed=cell_seed(spec.base_seed, params, t),
        )
        rx = simulate(tx, ch)
        try:
            on = decode_transmission(rx, plan, cfg, truth=payload, fec=True)
        except PreambleNotFound:
            # nothing recovered: every character and word counts as lost
            sync_fail += 1
            words = tone_count(len(payload)) // 4
            acc.append(0.0)
            ce.append(len(payload))
            ce_off.append(len(payload))
            wf.append(words)
            cb.append(0)
            continue
        off = decode_transmission(rx, plan, cfg, truth=payload, fec=False,
                                  body_start=on.body_start)
        acc.append(on.bit_accuracy_pct)
        ce.append(char_errors(on.payload, payload))
        ce_off.append(char_errors(off.payload, payload))
        wf.append(on.words_failed)
        cb.append(on.corrected_bits_total)
    return SweepRow(
        tone_ms=tone, gap_ms=tone, carrier_hz=carrier, snr_db=snr, loss_prob=loss,
        attenuation_db=atten, trials=spec.trials_per_cell,
        bit_accuracy_pct=float(np.mean(acc)), char_errors=float(np.mean(ce)),
        char_errors_nofec=float(np.mean(ce_off)), words_failed=float(np.mean(wf)),
        corrected_bits=float(np.mean(cb)), sync_failures=sync_fail,
        raw_bit_rate=raw_bit_rate(tone, tone),
        effective_bit_rate=effective_bit_rate(tone, tone),
    )


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(spec: SweepSpec, plan: FrequencyPlan, workers: int = 1) -> list[SweepRow]:
    """One row per grid cell, in grid order whatever the completion order."""
    jobs = [(spec, params, plan) for params in spec.cells()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_run_cell_args, jobs))
    return [run_cell(*j) for j in jobs]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.to_csv_fields())
    return buf.getvalue()


def cmd_sweep(spec: SweepSpec, plan: FrequencyPlan, out_csv=None, workers: int = 1) -> str:
    text = rows_to_csv(run_sweep(spec, plan, workers))
    if out_csv:
        Path(out_csv).write_text(text)
    return text

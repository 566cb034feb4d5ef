"""Command-line entry point: vbmodem {freqplan,encode,channel,decode,roundtrip,sweep}."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .channel import ChannelConfig
from .detector import HeaderInvalid, PreambleNotFound
from .freqplan import classic_plan, default_plan, format_plan, search_plan, validate_plan
from .harness import (MODEM_KEYS, REFERENCE_PAYLOAD, SweepSpec, cmd_channel, cmd_decode,
                      cmd_encode, cmd_sweep, modem_config_from_mapping, parse_config_file,
                      roundtrip)
from .modem import PayloadTooLong
from .wavio import WavFormatError

CHANNEL_KEYS = ("gain_a", "gain_b", "band_low_hz", "band_high_hz", "noise", "snr_db",
                "noise_file", "loss_prob", "loss_frame_ms", "agc", "agc_target_rms",
                "agc_time_constant_ms", "attenuation_db", "telephony_resample", "seed",
                "oversample")
SWEEP_KEYS = ("tone_ms_values", "carrier_hz_values", "snr_db_values", "loss_prob_values",
              "attenuation_db_values", "trials_per_cell", "base_seed", "loss_frame_ms",
              "sample_rate")


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _add_keys(p: argparse.ArgumentParser, keys, title: str) -> None:
    g = p.add_argument_group(title)
    for k in keys:
        g.add_argument(_flag(k), dest=k, default=None, metavar="V")


def _mapping(args, keys) -> dict[str, str]:
    """Config-file values overridden by explicit flags, restricted to ``keys``."""
    m = {}
    if args.config:
        m.update({k: v for k, v in parse_config_file(args.config).items() if k in keys})
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            m[k] = v
    return m


def _check_config_keys(args, *groups) -> None:
    if not args.config:
        return
    allowed = set().union(*groups)
    extra = set(parse_config_file(args.config)) - allowed
    if extra:
        raise ValueError(f"{args.config}: keys not used by this command: {sorted(extra)}")


def _plan(args):
    return classic_plan() if getattr(args, "classic", False) else default_plan()


def _print_kv(d: dict) -> None:
    for k, v in d.items():
        print(f"{k}={v}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vbmodem", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("freqplan", help="print or search a frequency plan")
    p.add_argument("--search", type=float, metavar="HZ",
                   help="search 21/19 chains for a plan at this threshold")
    p.add_argument("--classic", action="store_true", help="show the 4x4 telephone keypad plan")

    p = sub.add_parser("encode", help="payload file -> transmission WAV")
    p.add_argument("payload")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--config")
    _add_keys(p, MODEM_KEYS, "modem")

    p = sub.add_parser("channel", help="WAV -> simulated received WAV")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--config")
    _add_keys(p, CHANNEL_KEYS, "channel")

    p = sub.add_parser("decode", help="received WAV -> payload and report")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="write recovered payload here")
    p.add_argument("--truth", help="sent payload, for bit accuracy")
    p.add_argument("--report", help="write the key=value report here")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--no-fec", action="store_true", help="skip Golay correction")
    p.add_argument("--config")
    _add_keys(p, MODEM_KEYS, "modem")

    p = sub.add_parser("roundtrip", help="encode, simulate and decode in memory")
    p.add_argument("payload", nargs="?", help="payload file (default: 40-char reference)")
    p.add_argument("--report", help="write the key=value report here")
    p.add_argument("--no-fec", action="store_true")
    p.add_argument("--config")
    _add_keys(p, MODEM_KEYS, "modem")
    _add_keys(p, CHANNEL_KEYS, "channel")

    p = sub.add_parser("sweep", help="seeded grid of round trips -> CSV")
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config")
    _add_keys(p, SWEEP_KEYS, "sweep")
    return ap


def run(args) -> int:
    if args.command == "freqplan":
        if args.search is not None:
            plan = search_plan(args.search)
            if plan is None:
                print(f"no plan found at threshold {args.search:g} Hz")
                return 1
        else:
            plan = _plan(args)
        v = validate_plan(plan, check_ratio=not args.classic)
        print(format_plan(plan))
        print(f"min_gap_hz={v.min_pairwise_gap_hz:g}")
        print(f"valid={'yes' if v.valid else 'no'}")
        return 0

    if args.command == "encode":
        _check_config_keys(args, MODEM_KEYS, CHANNEL_KEYS)
        cfg = modem_config_from_mapping(_mapping(args, MODEM_KEYS))
        _print_kv(cmd_encode(args.payload, args.output, default_plan(), cfg))
        return 0

    if args.command == "channel":
        _check_config_keys(args, MODEM_KEYS, CHANNEL_KEYS)
        ch = ChannelConfig.from_mapping(_mapping(args, CHANNEL_KEYS))
        cmd_channel(args.input, args.output, ch)
        return 0

    if args.command == "decode":
        _check_config_keys(args, MODEM_KEYS, CHANNEL_KEYS)
        cfg = modem_config_from_mapping(_mapping(args, MODEM_KEYS))
        rep = cmd_decode(args.input, default_plan(), cfg, truth_path=args.truth,
                         out_path=args.output, fec=not args.no_fec)
        text = rep.to_json() + "\n" if args.json else rep.to_text()
        if args.report:
            Path(args.report).write_text(text)
        sys.stdout.write(text)
        return 0

    if args.command == "roundtrip":
        _check_config_keys(args, MODEM_KEYS, CHANNEL_KEYS)
        cfg = modem_config_from_mapping(_mapping(args, MODEM_KEYS))
        ch = ChannelConfig.from_mapping(_mapping(args, CHANNEL_KEYS))
        payload = Path(args.payload).read_bytes() if args.payload else REFERENCE_PAYLOAD
        rep = roundtrip(payload, default_plan(), cfg, ch, fec=not args.no_fec)
        text = rep.to_text() + f"exact={'yes' if rep.payload == payload else 'no'}\n"
        if args.report:
            Path(args.report).write_text(text)
        sys.stdout.write(text)
        return 0

    if args.command == "sweep":
        _check_config_keys(args, SWEEP_KEYS)
        spec = SweepSpec.from_mapping(_mapping(args, SWEEP_KEYS))
        text = cmd_sweep(spec, default_plan(), args.output, args.workers)
        if not args.output:
            sys.stdout.write(text)
        return 0
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (PreambleNotFound, HeaderInvalid) as exc:
        print(f"decode failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (PayloadTooLong, WavFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

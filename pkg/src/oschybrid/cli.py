"""Command-line interface.

Subcommands: ``codebook`` (build/export an OSC), ``sse``, ``ber``, ``smse``
(SNR sweeps written as CSV) and ``validate``. Exit codes: 0 success,
2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .codebook import save_codebook
from .config import SystemConfig, config_from_flat, load_config, parse_config_text, validate_config
from .errors import ConfigError, PrecodingError, TrialError
from .evaluation import SnrGrid
from .experiment import CodebookCache, Scheme, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("oschybrid")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--snr-min", type=float)
    p.add_argument("--snr-max", type=float)
    p.add_argument("--snr-step", type=float)
    p.add_argument("--rho", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--bt", type=int, help="BS phase-shifter bits (0 = unquantized)")
    p.add_argument("--br", type=int, help="user phase-shifter bits (0 = unquantized)")
    p.add_argument("--trials", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config-file key, repeatable")
    p.add_argument("--out", type=Path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oschybrid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codebook", help="build an over-sampling codebook and export it")
    _common(p)
    p.add_argument("--side", choices=("bs", "user"), default="bs")

    for name, helptext in (("sse", "sum spectral efficiency vs SNR"),
                           ("ber", "16-QAM bit error rate vs SNR"),
                           ("smse", "sum MSE vs SNR")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.PROPOSED_FULL.value)
        p.add_argument("--cache-dir", type=Path, help="persist codebooks here")

    p = sub.add_parser("validate", help="check a configuration against the system invariants")
    _common(p)
    return parser


def resolve_config(args) -> SystemConfig:
    config = load_config(args.config) if args.config else SystemConfig()
    overrides = {}
    for flag, key in (("seed", "seed"), ("snr_min", "snr_min"), ("snr_max", "snr_max"),
                      ("snr_step", "snr_step"), ("rho", "rho"), ("beta", "beta"),
                      ("bt", "bt"), ("br", "br"), ("trials", "trials")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if args.set:
        overrides.update(parse_config_text("\n".join(args.set)))
    return config_from_flat(overrides, config) if overrides else config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    violations = validate_config(config)
    if args.command == "validate":
        for v in violations:
            print(f"violation: {v}")
        if not violations:
            print("ok")
        return EXIT_CONFIG if violations else EXIT_OK
    if violations:
        for v in violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "codebook":
        geometry = config.bs_geometry if args.side == "bs" else config.user_geometry
        bits = config.bits_t if args.side == "bs" else config.bits_r
        cb = CodebookCache().get(geometry, config.rho, bits)
        out = args.out or Path(f"osc_{args.side}_{geometry}_rho{config.rho}_q{bits}.csv")
        save_codebook(out, cb)
        print(f"{len(cb)} entries -> {out}")
        return EXIT_OK

    grid = SnrGrid.from_range(config.snr_min, config.snr_max, config.snr_step)
    out = args.out or Path(f"{args.command}_{args.scheme}_rho{config.rho}_beta{config.beta:g}.csv")
    try:
        curve = run_experiment(config, Scheme(args.scheme), grid, out, metric=args.command,
                               cache=CodebookCache(args.cache_dir),
                               progress=lambda t: log.info("trial %d/%d", t + 1, config.trials))
    except TrialError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PrecodingError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for x, y, s in zip(curve.x, curve.y, curve.stderr):
        print(f"{x:8.2f} dB  {y:.6g}  ± {s:.2g}")
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

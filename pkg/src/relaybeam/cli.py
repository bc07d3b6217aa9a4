"""Command-line front end.

    relaybeam af-sweep [--config FILE] [--seed N] [--out CSV] [--jobs K] [--no-plot]
    relaybeam df-robust-sweep [--config FILE] [--eps E ...] ...
    relaybeam solve --channel FILE [--scheme S] [--total PT | --per-relay P ...] ...
    relaybeam validate-outage --channel FILE --eps E [--var-h V] [--var-z V] ...

Exit status: 0 on success, 1 on usage or configuration errors, 2 when the
solver fails on ``solve``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, RelayBeamError
from .experiment import (ExperimentConfig, load_channel, read_json, run_af_sweep,
                         run_df_robust_sweep, solve_one, validate_outage)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2

log = logging.getLogger("relaybeam")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for solver failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--out", help="output path (stdout when omitted)")


def _constraint_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--total", type=float, help="total relay power")
    g.add_argument("--per-relay", type=float, nargs="+", metavar="P",
                   help="per-relay power limits")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relaybeam", description="Secrecy beamforming for relay networks.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("af-sweep", "AF secrecy rate vs PT/Ps, four strategies"),
                        ("df-robust-sweep", "statistically robust DF rate vs PT per eps")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--jobs", type=int, help="worker processes for grid points")
        p.add_argument("--no-plot", action="store_true", help="skip the PNG next to the CSV")
        if name == "df-robust-sweep":
            p.add_argument("--eps", type=float, nargs="+", help="non-outage probabilities")

    p = sub.add_parser("solve", help="optimize one channel realization, print the solution JSON")
    _common(p)
    p.add_argument("--channel", type=Path, help="ChannelState JSON")
    p.add_argument("--scheme", choices=["af_optimal", "af_achievable", "df_perfect",
                                        "df_worstcase", "df_statistical"])
    _constraint_flags(p)

    p = sub.add_parser("validate-outage", help="Monte Carlo non-outage of a robust DF design")
    _common(p)
    p.add_argument("--channel", type=Path, help="ChannelState JSON holding the estimates")
    p.add_argument("--solution", type=Path, help="BeamSolution JSON to check instead of solving")
    p.add_argument("--eps", type=float)
    p.add_argument("--var-h", type=float)
    p.add_argument("--var-z", type=float)
    p.add_argument("--trials", type=int, default=100_000)
    _constraint_flags(p)
    return parser


def _config(args, mode: str) -> ExperimentConfig:
    doc = read_json(args.config) if args.config else {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{args.config}: config must be a JSON object")
    if doc.setdefault("mode", mode) != mode:
        raise ConfigError(f"config mode {doc['mode']!r} does not match command ({mode})")
    overrides = {"seed": args.seed, "out": args.out}
    for key in ("jobs", "eps", "scheme"):
        overrides[key] = getattr(args, key, None)
    if getattr(args, "no_plot", False):
        overrides["plot"] = False
    if getattr(args, "total", None) is not None:
        overrides["constraint"] = {"total": args.total}
    elif getattr(args, "per_relay", None) is not None:
        overrides["constraint"] = {"per_relay": args.per_relay}
    if getattr(args, "channel", None) is not None:
        overrides["channel"] = str(args.channel)
    if mode == "solve_one" and args.command == "validate-outage":
        robust = dict(doc.get("robust", {}))
        for key in ("eps", "var_h", "var_z"):
            if getattr(args, key, None) is not None:
                robust[key] = getattr(args, key)
        overrides["robust"] = robust
        overrides.pop("eps")
        overrides["scheme"] = "df_statistical"
    return ExperimentConfig.from_dict(doc, **overrides)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _sweep(args, mode, runner) -> int:
    cfg = _config(args, mode)
    text = runner(cfg)
    _emit(text, cfg.out)
    if cfg.out and cfg.plot:
        from .plotting import plot_sweep
        figure = plot_sweep(text, Path(cfg.out).with_suffix(".png"), mode)
        log.info("wrote %s and %s", cfg.out, figure)
    return EXIT_OK


def _channel(cfg: ExperimentConfig):
    if not cfg.channel:
        raise ConfigError("a channel file is required (--channel or config key 'channel')")
    return load_channel(cfg.channel)


def _solve(args) -> int:
    cfg = _config(args, "solve_one")
    ch = _channel(cfg)
    try:
        sol = solve_one(cfg, ch)
    except ConfigError:
        raise
    except (RelayBeamError, ArithmeticError) as exc:
        print(f"relaybeam: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(sol.to_json() + "\n", cfg.out)
    return EXIT_OK


def _validate(args) -> int:
    cfg = _config(args, "solve_one")
    ch = _channel(cfg)
    if args.trials < 1:
        raise ConfigError("--trials must be positive")
    solution = read_json(args.solution) if args.solution else None
    try:
        report = validate_outage(cfg, ch, args.trials, solution)
    except ConfigError:
        raise
    except (RelayBeamError, ArithmeticError) as exc:
        print(f"relaybeam: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(json.dumps(report, indent=2) + "\n", cfg.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "af-sweep":
            return _sweep(args, "af_sweep", run_af_sweep)
        if args.command == "df-robust-sweep":
            return _sweep(args, "df_robust_sweep", run_df_robust_sweep)
        if args.command == "solve":
            return _solve(args)
        return _validate(args)
    except ConfigError as exc:
        print(f"relaybeam: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

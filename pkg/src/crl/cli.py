"""Command-line entry point: ``crl <command> --config file.json --out dir``."""
from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError
from .lab import ExperimentConfig, run_experiment

COMMANDS = {
    "mesh": ("mesh",),
    "radial": ("radial",),
    "eig": ("eig",),
    "mass": ("mass",),
    "deform": ("deform",),
    "sweep": ("karp-pinsky", "complement", "product"),
    "verify": ("rigidity",),
}


def build_parser():
    p = argparse.ArgumentParser(prog="crl", description="Conformal curvature and eigenvalue experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        c = sub.add_parser(name)
        c.add_argument("--config", required=True, help="JSON experiment config")
        c.add_argument("--out", default="crl-out", help="output directory")
        c.add_argument("--h", type=float, default=None, help="target mesh size")
        c.add_argument("--seed", type=int, default=None)
    return p


def load_config(command, args) -> ExperimentConfig:
    try:
        with open(args.config) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read {args.config}: {err}") from err
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    allowed = COMMANDS[command]
    d.setdefault("experiment", allowed[0])
    if d["experiment"] not in allowed:
        raise ConfigError(f"{command} runs {', '.join(allowed)}, not {d['experiment']!r}")
    if args.h is not None:
        d["h"] = args.h
    if args.seed is not None:
        d["seed"] = args.seed
    return ExperimentConfig.from_dict(d)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return err.exit_code
    status = run_experiment(cfg, args.out)
    with open(f"{args.out}/report.json") as fh:
        report = json.load(fh)
    if "error" in report:
        print(f"{report['error']['type']}: {report['error']['message']}", file=sys.stderr)
    else:
        for name, ok in report["checks"].items():
            print(f"{'PASS' if ok else 'FAIL'} {name}")
    return status


if __name__ == "__main__":
    sys.exit(main())

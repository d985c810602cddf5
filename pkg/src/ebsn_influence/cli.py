"""Command-line entry point: ``ebsn-influence <subcommand> [options]``."""

from __future__ import annotations

import argparse
import ast
import dataclasses
import logging
import sys
import warnings
from pathlib import Path

from .ingest import IntegrityError, LogParseError
from .pipeline import STAGES, ConfigError, PipelineConfig, StageError, run_pipeline
from .synth import SYNTH_FILTER_POLICY, InfeasibleConfig, SynthConfig, write_synth

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def _common(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="seed for every randomized step")
    p.add_argument("--stage", choices=STAGES, help="stop after this stage")
    p.add_argument("--input", help="directory holding events.csv, attendance.csv, subscriptions.csv")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="ebsn-influence",
                                     description="Community influence analysis of event-based social networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("pipeline",):
        _common(sub.add_parser(name, help=f"run the pipeline through '{name}'"
                               if name != "pipeline" else "run every stage"))
    _common(sub.add_parser("synth", help="write a synthetic event log with planted phenotypes"))
    return parser


def _overrides(args):
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    if args.out:
        out["out"] = args.out
    if args.seed is not None:
        out["seed"] = str(args.seed)
    if getattr(args, "input", None):
        out["input_dir"] = args.input
    return out


def _synth_config(args) -> SynthConfig:
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        for line in path.read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                k, _, v = line.partition("=")
                values[k.strip()] = v.strip()
    values.update({k: v for k, v in _overrides(args).items() if k not in ("out", "input_dir")})
    fields = {f.name: f for f in dataclasses.fields(SynthConfig)}
    kwargs = {}
    for k, v in values.items():
        if k not in fields:
            raise ConfigError(f"unknown synth key {k!r}")
        default = fields[k].default
        if isinstance(default, bool):
            kwargs[k] = v.lower() in ("true", "1", "yes")
        elif isinstance(default, (int, float)):
            kwargs[k] = type(default)(v)
        else:
            kwargs[k] = tuple(ast.literal_eval(v))
    return SynthConfig(**kwargs)


def run_synth(args) -> int:
    config = _synth_config(args)
    out = Path(args.out or "synth")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        write_synth(config, out)
    policy = SYNTH_FILTER_POLICY
    pipeline_cfg = PipelineConfig(
        input_dir=".", out="run", seed=config.seed,
        min_events_per_user=policy.min_events_per_user,
        min_participants_per_event=policy.min_participants_per_event,
        require_subscription=policy.require_subscription,
        # the median-distance default spans the whole country; use the cluster scale instead
        sigma_km=repr(5.0 * config.geo_cluster_spread_km),
    )
    (out / "pipeline.cfg").write_text(pipeline_cfg.to_text(), encoding="utf-8")
    print(f"synthetic log written to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return run_synth(args)
        overrides = _overrides(args)
        if args.config:
            config = PipelineConfig.from_file(args.config, overrides)
        else:
            config = PipelineConfig.from_strings(overrides)
        stop = args.command if args.command != "pipeline" else (args.stage or "report")
        if args.stage and args.command != "pipeline":
            stop = STAGES[min(STAGES.index(args.stage), STAGES.index(args.command))]
        run_pipeline(config, stop)
    except (ConfigError, InfeasibleConfig, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        cause = exc.__cause__
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(cause, (LogParseError, IntegrityError, FileNotFoundError)) else EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands: completeness | soundness | lemmas | swap-bench.  Exit codes:
0 success, 1 invalid config or usage, 2 numerical validation failure.
The default seed comes from EPRVERIFY_SEED when set; --seed overrides it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .harness import ConfigError, EXPERIMENTS, ExperimentConfig, emit_report, run_experiment

SEED_ENV_VAR = "EPRVERIFY_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="eprverify", description=__doc__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int, help="RNG seed (overrides config and env)")
        p.add_argument("--mode", choices=["exact", "sampled"], help="evaluation mode")
        p.add_argument("--trials", type=int, help="sampled trials / random instances")
        p.add_argument("--out", type=Path, help="report file (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"], default="json", help="report format")
    return parser


def _default_seed() -> int | None:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {"experiment": args.experiment}
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        data = {**loaded, "experiment": loaded.get("experiment", args.experiment)}
        if data["experiment"] != args.experiment:
            raise ConfigError(
                f"config is for experiment {data['experiment']!r}, "
                f"but the {args.experiment!r} subcommand was invoked"
            )
    env_seed = _default_seed()
    if "seed" not in data and env_seed is not None:
        data["seed"] = env_seed
    if args.seed is not None:
        data["seed"] = args.seed
    if args.mode is not None:
        data["mode"] = args.mode
    if args.trials is not None:
        data["trials"] = args.trials
    return ExperimentConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve_config(args)
    except ConfigError as exc:
        print(f"eprverify: invalid config: {exc}", file=sys.stderr)
        return 1
    report = run_experiment(config)
    payload = emit_report(report, fmt=args.format)
    if args.out is not None:
        try:
            Path(args.out).write_bytes(payload)
        except OSError as exc:
            print(f"eprverify: cannot write report to {args.out}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(payload.decode())
    print(f"eprverify: {config.experiment} done in {report.wall_time_ms:.1f} ms", file=sys.stderr)
    failures = report.failures()
    if failures:
        for failure in failures:
            print(f"eprverify: validation failure: {failure}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

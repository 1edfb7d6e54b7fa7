"""Command-line front end.

Subcommands:
  run     --config <file> [--out <path>]   execute a configured run
  figure  --d 100 --kappa 100 --eps 1e-6 --seed 0 [--out-dir DIR]
  verify  [--grid <file>] [--csv <path>]   run the verification suite

The environment variable LANGEVIN_SEED overrides the config seed.  Exit
codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .harness import ConfigError, RunConfig, figure_accel, run, verify_all


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ulmc")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured sampler run")
    p_run.add_argument("--config", required=True, help="JSON run config")
    p_run.add_argument("--out", default=None, help="CSV output path")

    p_fig = sub.add_parser("figure", help="overdamped vs underdamped comparison")
    p_fig.add_argument("--d", type=int, default=100)
    p_fig.add_argument("--kappa", type=float, default=100.0)
    p_fig.add_argument("--eps", type=float, default=1e-6)
    p_fig.add_argument("--seed", type=int, default=0)
    p_fig.add_argument("--out-dir", default=".")
    p_fig.add_argument("--spectrum", default="two_point",
                       choices=("two_point", "log_spaced"))

    p_ver = sub.add_parser("verify", help="run the verification suite")
    p_ver.add_argument("--grid", default=None, help="JSON grid overrides")
    p_ver.add_argument("--csv", default=None, help="machine-readable output")
    return parser


def _seed_override(seed: int) -> int:
    raw = os.environ.get("LANGEVIN_SEED")
    if raw is None:
        return seed
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"LANGEVIN_SEED must be an integer, got {raw!r}") from exc


def _cmd_run(args: argparse.Namespace) -> int:
    config = RunConfig.from_json(args.config)
    seed = _seed_override(config.seed)
    if args.out is not None or seed != config.seed:
        config = dataclasses.replace(config, out=args.out or config.out, seed=seed)
    result = run(config)
    last = result.rows[-1]
    where = result.csv_path or "<memory>"
    print(f"{config.sampler}/{config.mode}: {len(result.rows)} rows -> {where}")
    print(f"final iter={last.iter} kl_joint={last.kl_joint!r} "
          f"mean_norm={last.mean_norm!r}")
    return 0


def _cmd_figure(args: argparse.Namespace) -> int:
    seed = _seed_override(args.seed)
    out = figure_accel(d=args.d, kappa=args.kappa, epsilon=args.eps,
                       seed=seed, out_dir=args.out_dir,
                       spectrum_shape=args.spectrum)
    for kind, path in out["paths"].items():
        print(f"{kind}: {path}")
    its = out["iterations"]
    print(f"iterations to eps: overdamped={its['overdamped']} "
          f"underdamped={its['underdamped']}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    grid = None
    if args.grid is not None:
        try:
            with open(args.grid, "r", encoding="utf-8") as fh:
                grid = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read grid {args.grid}: {exc}") from exc
    rows = verify_all(grid)
    width = max((len(r.name) for r in rows), default=4)
    for row in rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"{row.name:<{width}}  {status}  {row.detail}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("name,passed,detail\n")
            for row in rows:
                fh.write(f"{row.name},{int(row.passed)},{row.detail}\n")
    failed = sum(not r.passed for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    return 1 if failed else 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "figure":
            return _cmd_figure(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

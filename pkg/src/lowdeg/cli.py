"""Command-line entry point: ``lowdeg run | check | list-instances``."""

from __future__ import annotations

import argparse
import json
import sys

import jsonschema

from . import harness


def _cmd_run(args) -> int:
    try:
        cfg = harness.load_config(args.config)
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
        print(f"invalid config: {getattr(exc, 'message', exc)}", file=sys.stderr)
        return 2
    if args.out is not None:
        cfg["output"]["path"] = args.out
    if args.format is not None:
        cfg["output"]["format"] = args.format
    try:
        report = harness.run_experiment(cfg, runs=args.runs, seed=args.seed)
    except ValueError as exc:
        print(f"could not run experiment: {exc}", file=sys.stderr)
        return 2
    out, fmt = report.config["output"]["path"], report.config["output"]["format"]
    if out:
        report.write(out, fmt)
    else:
        sys.stdout.write(report.to_csv() if fmt == "csv" else report.to_json() + "\n")
    lo, hi = report.acceptance_interval
    print(f"acceptance {report.acceptance_rate:.4f} [{lo:.4f}, {hi:.4f}] over "
          f"{len(report.runs)} runs; max queries {report.max_queries} "
          f"(ratio {report.query_ratio:.1f}); {report.wall_time:.1f}s", file=sys.stderr)
    return 0


def _cmd_check(args) -> int:
    try:
        reports = harness.run_theory_suite(args.suite, seed=args.seed)
    except KeyError as exc:
        print(f"{exc.args[0]}; available: all, {', '.join(harness.THEORY_CHECKS)}",
              file=sys.stderr)
        return 2
    for rep in reports:
        print(rep.to_json())
    failed = [r.lemma_id for r in reports if not r.passed]
    if failed:
        print(f"violations in: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_list(args) -> int:
    print("instance families:")
    for k, v in harness.INSTANCE_FAMILIES.items():
        print(f"  {k:16s} {v}")
    print("distributions:")
    for k, v in harness.DISTRIBUTIONS.items():
        print(f"  {k:16s} {v}")
    print("testers: " + ", ".join(harness.TESTERS))
    print("theory checks: " + ", ".join(harness.THEORY_CHECKS))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lowdeg", description="Low-degree polynomial testers.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--runs", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--format", choices=["csv", "json"])
    r.set_defaults(func=_cmd_run)
    c = sub.add_parser("check", help="run theory checks")
    c.add_argument("--suite", default="all")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=_cmd_check)
    ls = sub.add_parser("list-instances", help="list instance families and distributions")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

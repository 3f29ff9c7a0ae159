"""Command line entry point: ``qkdlab run | validate | compare``.

Exit codes: 0 success, 1 a validation verdict failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .harness import ConfigError, ExperimentConfig, compare_report, fmt_num, run_experiment, validate_file
from .randtest import P_TESTS, Thresholds, ValidationReport

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _print_validation(v: ValidationReport, out=None):
    out = out or sys.stdout
    print(f"bits             {v.length}", file=out)
    print(f"entropy/bit      {fmt_num(v.entropy_per_bit)}", file=out)
    for test in P_TESTS:
        threshold = getattr(v.thresholds, test)
        print(f"{test + ' p':<16} {fmt_num(v.p_value(test)):>14}  (>= {fmt_num(threshold)})  {v.verdicts[test]}",
              file=out)
    if v.degenerate:
        print(f"degenerate       {', '.join(v.degenerate)}", file=out)


def cmd_run(args) -> int:
    config = ExperimentConfig(
        protocol=args.protocol,
        family=args.family,
        rounds=args.rounds,
        output_path=args.out,
        batch_size=args.batch_size,
        readout_epsilon=args.readout_eps,
        depolarizing_p=args.depol_p,
        eve=args.eve,
        master_seed=args.seed,
    )
    report = run_experiment(config, timestamp=not args.no_timestamp)
    print(f"{config.protocol}/{config.family}  rounds {config.rounds}  seed {config.master_seed}")
    print(f"sift fraction    {fmt_num(report.sift_fraction)}")
    print(f"key length       {report.key_length}")
    print(f"qber             {fmt_num(report.qber)}")
    _print_validation(report.validation)
    print(f"report written to {config.output_path}")
    return EXIT_OK if report.validation.passed else EXIT_FAIL


def cmd_validate(args) -> int:
    thresholds = Thresholds.with_iid(binomial=args.binomial_threshold, iid=args.iid_threshold)
    report = validate_file(args.infile, args.format, thresholds)
    _print_validation(report)
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_compare(args) -> int:
    table, aggregate = compare_report(args.reports)
    sys.stdout.write(table)
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(aggregate, fh, sort_keys=True, indent=2)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdlab", description="Simulate BB84 / E91 key distribution and validate the keys.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a protocol and validate the sifted key")
    run.add_argument("--protocol", choices=["bb84", "e91"], required=True)
    run.add_argument("--family", choices=["hadamard", "sx"], required=True)
    run.add_argument("--rounds", type=int, required=True)
    run.add_argument("--batch-size", type=int, default=128)
    run.add_argument("--readout-eps", type=float, default=0.0)
    run.add_argument("--depol-p", type=float, default=0.0)
    run.add_argument("--eve", action="store_true", help="intercept-resend attacker on the channel (bb84 only)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="report path; key and transcript files are written beside it")
    run.add_argument("--no-timestamp", action="store_true", help="omit the report header")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="run the randomness suite on a bit file")
    val.add_argument("--in", dest="infile", required=True)
    val.add_argument("--format", choices=["ascii", "binary"], default="ascii")
    val.add_argument("--binomial-threshold", type=float, default=0.000005)
    val.add_argument("--iid-threshold", type=float, default=0.001)
    val.add_argument("--json-out")
    val.set_defaults(func=cmd_validate)

    cmp_ = sub.add_parser("compare", help="tabulate several run reports side by side")
    cmp_.add_argument("reports", nargs="+")
    cmp_.add_argument("--json-out")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"qkdlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment runner.

Exit codes: 0 success, 1 a verification or check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from superdist.cli.config import load_config
from superdist.cli.constants import DEFAULT_OUT, ExitCode, Subcommand
from superdist.cli.handlers import (
    handle_analyze,
    handle_paradiso_demo,
    handle_potato_demo,
    handle_simulate,
    handle_verify,
    parse_trust_roots,
)
from superdist.core.errors import ConfigError, SuperdistError
from superdist.core.overlay import party_label
from superdist.protocol.crypto import SUITES, Ed25519Suite

logger = logging.getLogger(__name__)


def _u64(value: str) -> int:
    try:
        seed = int(value, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if not 0 <= seed < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superdist",
        description="Superdistribution market analysis, simulation and protocol demos",
    )
    parser.add_argument("--verbose", action="store_true", help="Log debug detail to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name: Subcommand, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name.value, help=help_text)
        p.add_argument("--config", type=str, help="Experiment YAML (defaults: potato, N=100)")
        p.add_argument("--out", type=str, help=f"Output directory (default: {DEFAULT_OUT})")
        p.add_argument("--seed", type=_u64, help="Override simulation.seed")
        p.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)
        return p

    experiment(Subcommand.ANALYZE, "Write the analytic revenue / effective price curve")
    simulate = experiment(Subcommand.SIMULATE, "Run the agent simulation and Monte Carlo")
    simulate.add_argument("--runs", type=int, help="Override simulation.runs")
    simulate.add_argument(
        "--check-analytic",
        action="store_true",
        help="Exit 1 unless every simulated mean is within 4 standard errors of R(n)",
    )

    potato = sub.add_parser(Subcommand.POTATO_DEMO.value, help="Replay the 4-generation TAN chain")
    potato.add_argument("--out", type=str, help="Also write ledger.csv and tans.csv here")
    potato.add_argument(
        "--corrupt-registry",
        action="store_true",
        help="Damage one TAN registry entry mid-chain (the check must then fail)",
    )
    potato.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)

    paradiso = sub.add_parser(
        Subcommand.PARADISO_DEMO.value, help="Chain a signed container through three devices"
    )
    paradiso.add_argument("--out", type=str, help="Write container fixtures and receipts.csv")
    paradiso.add_argument("--seed", type=_u64, default=0, help="Key generation seed")
    paradiso.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)

    verify = sub.add_parser(Subcommand.VERIFY.value, help="Verify an SDC1 container file")
    verify.add_argument("container", type=str, help="Path to the container file")
    verify.add_argument(
        "--trust-root",
        action="append",
        default=[],
        help="Trusted originator public key (hex); repeatable",
    )
    verify.add_argument("--suite", choices=sorted(SUITES), default=Ed25519Suite.name)
    verify.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)
    return parser


def _run(args: argparse.Namespace) -> ExitCode:
    command = args.command
    if command in (Subcommand.ANALYZE.value, Subcommand.SIMULATE.value):
        config = load_config(args.config).with_overrides(
            seed=args.seed, runs=getattr(args, "runs", None), out_dir=args.out
        )
        if command == Subcommand.ANALYZE.value:
            path = handle_analyze(config)
            print(f"wrote {path}")
            return ExitCode.OK
        outcome = handle_simulate(config, check_analytic=args.check_analytic)
        print(f"wrote simulation outputs to {config.out_dir}")
        print(f"legitimate adoption: {outcome.legit_fraction:.6f}")
        if outcome.check is not None:
            if not outcome.check.passed:
                print(
                    f"analytic check FAILED at entry indices {outcome.check.failures} "
                    f"(worst z = {outcome.check.worst_z:.3f})"
                )
                return ExitCode.CHECK_FAILED
            print(f"analytic check passed (worst z = {outcome.check.worst_z:.3f})")
        return ExitCode.OK

    if command == Subcommand.POTATO_DEMO.value:
        out = Path(args.out) if args.out else None
        potato = handle_potato_demo(corrupt_registry=args.corrupt_registry, out_dir=out)
        for e in potato.ledger.entries:
            print(
                f"tx {e.transaction_index}: {party_label(e.payer):>3} -> "
                f"{party_label(e.payee):<18} {e.amount:>4} cents  {e.reason_label}"
            )
        print(f"first buyer level rewards: {potato.first_buyer_rewards} cents")
        if not potato.matches:
            print("ledger does NOT match the expected allocation table")
            return ExitCode.CHECK_FAILED
        print("ledger matches the expected allocation table")
        return ExitCode.OK

    if command == Subcommand.PARADISO_DEMO.value:
        out = Path(args.out) if args.out else None
        paradiso = handle_paradiso_demo(seed=args.seed, out_dir=out)
        print(f"originator key: {paradiso.originator_key.hex()}")
        print(f"chain length: {paradiso.chain_length}, receipts redeemed: {paradiso.receipts}")
        print(f"valid container: {paradiso.valid}")
        print(f"tampered container: {paradiso.tampered}")
        return ExitCode.OK if paradiso.as_expected else ExitCode.CHECK_FAILED

    if command == Subcommand.VERIFY.value:
        roots = parse_trust_roots(args.trust_root)
        report = handle_verify(Path(args.container), roots, args.suite)
        print(str(report))
        return ExitCode.OK if report.valid else ExitCode.CHECK_FAILED

    raise ConfigError(f"Unknown command: {command}", key="command", received=command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and int(ExitCode.USAGE)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    try:
        return int(_run(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return int(ExitCode.USAGE)
    except SuperdistError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return int(ExitCode.USAGE)


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""
CHC Portfolio Solver
--------------------
Solves Constrained Horn Clause systems by translating them into C programs
and running a staged portfolio of software verifiers on them.

Standard output carries only results (a verdict line, C source, a report);
diagnostics and logs go to standard error.
"""

import argparse
import logging
import sys
from pathlib import Path

from config.settings import (
    DEFAULT_BV_CAP, DEFAULT_INT_C_TYPE, DEFAULT_INT_HI, DEFAULT_INT_LO,
    DEFAULT_MAX_FACTS, DEFAULT_MAX_STEPS, DEFAULT_PORTFOLIO_FILE, DEFAULT_TIMEOUT_S,
    EXIT_INPUT_ERROR, EXIT_INTERNAL_ERROR, EXIT_OK, EXIT_USAGE, LOG_FORMAT,
    LOG_LEVEL, ORACLE_PORTFOLIO_FILE, SUPPORTED_INT_C_TYPES, VERSION,
)
from models.bench import run_suite
from models.chc import classify_linearity
from models.codegen import EmitOptions, Encoding, ErrorStyle, transform
from models.errors import ChcError
from models.oracle import DomainSpec, Limits, derivation_to_dict, format_derivation, saturate
from models.parser import parse_chc_file
from models.portfolio import format_record, load_plan, restrict_plan, run_portfolio
from utils.data_handler import export_report, save_derivation
from utils.suite import generate_suite

logger = logging.getLogger('chc')

ENCODINGS = {'forward': Encoding.FORWARD, 'backward': Encoding.BACKWARD}
ERROR_STYLES = {'reach-error': ErrorStyle.REACH_ERROR, 'return-minus-one': ErrorStyle.RETURN_MINUS_ONE}


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser reporting usage errors with the usage exit status."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_portfolio_options(parser):
    source = parser.add_mutually_exclusive_group()
    source.add_argument(
        "--portfolio",
        type=str,
        default=None,
        help=f"Portfolio configuration file (default: {DEFAULT_PORTFOLIO_FILE.name})"
    )
    source.add_argument(
        "--builtin-oracle",
        action="store_true",
        help="Use the builtin saturation oracle instead of external verifiers"
    )
    parser.add_argument(
        "--encoding",
        choices=['forward', 'backward', 'auto'],
        default='auto',
        help="Run only the stages of one encoding (default: auto, all stages in order)"
    )
    parser.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="Maximum number of actors (bench: tasks) running at once"
    )
    parser.add_argument(
        "--scratch",
        type=str,
        default=None,
        help="Scratch directory for emitted programs, logs and witnesses"
    )
    parser.add_argument(
        "--int-type",
        choices=list(SUPPORTED_INT_C_TYPES),
        default=DEFAULT_INT_C_TYPE,
        help="C type used for Int (default: int)"
    )


def parse_arguments(argv=None):
    """Parse command line arguments."""
    parser = ArgumentParser(
        prog="chc-portfolio",
        description="Solve CHC systems with a portfolio of software verifiers."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Log debug messages")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Log warnings and errors only")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=ArgumentParser)
    commands.required = True

    solve = commands.add_parser("solve", help="Decide a CHC file: prints sat, unsat or unknown")
    solve.add_argument("file", help="SMT-LIBv2 HORN file")
    solve.add_argument(
        "--timeout",
        type=float,
        default=DEFAULT_TIMEOUT_S,
        help=f"Total wall-clock budget in seconds (default: {DEFAULT_TIMEOUT_S:g})"
    )
    _add_portfolio_options(solve)

    emit = commands.add_parser("emit-c", help="Translate a CHC file into a C program")
    emit.add_argument("file", help="SMT-LIBv2 HORN file")
    emit.add_argument("--encoding", choices=list(ENCODINGS), default='backward', help="C encoding (default: backward)")
    emit.add_argument("--out", type=str, default=None, help="Output file (default: standard output)")
    emit.add_argument(
        "--error-style",
        choices=list(ERROR_STYLES),
        default='reach-error',
        help="How the error location is expressed (default: reach-error)"
    )
    emit.add_argument("--int-type", choices=list(SUPPORTED_INT_C_TYPES), default=DEFAULT_INT_C_TYPE)

    classify = commands.add_parser("classify", help="Print theory class and linearity")
    classify.add_argument("file", help="SMT-LIBv2 HORN file")

    oracle = commands.add_parser("oracle", help="Decide a CHC file by bounded saturation")
    oracle.add_argument("file", help="SMT-LIBv2 HORN file")
    oracle.add_argument("--int-lo", type=int, default=DEFAULT_INT_LO, help="Lowest Int value enumerated")
    oracle.add_argument("--int-hi", type=int, default=DEFAULT_INT_HI, help="Highest Int value enumerated")
    oracle.add_argument("--bv-cap", type=int, default=DEFAULT_BV_CAP, help="Bitvectors enumerate at most 2^cap values")
    oracle.add_argument("--max-facts", type=int, default=DEFAULT_MAX_FACTS)
    oracle.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    oracle.add_argument("--dump-derivation", action="store_true", help="Print the refutation after 'unsat'")
    oracle.add_argument("--witness", type=str, default=None, help="Save the refutation as JSON")

    bench = commands.add_parser("bench", help="Run a task directory and score it against expected verdicts")
    bench.add_argument("tasks_dir", help="Directory of .smt2 tasks")
    bench.add_argument("expected", help="File of task,verdict lines")
    bench.add_argument(
        "--per-task-timeout",
        type=float,
        default=DEFAULT_TIMEOUT_S,
        help=f"Wall-clock budget per task in seconds (default: {DEFAULT_TIMEOUT_S:g})"
    )
    bench.add_argument("--out", type=str, default=None, help="Report file (default: standard output)")
    bench.add_argument("--no-timing", action="store_true", help="Leave wall times out of the report")
    _add_portfolio_options(bench)

    gen = commands.add_parser("gen-suite", help="Write a random linear bitvector suite with expected verdicts")
    gen.add_argument("out_dir", help="Directory receiving the tasks")
    gen.add_argument("--count", type=int, default=200, help="Number of tasks (default: 200)")
    gen.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    gen.add_argument("--width", type=int, default=4, help="Bitvector width (default: 4)")

    return parser.parse_args(argv)


def configure_logging(args):
    """Log to standard error at LOG_LEVEL, adjusted by --verbose/--quiet."""
    level = LOG_LEVEL
    if args.verbose:
        level = 'DEBUG'
    elif args.quiet:
        level = 'WARNING'
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _portfolio_file(args):
    if args.builtin_oracle:
        return ORACLE_PORTFOLIO_FILE
    return args.portfolio or DEFAULT_PORTFOLIO_FILE


def _encoding(args):
    return ENCODINGS.get(args.encoding)


def cmd_solve(args):
    system = parse_chc_file(args.file)
    plan = load_plan(_portfolio_file(args), system.theory)
    if _encoding(args) is not None:
        plan = restrict_plan(plan, _encoding(args))
    result = run_portfolio(
        system, plan, args.timeout,
        scratch_dir=args.scratch,
        opts=EmitOptions(int_c_type=args.int_type),
        jobs=args.jobs,
    )
    for record in result.provenance:
        logger.info("provenance: %s", format_record(record))
    print(result.verdict)


def cmd_emit_c(args):
    system = parse_chc_file(args.file)
    opts = EmitOptions(error_style=ERROR_STYLES[args.error_style], int_c_type=args.int_type)
    program = transform(system, ENCODINGS[args.encoding], opts)
    if args.out:
        Path(args.out).write_text(program.source, encoding='utf-8')
        logger.info("wrote %s encoding to %s", program.encoding, args.out)
    else:
        sys.stdout.write(program.source)


def cmd_classify(args):
    system = parse_chc_file(args.file)
    print(f"{system.theory} {classify_linearity(system)}")


def cmd_oracle(args):
    system = parse_chc_file(args.file)
    try:
        dom = DomainSpec(args.int_lo, args.int_hi, args.bv_cap)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))
    verdict = saturate(system, dom, Limits(args.max_facts, args.max_steps))
    logger.info("oracle: %s after %d facts", verdict.status, verdict.facts)
    print(verdict.status)
    if verdict.status == 'unknown':
        logger.warning("oracle gave up: %s%s", verdict.reason, f" ({verdict.detail})" if verdict.detail else '')
    elif verdict.status == 'unsat':
        if args.dump_derivation:
            print(format_derivation(system, verdict.derivation))
        if args.witness:
            save_derivation(derivation_to_dict(verdict.derivation), args.witness)


def cmd_bench(args):
    rows, summary = run_suite(
        args.tasks_dir, args.expected, _portfolio_file(args),
        encoding=_encoding(args),
        jobs=args.jobs or 1,
        timeout_s=args.per_task_timeout,
        scratch_dir=args.scratch,
        timing=not args.no_timing,
        opts=EmitOptions(int_c_type=args.int_type),
    )
    text = export_report(rows, summary, args.out)
    if not args.out:
        sys.stdout.write(text)


def cmd_gen_suite(args):
    expected = generate_suite(args.out_dir, count=args.count, seed=args.seed, width=args.width)
    print(f"{len(expected)} tasks written to {args.out_dir}")


COMMANDS = {
    'solve': cmd_solve,
    'emit-c': cmd_emit_c,
    'classify': cmd_classify,
    'oracle': cmd_oracle,
    'bench': cmd_bench,
    'gen-suite': cmd_gen_suite,
}


def main(argv=None):
    """Main application entry point."""
    args = parse_arguments(argv)
    configure_logging(args)
    try:
        COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ChcError, OSError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except Exception as e:
        logger.debug("internal error", exc_info=True)
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

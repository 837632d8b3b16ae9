"""dyadic-morrey: transforms, norms, operators and verification suites from the shell.

Exit status: 0 pass, 1 verification gate failure, 2 usage, parse or parameter
error, 3 nonfinite data.
"""
import argparse
import sys
from enum import IntEnum
from typing import List, Optional

from dyadic_morrey import __version__
from dyadic_morrey.core.cubes import GridGeometry
from dyadic_morrey.core.splitmix import SplitMix64
from dyadic_morrey.ensembles import random_haar_function, scale_ladder, sparse_haar_span
from dyadic_morrey.errors import DyadicError, GateFailure, ParameterError
from dyadic_morrey.files import FunctionFile, ReportMetadata, ReportTable, write_function
from dyadic_morrey.haar import forward_transform, inverse_transform
from dyadic_morrey.helpers.logging_helpers import get_logger, set_level
from dyadic_morrey.norms import bmo_report, lq_norm, morrey_norm
from dyadic_morrey.operators import (commutator_direct, commutator_tail_high, commutator_tail_low,
                                     fractional_integral, paraproduct)
from dyadic_morrey.params import SpaceParams
from dyadic_morrey.predual import duality_gap_report
from dyadic_morrey.verify import SUITES, VerifyConfig, create_suite
log = get_logger(__name__)


class ExitCode(IntEnum):
    PASS = 0
    GATE_FAILURE = 1
    USAGE = 2
    DATA = 3


def _emit_text(text: str, out: Optional[str]):
    if out:
        with open(out, 'w', newline="") as stream:
            stream.write(text)
    else:
        sys.stdout.write(text)


def _command_line(argv: List[str]) -> str:
    return " ".join(["dyadic-morrey"] + list(argv))


def cmd_transform(args, argv) -> int:
    document = FunctionFile.read(args.input)
    if args.direction == 'forward':
        result = FunctionFile.of_coefficients(forward_transform(document.to_function()))
    else:
        result = FunctionFile.of_function(inverse_transform(document.to_coefficients()))
    _emit_text(result.dumps(), args.out)
    return ExitCode.PASS


def cmd_norm(args, argv) -> int:
    f = FunctionFile.read(args.input).to_function()
    g = f.geometry
    p = 2.0 if args.p is None else args.p
    q = 2.0 if args.q is None else args.q
    parameters = {'kind': args.kind, 'p': p, 'q': q}
    table = ReportTable(ReportMetadata(command=_command_line(argv), geometry=str(g), parameters=parameters),
                        ["kind", "value", "witness", "upper", "lower", "gap", "converged"])
    if args.kind == 'lq':
        table.add_row(kind='lq', value=lq_norm(f, q))
    elif args.kind == 'morrey':
        report = morrey_norm(f, SpaceParams.of(p, q))
        table.add_row(kind='morrey', value=report.value, witness=str(report.witness))
    elif args.kind == 'bmo':
        report = bmo_report(f)
        table.add_row(kind='bmo', value=report.value, witness=str(report.witness))
    else:
        gap = duality_gap_report(f, p, q)
        table.add_row(kind='block', value=gap.upper, upper=gap.upper, lower=gap.lower, gap=gap.gap,
                      converged=gap.converged)
    _emit_text(table.dumps(), args.out)
    return ExitCode.PASS


BINARY_OPERATORS = {'paraproduct', 'commutator', 'tail_high', 'tail_low'}


def cmd_apply(args, argv) -> int:
    inputs = [FunctionFile.read(path).to_function() for path in args.inputs]
    expected = 2 if args.op in BINARY_OPERATORS else 1
    if len(inputs) != expected:
        raise ParameterError(f"operator {args.op} takes {expected} input file(s), got {len(inputs)}")
    if expected == 2:
        a, f = inputs
        a.same_geometry(f)
    if args.op in ('ialpha', 'commutator', 'tail_high', 'tail_low') and args.alpha is None:
        raise ParameterError(f"operator {args.op} needs --alpha")
    if args.op in ('tail_high', 'tail_low') and args.L is None:
        raise ParameterError(f"operator {args.op} needs --L")

    if args.op == 'ialpha':
        result = fractional_integral(inputs[0], args.alpha)
    elif args.op == 'paraproduct':
        result = paraproduct(a, f, normalized=not args.unnormalized)
    elif args.op == 'commutator':
        result = commutator_direct(a, f, args.alpha)
    elif args.op == 'tail_high':
        result = commutator_tail_high(a, f, args.alpha, args.L)
    else:
        result = commutator_tail_low(a, f, args.alpha, args.L)
    parameters = {'command': _command_line(argv), 'op': args.op, 'alpha': args.alpha, 'L': args.L}
    if args.op == 'paraproduct':
        parameters['normalized'] = not args.unnormalized
    log.info(f"applied {args.op} (alpha={args.alpha}, L={args.L}) on {result.geometry}")
    _emit_text(FunctionFile.of_function(result, parameters).dumps(), args.out)
    return ExitCode.PASS


def cmd_verify(args, argv) -> int:
    config = VerifyConfig.resolve(
        args.config, n=args.n, j_min=args.jmin, J=args.J, p=args.p, q=args.q,
        alphas=None if args.alpha is None else [args.alpha], seed=args.seed,
        ensemble_size=args.ensemble_size, theta=args.theta,
    )
    suite = create_suite(args.suite, config, _command_line(argv))
    table = suite.execute()
    _emit_text(table.dumps(), args.out)
    if not suite.passed:
        raise GateFailure(suite.name, suite.failing)
    log.info(f"suite {suite.name} passed")
    return ExitCode.PASS


def cmd_sample(args, argv) -> int:
    g = GridGeometry.create(args.n or 1, args.jmin or 0, 8 if args.J is None else args.J)
    rng = SplitMix64(42 if args.seed is None else args.seed)
    if args.kind == 'random':
        f = random_haar_function(g, rng, args.theta or 0.0)
    elif args.kind == 'sparse':
        f = sparse_haar_span(g, rng)
    else:
        f = scale_ladder(g)
    if args.out:
        write_function(args.out, f)
    else:
        _emit_text(FunctionFile.of_function(f).dumps(), None)
    return ExitCode.PASS


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--n', type=int, default=None, help="dimension (default 1)")
    parser.add_argument('--jmin', type=int, default=None, help="coarsest level (default 0)")
    parser.add_argument('--J', type=int, default=None, help="finest level (default 8)")
    parser.add_argument('--p', type=float, default=None)
    parser.add_argument('--q', type=float, default=None)
    parser.add_argument('--alpha', type=float, default=None)
    parser.add_argument('--seed', type=int, default=None, help="generator seed (default 42)")
    parser.add_argument('--ensemble-size', type=int, default=None)
    parser.add_argument('--theta', type=float, default=None,
                        help="level weight 2^(theta j) of random coefficients")
    parser.add_argument('--out', default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='dyadic-morrey', description=__doc__.splitlines()[0])
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('-v', '--verbose', action='count', default=0, help="-v for info, -vv for debug")
    commands = parser.add_subparsers(dest='command', required=True)

    transform = commands.add_parser('transform', help="forward or inverse Haar transform of a file")
    transform.add_argument('input')
    transform.add_argument('--direction', choices=['forward', 'inverse'], default='forward')
    transform.set_defaults(handler=cmd_transform)

    norm = commands.add_parser('norm', help="Lebesgue, Morrey, BMO or block norm of a function file")
    norm.add_argument('input')
    norm.add_argument('--kind', choices=['lq', 'morrey', 'bmo', 'block'], default='morrey')
    norm.set_defaults(handler=cmd_norm)

    apply = commands.add_parser('apply', help="apply an operator to function files")
    apply.add_argument('op', choices=['ialpha', 'paraproduct', 'commutator', 'tail_high', 'tail_low'])
    apply.add_argument('inputs', nargs='+', help="f for ialpha; a then f otherwise")
    apply.add_argument('--L', type=int, default=None, help="tail cut level")
    apply.add_argument('--unnormalized', action='store_true', help="paraproduct with <f, chi_Q> weights")
    apply.set_defaults(handler=cmd_apply)

    verify = commands.add_parser('verify', help="run a verification suite")
    verify.add_argument('suite', choices=list(SUITES))
    verify.add_argument('--config', default=None, help="YAML file overriding the suite defaults")
    verify.set_defaults(handler=cmd_verify)

    sample = commands.add_parser('sample', help="write a seeded test function")
    sample.add_argument('--kind', choices=['random', 'sparse', 'ladder'], default='random')
    sample.set_defaults(handler=cmd_sample)

    for sub in (transform, norm, apply, verify, sample):
        _add_common(sub)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_level('DEBUG' if args.verbose > 1 else 'INFO')
    try:
        return int(args.handler(args, argv))
    except DyadicError as e:
        log.error(str(e))
        return int(e.exit_code)
    except OSError as e:
        log.error(f"{e.filename}: {e.strerror}")
        return int(ExitCode.USAGE)


if __name__ == '__main__':
    sys.exit(main())

"""
Command-line frontend.

Artifacts (matrices, traces, grammars, automata, reports) go to stdout;
diagnostics and summaries go to stderr. Exit codes:
0 ok/accept, 1 input error, 2 validation error, 3 reject, 4 undetermined, 5 disagreement.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from rich.console import Console

from .automaton import (
    FloydAutomaton,
    accepts,
    determinize,
    format_automaton,
    format_trace,
    parse_automaton,
    trace,
)
from .config import Settings, configure_logging
from .convert import automaton_to_grammar, grammar_to_automaton
from .errors import FloydError, InputError, NoAcceptingRun, ValidationError
from .grammar import (
    Grammar,
    cf_membership,
    compute_opm,
    format_grammar,
    normalize,
    parse_grammar,
    validate_fischer_shape,
)
from .omega import LassoWord, VerdictKind, omega_accepts
from .opm import BORDER, ChainTree, PrecedenceAlphabet, eq_cycle_check, format_matrix, parse_chain
from .oracle import format_report, language_agree
from .render import matrix_table, report_table, trace_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_REJECT = 3
EXIT_UNDETERMINED = 4
EXIT_DISAGREE = 5

GRAMMAR_SUFFIX = ".g"
AUTOMATON_SUFFIX = ".fa"

stderr = Console(stderr=True, highlight=False)


class UsageError(InputError):
    """Bad command-line usage."""


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; 2 is reserved for validation failures here."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(message)


# Loading -------------------------------------------------------------------

def load_grammar(path: Union[str, Path]) -> Grammar:
    return parse_grammar(Path(path).read_text())


def load_automaton(path: Union[str, Path]) -> FloydAutomaton:
    return parse_automaton(Path(path).read_text())


def load_artifact(path: Union[str, Path]) -> Union[Grammar, FloydAutomaton]:
    """Grammar or automaton, told apart by file extension."""
    path = Path(path)
    if path.suffix == GRAMMAR_SUFFIX:
        return load_grammar(path)
    if path.suffix == AUTOMATON_SUFFIX:
        return load_automaton(path)
    raise UsageError(f"cannot tell grammar from automaton for {path} (expected {GRAMMAR_SUFFIX} or {AUTOMATON_SUFFIX})")


def _alphabet_of(artifact: Union[Grammar, FloydAutomaton]) -> PrecedenceAlphabet:
    if isinstance(artifact, Grammar):
        return compute_opm(artifact)
    return artifact.alphabet


def _terminals_of(artifact: Union[Grammar, FloydAutomaton]) -> tuple[str, ...]:
    if isinstance(artifact, Grammar):
        return artifact.terminals
    return artifact.alphabet.terminals


def _acceptor(artifact: Union[Grammar, FloydAutomaton]) -> Callable[[Sequence[str]], bool]:
    if isinstance(artifact, Grammar):
        return lambda word: cf_membership(artifact, word)
    known = set(artifact.alphabet.terminals)
    # Words over the other side's terminals are simply not in this language.
    return lambda word: all(token in known for token in word) and accepts(artifact, word)


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        print(text, end="")
        return
    Path(out).write_text(text)
    logger.info(f"Wrote {out}")
    stderr.print(f"✅ Wrote {out}", markup=False)


# Subcommands ---------------------------------------------------------------

def cmd_opm(args: argparse.Namespace, settings: Settings) -> int:
    alphabet = compute_opm(load_grammar(args.grammar))
    if args.table:
        Console().print(matrix_table(alphabet))
    else:
        print(format_matrix(alphabet), end="")
    return EXIT_OK


def cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    automaton = load_automaton(args.automaton)
    word = args.word.split()
    if not (args.trace or args.table):
        accepted = accepts(automaton, word)
        print("accept" if accepted else "reject")
        return EXIT_OK if accepted else EXIT_REJECT

    try:
        t = trace(automaton, word)
    except NoAcceptingRun as e:
        print("reject")
        stderr.print(str(e), markup=False, soft_wrap=True)
        return EXIT_REJECT
    print("accept")
    if args.table:
        Console().print(trace_table(t))
    else:
        print(format_trace(t), end="")
    return EXIT_OK


def cmd_determinize(args: argparse.Namespace, settings: Settings) -> int:
    _emit(format_automaton(determinize(load_automaton(args.automaton))), args.out)
    return EXIT_OK


def cmd_g2a(args: argparse.Namespace, settings: Settings) -> int:
    _emit(format_automaton(grammar_to_automaton(load_grammar(args.grammar))), args.out)
    return EXIT_OK


def cmd_a2g(args: argparse.Namespace, settings: Settings) -> int:
    _emit(format_grammar(automaton_to_grammar(load_automaton(args.automaton))), args.out)
    return EXIT_OK


def cmd_normalize(args: argparse.Namespace, settings: Settings) -> int:
    _emit(format_grammar(normalize(load_grammar(args.grammar))), args.out)
    return EXIT_OK


def cmd_omega(args: argparse.Namespace, settings: Settings) -> int:
    if not args.loop.split():
        raise UsageError("--loop must name at least one token")
    automaton = load_automaton(args.automaton)
    lasso = LassoWord.from_text(args.prefix, args.loop)
    verdict = omega_accepts(automaton, lasso, settings.budget)
    print(verdict.describe())
    return {
        VerdictKind.ACCEPTED: EXIT_OK,
        VerdictKind.REJECTED: EXIT_REJECT,
        VerdictKind.UNDETERMINED: EXIT_UNDETERMINED,
    }[verdict.kind]


def cmd_equiv(args: argparse.Namespace, settings: Settings) -> int:
    left, right = load_artifact(args.left), load_artifact(args.right)
    terminals = list(dict.fromkeys(_terminals_of(left) + _terminals_of(right)))
    report = language_agree(_acceptor(left), _acceptor(right), terminals, settings.max_len)
    if args.table and report.disagreements:
        Console().print(report_table(report))
    else:
        print(format_report(report), end="")

    if report.agree:
        stderr.print(f"✅ {report.tested} words agree up to length {report.max_len}", markup=False)
        return EXIT_OK
    stderr.print(
        f"❌ {len(report.disagreements)} of {report.tested} words disagree up to length {report.max_len}",
        markup=False,
    )
    return EXIT_DISAGREE


def cmd_chain(args: argparse.Namespace, settings: Settings) -> int:
    alphabet = _alphabet_of(load_artifact(args.path))
    result = parse_chain(alphabet, args.left, args.word.split(), args.right)
    if isinstance(result, ChainTree):
        print(result.render())
        return EXIT_OK
    print(f"not a chain: position {result.position}: {result.reason}")
    return EXIT_REJECT


def cmd_check(args: argparse.Namespace, settings: Settings) -> int:
    artifact = load_artifact(args.path)
    alphabet = _alphabet_of(artifact)
    print(f"matrix: conflict-free, {alphabet.filled_cells()} cells")

    problems = 0
    check = eq_cycle_check(alphabet)
    if check.ok:
        print(f"≐-chains: acyclic, longest {check.max_chain}, rule length bound {check.rhs_bound}")
    else:
        print(f"≐-chains: cycle {' = '.join(check.witness + check.witness[:1])}")
        problems += 1

    if isinstance(artifact, Grammar):
        issues = validate_fischer_shape(artifact)
        if issues:
            print(f"shape: {len(issues)} issue(s)")
            for issue in issues:
                print(f"  {issue}")
        else:
            print("shape: ok")
    return EXIT_OK if not problems else ValidationError.exit_code


# Entry points --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="floyd",
        description="Operator-precedence grammars and Floyd automata",
        epilog="Examples:\n"
               "  floyd opm expr.g\n"
               "  floyd run dyck.fa 'a b a ra rb ra a ra' --trace\n"
               "  floyd g2a expr.g --out expr.fa\n"
               "  floyd omega exceptions.fa --loop 'call_a ret_a'\n"
               "  floyd equiv expr.g expr.fa --max-len 7",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging and tracebacks on errors")
    parser.add_argument("--log-file", type=Path, help="Also write log records to this file")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    opm = commands.add_parser("opm", help="Print the precedence matrix of a grammar")
    opm.add_argument("grammar")
    opm.add_argument("--table", action="store_true", help="Render as a table")
    opm.set_defaults(handler=cmd_opm)

    run = commands.add_parser("run", help="Run an automaton on a word")
    run.add_argument("automaton")
    run.add_argument("word", help="Space-separated tokens, quoted as one argument")
    run.add_argument("--trace", action="store_true", help="Print an accepting computation")
    run.add_argument("--table", action="store_true", help="Print the computation as a table")
    run.set_defaults(handler=cmd_run)

    for name, source, handler, help_text in (
        ("determinize", "automaton", cmd_determinize, "Build the equivalent deterministic automaton"),
        ("g2a", "grammar", cmd_g2a, "Build an automaton from a Fischer-shape grammar"),
        ("a2g", "automaton", cmd_a2g, "Build a grammar from an automaton"),
        ("normalize", "grammar", cmd_normalize, "Bring a reduced grammar into Fischer shape"),
    ):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument(source)
        sub.add_argument("--out", "-o", help="Output file (default: stdout)")
        sub.set_defaults(handler=handler)

    omega = commands.add_parser("omega", help="Decide acceptance of prefix·loop^ω")
    omega.add_argument("automaton")
    omega.add_argument("--prefix", default="", help="Space-separated prefix tokens")
    omega.add_argument("--loop", required=True, help="Space-separated period tokens")
    omega.add_argument("--budget", type=_positive, help="Token budget (default: |u| + (|Q|²+2)·|v|)")
    omega.set_defaults(handler=cmd_omega)

    equiv = commands.add_parser("equiv", help="Compare two languages on all short words")
    equiv.add_argument("left", help=f"Grammar ({GRAMMAR_SUFFIX}) or automaton ({AUTOMATON_SUFFIX})")
    equiv.add_argument("right", help=f"Grammar ({GRAMMAR_SUFFIX}) or automaton ({AUTOMATON_SUFFIX})")
    equiv.add_argument("--max-len", type=_non_negative, default=Settings().max_len, help="Longest word length (default: %(default)s)")
    equiv.add_argument("--table", action="store_true", help="Render disagreements as a table")
    equiv.set_defaults(handler=cmd_equiv)

    chain = commands.add_parser("chain", help="Parse a word as a chain between two borders")
    chain.add_argument("path", help="Grammar or automaton supplying the matrix")
    chain.add_argument("word")
    chain.add_argument("--left", default=BORDER, help="Left border (default: #)")
    chain.add_argument("--right", default=BORDER, help="Right border (default: #)")
    chain.set_defaults(handler=cmd_chain)

    check = commands.add_parser("check", help="Validate a grammar or automaton")
    check.add_argument("path")
    check.set_defaults(handler=cmd_check)

    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    verbose = False
    try:
        args = parser.parse_args(argv)
        verbose = args.verbose
        settings = Settings(
            verbose=args.verbose,
            log_file=args.log_file,
            max_len=getattr(args, "max_len", Settings().max_len),
            budget=getattr(args, "budget", None),
        )
        configure_logging(settings)
        logger.debug(f"Running {args.command}")
        return args.handler(args, settings)
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else EXIT_OK
    except (FloydError, OSError) as e:
        stderr.print(f"❌ Error: {e}", markup=False, soft_wrap=True)
        if verbose:
            import traceback
            traceback.print_exc()
        return e.exit_code if isinstance(e, FloydError) else InputError.exit_code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

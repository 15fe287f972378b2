"""
Argument parsing and the three commands: analytic, experiment, selftest.

Exit codes: 0 ok, 1 usage or config error, 2 no code available,
3 I/O error, 4 selftest failure.
"""

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from cli import TOOL_NAME, __version__
from cli.manifest import RunManifest
from cli.output import Colors, print_header, print_table, status, to_json, write_csv, write_json
from cli.selftest import run_selftest
from core import analytic
from core.errors import ConfigError, NoCodeAvailable, WatchdogLabError
from defaults.experiments import EXPERIMENTS
from experiments import run_experiment
from experiments.config import default_config_path, load_config, output_dir

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_CODE = 2
EXIT_IO = 3
EXIT_SELFTEST = 4

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


# ============================================================================
# ANALYTIC
# ============================================================================

Quantities = List[Tuple[str, float]]


def _throughput(a) -> Quantities:
    return [('throughput', analytic.throughput_linear_watchdog(a.l_sym, a.m_check))]


def _miss_bounds(a) -> Quantities:
    lower, upper = analytic.linear_miss_bounds(a.fq, a.l_sym, a.m_check)
    return [('lower_bound', lower), ('upper_bound', upper)]


def _check_symbols(a) -> Quantities:
    m = analytic.min_check_symbols(a.theta) if a.fq == 2 else analytic.min_check_symbols_fq(a.theta, a.fq)
    return [('m_check', m)]


def _p_miss(a) -> Quantities:
    return [('p_miss', analytic.p_miss_mds(a.n, a.k, a.p_obs))]


def _p_miss_bound(a) -> Quantities:
    return [('p_miss', analytic.p_miss_mds(a.n, a.k, a.p_obs)),
            ('exp_bound', analytic.p_miss_exp_bound(a.n, a.k, a.p_obs))]


def _select_k(a) -> Quantities:
    return [('k', analytic.select_k(a.n, a.p_obs, a.beta))]


def _rate(a) -> Quantities:
    return [('coding_rate', analytic.coding_rate(a.n, a.p_obs, a.beta)),
            ('integer_coding_rate', analytic.integer_coding_rate(a.n, a.p_obs, a.beta))]


def _aloha(a) -> Quantities:
    if a.alpha_flow2 is None:
        q = analytic.aloha_obs_prob(a.alpha)
    else:
        q = analytic.aloha_obs_prob_two_rates(a.alpha, a.alpha_flow2)
    return [('link_throughput', analytic.aloha_throughput(a.alpha)), ('p_obs', q)]


def _effective_throughput(a) -> Quantities:
    return [('effective_throughput', analytic.effective_throughput(a.alpha, a.n, a.beta)),
            ('mac_throughput_with_rate', analytic.mac_throughput_with_rate(a.alpha, a.n))]


def _hamming(a) -> Quantities:
    n, k = analytic.hamming_params(a.m)
    mds_mode, dmin_mode = analytic.p_miss_hamming_modes(a.m, a.p_obs)
    return [('n', n), ('k', k), ('rate', analytic.hamming_rate(a.m)),
            ('mds_mode', mds_mode), ('dmin_mode', dmin_mode)]


# name -> (help, flags, calculator); flags name argparse dests on the shared flag table below
ANALYTIC_QUANTITIES: Dict[str, Tuple[str, Sequence[str], Callable]] = {
    'throughput': ('symbols per slot with a linear watchdog', ('l_sym', 'm_check'), _throughput),
    'miss-bounds': ('miss probability bounds of a linear checker', ('fq', 'l_sym', 'm_check'), _miss_bounds),
    'check-symbols': ('checking symbols needed for a miss target', ('theta', 'fq'), _check_symbols),
    'p-miss': ('miss probability of an MDS block code', ('n', 'k', 'p_obs'), _p_miss),
    'p-miss-bound': ('exact miss probability next to its exponential bound', ('n', 'k', 'p_obs'), _p_miss_bound),
    'select-k': ('largest k meeting the n^-beta target', ('n', 'p_obs', 'beta'), _select_k),
    'rate': ('coding rate of the selected code', ('n', 'p_obs', 'beta'), _rate),
    'aloha': ('slotted-ALOHA hop throughput and observation probability', ('alpha', 'alpha_flow2'), _aloha),
    'effective-throughput': ('MAC throughput times coding rate', ('alpha', 'n', 'beta'), _effective_throughput),
    'hamming': ('Hamming code parameters and both miss formulas', ('m', 'p_obs'), _hamming),
}

ANALYTIC_FLAGS = {
    'n': dict(type=int, required=True, help='block length'),
    'k': dict(type=int, required=True, help='message length'),
    'm': dict(type=int, required=True, help='Hamming parameter (n = 2^m - 1)'),
    'p_obs': dict(type=float, required=True, help='watchdog observation probability'),
    'beta': dict(type=float, required=True, help='target exponent: p_miss <= n^-beta'),
    'alpha': dict(type=float, required=True, help='ALOHA access probability'),
    'alpha_flow2': dict(type=float, default=None, help='access probability of the second flow'),
    'l_sym': dict(type=int, required=True, help='symbols per packet'),
    'm_check': dict(type=int, required=True, help='checking symbols per packet'),
    'fq': dict(type=int, default=2, help='field order (default: 2)'),
    'theta': dict(type=float, required=True, help='target miss probability'),
}


def cmd_analytic(args) -> int:
    _, _, calculator = ANALYTIC_QUANTITIES[args.quantity]
    try:
        values = calculator(args)
    except NoCodeAvailable as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NO_CODE
    except WatchdogLabError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    if args.format == 'json':
        print(to_json({'quantity': args.quantity, 'values': dict(values)}))
    elif args.format == 'plain':
        for name, value in values:
            text = str(value) if isinstance(value, int) else f"{value:.10g}"
            print(text if len(values) == 1 else f"{name} {text}")
    else:
        print_table(['quantity', 'value'], values, floatfmt='.10g')
    return EXIT_OK


# ============================================================================
# EXPERIMENT
# ============================================================================

def _check_counts(checks: List[Dict]) -> List[Tuple[str, int, int]]:
    passed, failed = Counter(), Counter()
    for c in checks:
        (passed if c['passed'] else failed)[c['check']] += 1
    names = list(dict.fromkeys(c['check'] for c in checks))
    return [(name, passed[name], failed[name]) for name in names]


def print_experiment_summary(summary: Dict, files: List[Path]):
    print_header(EXPERIMENTS[summary['experiment']].title)
    print(f"{Colors.BOLD}Rows:{Colors.END} {summary['rows']}   "
          f"{Colors.BOLD}Checks:{Colors.END} {summary['checks_passed']} passed, {summary['checks_failed']} failed\n")
    if summary['checks']:
        print_table(['check', 'passed', 'failed'], _check_counts(summary['checks']))
    if summary['shape_checks']:
        print_table(['shape check', 'result'], [(k, status(v)) for k, v in summary['shape_checks'].items()])
    if summary['notes']:
        print(f"\n{Colors.BOLD}Notes:{Colors.END}")
        for note in summary['notes']:
            print(f"  • {note}")
    print(f"\n{Colors.BOLD}Files:{Colors.END}")
    for path in files:
        print(f"  {path}")
    print()


def cmd_experiment(args) -> int:
    config_path = args.config or default_config_path(args.name)
    try:
        cfg = load_config(config_path, args.name, overrides={'seed': args.seed, 'trials': args.trials})
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    out = output_dir(args.output_dir)
    manifest = RunManifest(cfg.name, cfg.to_dict(), cfg.seed, args.jobs)
    logger.info("running %s (seed %d, trials %d, jobs %d) into %s", cfg.name, cfg.seed, cfg.trials, args.jobs, out)
    try:
        result = run_experiment(cfg, args.jobs)
    except NoCodeAvailable as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NO_CODE
    except WatchdogLabError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    stem = cfg.name
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = [write_csv(out / f"{stem}.csv", result.columns, result.rows),
                 write_json(out / f"{stem}.summary.json", result.summary)]
        for path in files:
            manifest.add_file(path)
        files.append(manifest.finish(out))
    except OSError as e:
        print(f"Error: cannot write results: {e}", file=sys.stderr)
        return EXIT_IO

    if args.format == 'json':
        print(to_json(result.summary))
    else:
        print_experiment_summary(result.summary, files)
    return EXIT_OK


# ============================================================================
# SELFTEST
# ============================================================================

def cmd_selftest(args) -> int:
    results = run_selftest(fault_injection=args.inject_fault)
    failed = [r for r in results if not r.passed]
    if args.format == 'json':
        print(to_json([vars(r) for r in results]))
    else:
        print_header("Self-test: exhaustive small-instance oracles")
        print_table(['check', 'result', 'detail', 'seconds'],
                    [(r.name, status(r.passed), r.detail, r.seconds) for r in results], floatfmt='.2f')
        if failed:
            print(f"\n{Colors.RED}{Colors.BOLD}{len(failed)} check(s) failed{Colors.END}\n")
        else:
            print(f"\n{Colors.GREEN}{Colors.BOLD}All checks passed{Colors.END}\n")
    return EXIT_SELFTEST if failed else EXIT_OK


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog=TOOL_NAME,
        description="Coded watchdog lab: block coding plus a watchdog against a misbehaving relay",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s analytic p-miss --n 15 --k 11 --p-obs 0.3
  %(prog)s analytic select-k --n 100 --p-obs 0.5 --beta 2
  %(prog)s experiment two-flows --seed 42 --jobs 4
  %(prog)s selftest

Exit codes: 0 ok, 1 usage/config, 2 no code available, 3 I/O, 4 selftest failure
        """
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging on stderr')
    parser.add_argument('-q', '--quiet', action='store_true', help='Warnings only on stderr')
    parser.add_argument('--no-color', action='store_true', help='Disable colored output')
    commands = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

    # --- analytic ---
    p_analytic = commands.add_parser('analytic', help='Evaluate closed-form formulas')
    quantities = p_analytic.add_subparsers(dest='quantity', required=True, metavar='QUANTITY')
    for name, (help_text, flags, _) in ANALYTIC_QUANTITIES.items():
        q = quantities.add_parser(name, help=help_text, description=help_text)
        for dest in flags:
            q.add_argument('--' + dest.replace('_', '-'), dest=dest, **ANALYTIC_FLAGS[dest])
        q.add_argument('--format', choices=['table', 'json', 'plain'], default='table', help='Output format')
    p_analytic.set_defaults(handler=cmd_analytic)

    # --- experiment ---
    p_exp = commands.add_parser('experiment', help='Run a Monte Carlo experiment and write CSV/JSON')
    p_exp.add_argument('name', choices=list(EXPERIMENTS), help='Experiment to run')
    p_exp.add_argument('--config', help='INI config (default: the shipped configs/<name>.ini)')
    p_exp.add_argument('--output-dir', help='Output directory (default: $WATCHLAB_OUTPUT_DIR or ./results)')
    p_exp.add_argument('--seed', type=int, help='Base seed (overrides the config)')
    p_exp.add_argument('--trials', type=_positive_int, help='Blocks per grid point (overrides the config)')
    p_exp.add_argument('--jobs', type=_positive_int, default=1, help='Worker processes (default: 1)')
    p_exp.add_argument('--format', choices=['table', 'json'], default='table', help='Console output format')
    p_exp.set_defaults(handler=cmd_experiment)

    # --- selftest ---
    p_self = commands.add_parser('selftest', help='Run the exhaustive small-instance oracle suite')
    p_self.add_argument('--format', choices=['table', 'json'], default='table', help='Output format')
    p_self.add_argument('--inject-fault', action='store_true', help=argparse.SUPPRESS)
    p_self.set_defaults(handler=cmd_selftest)
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    if args.no_color or not sys.stdout.isatty():
        Colors.disable()
    return args.handler(args)

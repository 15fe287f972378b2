"""
Per-packet linear checking against a random-error attacker, enumerated
exhaustively over every nonzero error vector, next to the one-symbol
equality check.
"""

import logging

import numpy as np

from core.algebra import field_make
from core.analytic import (
    linear_miss_bounds,
    min_check_symbols,
    min_check_symbols_fq,
    miss_rate_for_nullity,
    throughput_linear_watchdog,
)
from core.protocol import (
    CheckVerdict,
    LinearChecker,
    all_nonzero_errors,
    count_linear_misses,
    count_nonlinear_misses,
    linear_check_roundtrip,
)
from core.rng import make_rng
from defaults.experiments import EXPERIMENTS
from experiments.config import ExperimentConfig
from experiments.harness import ExperimentResult, blank_row, build_summary, check

logger = logging.getLogger(__name__)

NAME = 'linear-limitation'
# enumerate through the per-packet roundtrip when there are at most this many errors
ROUNDTRIP_LIMIT = 4096


def _roundtrip_misses(checker: LinearChecker, errors: np.ndarray, rng: np.random.Generator) -> int:
    """Linear misses found by running the per-packet roundtrip on p and p + e."""
    field = checker.field
    misses = 0
    for e in errors:
        p = rng.integers(0, field.order, checker.L_sym, dtype=np.int64)
        misses += linear_check_roundtrip(checker, p, field.add(p, e)) is CheckVerdict.ACCEPT
    return misses


def run(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    columns = EXPERIMENTS[NAME].columns
    field = field_make(cfg.fq)
    errors = all_nonzero_errors(field, cfg.l_sym)
    m_theta = min_check_symbols(cfg.theta) if field.order == 2 else min_check_symbols_fq(cfg.theta, field.order)
    rows, checks = [], []

    for m_check in cfg.m_check:
        lower, upper = linear_miss_bounds(field.order, cfg.l_sym, m_check)
        for i in range(cfg.matrices):
            rng = make_rng(cfg.seed, NAME, m_check, i)
            checker = LinearChecker.random(field, m_check, cfg.l_sym, rng)
            misses = count_linear_misses(checker, errors)
            if len(errors) <= ROUNDTRIP_LIMIT:
                roundtrip = _roundtrip_misses(checker, errors, rng)
                check(checks, len(rows), 'roundtrip_agrees', roundtrip == misses)
            nonlinear = count_nonlinear_misses(field, errors, rng)
            rate = misses / len(errors)
            exact = miss_rate_for_nullity(field.order, cfg.l_sym, checker.nullity)
            row = blank_row(
                columns,
                matrix=i, field_order=field.order, l_sym=cfg.l_sym, m_check=m_check,
                rank=checker.rank, nullity=checker.nullity, errors=len(errors),
                linear_misses=misses, miss_rate=rate, exact_rate=exact, lower_bound=lower,
                matches_exact=int(check(checks, len(rows), 'matches_exact',
                                        misses == field.order ** checker.nullity - 1)),
                within_bounds=int(check(checks, len(rows), 'within_bounds', lower - 1e-15 <= rate <= upper)),
                nonlinear_misses=nonlinear,
                linear_throughput=throughput_linear_watchdog(cfg.l_sym, m_check),
                nonlinear_throughput=throughput_linear_watchdog(cfg.l_sym, 1),
                theta=cfg.theta, m_for_theta=m_theta,
                throughput_for_theta=throughput_linear_watchdog(cfg.l_sym, m_theta),
            )
            check(checks, len(rows), 'nonlinear_never_misses', nonlinear == 0)
            rows.append(row)
        logger.info("%s m_check=%d: %d matrices enumerated over %d errors", NAME, m_check, cfg.matrices, len(errors))

    full = [r for r in rows if r['rank'] == r['m_check']]
    deficient = [r for r in rows if r['rank'] < r['m_check']]
    shape = {
        'full_rank_meets_lower_bound': all(abs(r['miss_rate'] - r['lower_bound']) < 1e-12 for r in full),
        'rank_deficient_above_lower_bound': all(r['miss_rate'] > r['lower_bound'] for r in deficient),
    }
    return ExperimentResult(NAME, columns, rows, build_summary(NAME, cfg.to_dict(), rows, checks, shape))

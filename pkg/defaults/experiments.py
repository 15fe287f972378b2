# defaults/experiments.py
"""
Experiment registry: names, CSV headers and what every column means.

Headers here are the stable CSV schema; the runners in experiments/ emit
rows keyed by exactly these names, in this order.
"""

from dataclasses import dataclass
from typing import Dict, Tuple


@dataclass(frozen=True)
class ExperimentInfo:
    name: str
    title: str
    columns: Tuple[str, ...]
    default_config: str

    @property
    def column_docs(self) -> Dict[str, str]:
        return {c: COLUMN_DOCS[c] for c in self.columns}


# ============================================================================
# COLUMN DOCUMENTATION
# ============================================================================

COLUMN_DOCS = {
    # --- parameters ---
    'n': 'block length in packets',
    'k': 'message length in packets (select_k or fixed)',
    'm': 'Hamming parameter; n = 2^m - 1',
    'beta': 'target exponent; the miss probability should stay below n^-beta',
    'p_obs': 'probability the watchdog compares a given packet',
    'alpha': 'slotted-ALOHA access probability of every sender',
    'field_order': 'order of the field the code lives in',
    'available': '1 if a code exists for this row, 0 where the selection rule gives k < 1',
    'rate': 'coding rate k/n',
    # --- closed forms ---
    'analytic_p_miss': 'closed-form miss probability (1 - p_obs)^(n-k+1)',
    'exp_bound': 'exp(-p_obs (n-k+1)), the exponential upper bound',
    'target_bound': 'n^-beta',
    'meets_target': '1 if analytic_p_miss <= n^-beta',
    'analytic_t_e': 'closed-form effective throughput alpha(1-alpha) times the coding rate',
    'mds_mode': 'Hamming miss probability using exponent n-k+1 = m+1',
    'dmin_mode': 'Hamming miss probability using the true minimum distance 3',
    # --- Monte Carlo ---
    'trials': 'blocks simulated',
    'misses': 'blocks where the attacker evaded both watchdog and decoder',
    'caught_by_watchdog': 'blocks flagged by the watchdog',
    'caught_by_decoder': 'blocks flagged only by the syndrome check',
    'p_miss_hat': 'estimated miss probability misses/trials',
    'std_error': 'standard error sqrt(p(1-p)/N) of p_miss_hat',
    'ci_low': 'lower end of the 95% interval',
    'ci_high': 'upper end of the 95% interval',
    'within_3se': '1 if |analytic - simulated| <= 3 standard errors at the analytic value',
    'matches_dmin_mode': '1 if p_miss_hat is within 3 standard errors of dmin_mode',
    'matches_mds_mode': '1 if p_miss_hat is within 3 standard errors of mds_mode',
    # --- network simulation ---
    'slots': 'slots simulated for this alpha',
    'delivered': 'flow-1 packets delivered end to end',
    'comparable': 'deliveries the watchdog overheard on both hops',
    'q_hat': 'comparable / delivered',
    'q_std_error': 'standard error of q_hat',
    'q_within_3se': '1 if q_hat is within 3 standard errors of (1-alpha)^5',
    'link_rate': 'S1->A successes per slot',
    'link_rate_within_3se': '1 if link_rate is within 3 standard errors of alpha(1-alpha)',
    'p_source_overheard': 'P(W hears S1->A | A received it); expect (1-alpha)^2',
    'p_relay_overheard': 'P(W hears A->D1 | D1 received it); expect (1-alpha)^3',
    'interleave_depth': 'blocks scrambled together before transmission',
    'simulated_t_e': 'delivered per slot times k/n',
    'effective_throughput': 'alpha(1-alpha) times k/n (Hamming rows driven by alpha)',
    # --- linear checkers ---
    'matrix': 'index of the random check matrix',
    'l_sym': 'symbols per packet',
    'm_check': 'checking symbols per packet (rows of M1)',
    'rank': 'rank of M1',
    'nullity': 'dimension of the kernel of M1',
    'errors': 'nonzero error vectors enumerated, fq^l_sym - 1',
    'linear_misses': 'error vectors the linear roundtrip check accepted',
    'miss_rate': 'linear_misses / errors',
    'exact_rate': '(fq^nullity - 1)/(fq^l_sym - 1)',
    'lower_bound': '(fq^(l_sym - m_check) - 1)/(fq^l_sym - 1)',
    'matches_exact': '1 if miss_rate equals exact_rate',
    'within_bounds': '1 if lower_bound <= miss_rate <= 1',
    'nonlinear_misses': 'error vectors the equality check accepted (always 0)',
    'linear_throughput': 'l_sym/(2 l_sym + m_check)',
    'nonlinear_throughput': 'l_sym/(2 l_sym + 1)',
    'theta': 'target miss probability for the check-symbol rule',
    'm_for_theta': 'ceil(-log2 theta) checking symbols',
    'throughput_for_theta': 'l_sym/(2 l_sym + m_for_theta)',
}


# ============================================================================
# REGISTRY
# ============================================================================

EXPERIMENTS = {
    'single-flow': ExperimentInfo(
        'single-flow',
        'Miss probability vs observation probability, single relay',
        ('n', 'beta', 'p_obs', 'k', 'field_order', 'available', 'analytic_p_miss', 'exp_bound',
         'target_bound', 'meets_target', 'trials', 'misses', 'caught_by_watchdog', 'caught_by_decoder',
         'p_miss_hat', 'std_error', 'ci_low', 'ci_high', 'within_3se'),
        'configs/single_flow.ini',
    ),
    'two-flows': ExperimentInfo(
        'two-flows',
        'Miss probability and effective throughput vs access probability, two flows',
        ('alpha', 'n', 'beta', 'p_obs', 'k', 'available', 'analytic_p_miss', 'analytic_t_e',
         'slots', 'delivered', 'comparable', 'q_hat', 'q_std_error', 'q_within_3se',
         'link_rate', 'link_rate_within_3se', 'p_source_overheard', 'p_relay_overheard',
         'interleave_depth', 'trials', 'misses', 'p_miss_hat', 'std_error', 'within_3se', 'simulated_t_e'),
        'configs/two_flows.ini',
    ),
    'hamming': ExperimentInfo(
        'hamming',
        'Hamming codes of growing length under minimum-weight forgery',
        ('m', 'n', 'k', 'rate', 'alpha', 'p_obs', 'mds_mode', 'dmin_mode', 'trials', 'misses',
         'p_miss_hat', 'std_error', 'ci_low', 'ci_high', 'matches_dmin_mode', 'matches_mds_mode',
         'effective_throughput'),
        'configs/hamming.ini',
    ),
    'linear-limitation': ExperimentInfo(
        'linear-limitation',
        'Linear per-packet checking vs the one-symbol equality check',
        ('matrix', 'field_order', 'l_sym', 'm_check', 'rank', 'nullity', 'errors', 'linear_misses',
         'miss_rate', 'exact_rate', 'lower_bound', 'matches_exact', 'within_bounds', 'nonlinear_misses',
         'linear_throughput', 'nonlinear_throughput', 'theta', 'm_for_theta', 'throughput_for_theta'),
        'configs/linear_limitation.ini',
    ),
}

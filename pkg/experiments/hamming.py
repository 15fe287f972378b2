"""
Hamming codes of increasing length. Longer codes have higher rate, but a
minimum-weight forgery only ever touches three packets, so the miss
probability follows (1 - p_obs)^3 whatever m is.
"""

import logging
from typing import List

from core.analytic import hamming_rate, p_miss_hamming_modes
from core.codec import CodeSpec, code_make_hamming
from core.protocol import AttackerStrategy, BernoulliObservation, ObservationModel
from core.simnet import TraceObservation
from defaults.experiments import EXPERIMENTS
from experiments.config import ExperimentConfig
from experiments.estimators import EstimateWithCI
from experiments.harness import ExperimentResult, blank_row, build_summary, check, simulate_blocks
from experiments.two_flows import expected_obs_prob, simulate_grid

logger = logging.getLogger(__name__)

NAME = 'hamming'


def make_strategy(cfg: ExperimentConfig, code: CodeSpec) -> AttackerStrategy:
    if cfg.attacker == 'raw-corruption':
        return AttackerStrategy.raw(code.d_min)
    return AttackerStrategy.min_weight(code)


def run(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    columns = EXPERIMENTS[NAME].columns
    sims = simulate_grid(cfg, jobs, stream=NAME) if cfg.alpha else []
    rows, checks, notes = [], [], []

    # (alpha or None, p_obs, observation factory)
    settings = [(None, p, lambda p=p: BernoulliObservation(p)) for p in cfg.p_obs]
    settings += [(a, expected_obs_prob(a, cfg.alpha_flow2),
                  lambda s=s: TraceObservation(s.comparable_flags, cfg.interleave_depth))
                 for a, s in zip(cfg.alpha, sims)]

    for m in cfg.m:
        code = code_make_hamming(m)
        strategy = make_strategy(cfg, code)
        for alpha, p_obs, make_observation in settings:
            observation: ObservationModel = make_observation()
            trials = cfg.trials
            if isinstance(observation, TraceObservation):
                trials = min(trials, observation.blocks_available(code.n))
            mds_mode, dmin_mode = p_miss_hamming_modes(m, p_obs)
            row = blank_row(columns, m=m, n=code.n, k=code.k, rate=hamming_rate(m),
                            alpha='' if alpha is None else alpha, p_obs=p_obs,
                            mds_mode=mds_mode, dmin_mode=dmin_mode)
            if alpha is not None:
                row['effective_throughput'] = alpha * (1 - alpha) * hamming_rate(m)
            if trials < 1:
                notes.append(f"m={m} alpha={alpha:g}: too few deliveries for one block")
                rows.append(row)
                continue

            counts = simulate_blocks(code, strategy, observation, trials, cfg.seed, len(rows), jobs)
            est = EstimateWithCI.from_counts(counts.misses, counts.trials, cfg.seed)
            dmin_ok = est.agrees_with(dmin_mode)
            mds_ok = est.agrees_with(mds_mode)
            row.update(trials=counts.trials, misses=counts.misses, p_miss_hat=est.point,
                       std_error=est.std_error, ci_low=est.ci_low, ci_high=est.ci_high,
                       matches_dmin_mode=int(dmin_ok), matches_mds_mode=int(mds_ok))
            if cfg.attacker == 'min-weight-forgery':
                check(checks, len(rows), 'matches_dmin_mode', dmin_ok)
                if m >= 3 and dmin_ok and not mds_ok:
                    notes.append(f"m={m} p_obs={p_obs:.5g}: simulated {est.point:.5g} follows (1-p_obs)^3 = "
                                 f"{dmin_mode:.5g}, not the (1-p_obs)^(m+1) = {mds_mode:.5g} of the MDS formula")
            logger.info("%s m=%d p_obs=%.5g: p_miss=%.5g (dmin mode %.5g, mds mode %.5g)",
                        NAME, m, p_obs, est.point, dmin_mode, mds_mode)
            rows.append(row)

    shape = {'rate_increasing_in_m': _rate_increasing(cfg.m)}
    return ExperimentResult(NAME, columns, rows, build_summary(NAME, cfg.to_dict(), rows, checks, shape, notes))


def _rate_increasing(ms: List[int]) -> bool:
    rates = [hamming_rate(m) for m in sorted(set(ms))]
    return all(b > a for a, b in zip(rates, rates[1:]))

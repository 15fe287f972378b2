"""Monte Carlo experiments; each module exposes run(config, jobs) -> ExperimentResult."""

from experiments import hamming, linear_limitation, single_flow, two_flows
from experiments.config import ExperimentConfig
from experiments.harness import ExperimentResult

RUNNERS = {
    single_flow.NAME: single_flow.run,
    two_flows.NAME: two_flows.run,
    hamming.NAME: hamming.run,
    linear_limitation.NAME: linear_limitation.run,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    return RUNNERS[cfg.name](cfg, jobs)

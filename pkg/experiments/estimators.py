"""
Bernoulli estimators with confidence intervals.
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np
from scipy.stats import norm

from core.rng import make_rng

CONFIDENCE = 0.95
# below this many successes the normal interval is unreliable; use Wilson
WILSON_THRESHOLD = 10


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    std_error: float
    ci_low: float
    ci_high: float
    successes: int
    trials: int
    seed: int
    method: str             # 'normal' or 'wilson'

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: int = 0,
                    confidence: float = CONFIDENCE) -> "EstimateWithCI":
        if trials < 1:
            raise ValueError(f"trials must be >= 1, got {trials}")
        if not 0 <= successes <= trials:
            raise ValueError(f"successes {successes} outside [0, {trials}]")
        p = successes / trials
        se = math.sqrt(p * (1 - p) / trials)
        z = float(norm.ppf(0.5 + confidence / 2))
        if successes < WILSON_THRESHOLD:
            low, high = wilson_interval(successes, trials, z)
            method = "wilson"
        else:
            low, high = max(0.0, p - z * se), min(1.0, p + z * se)
            method = "normal"
        return cls(p, se, low, high, successes, trials, seed, method)

    def agrees_with(self, p: float, n_se: float = 3.0) -> bool:
        """|point - p| within n_se standard errors evaluated at p."""
        se = math.sqrt(p * (1 - p) / self.trials)
        return abs(self.point - p) <= n_se * se + 1e-12

    def covers(self, p: float) -> bool:
        return self.ci_low <= p <= self.ci_high

    def to_dict(self) -> Dict:
        return asdict(self)


def wilson_interval(successes: int, trials: int, z: float):
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def coverage_rate(p: float, trials: int, repetitions: int, seed: int) -> float:
    """Fraction of repetitions whose interval covers the true p."""
    rng = make_rng(seed, "coverage", repetitions)
    counts = rng.binomial(trials, p, repetitions)
    hits = sum(EstimateWithCI.from_counts(int(c), trials).covers(p) for c in counts)
    return hits / repetitions


def standard_error(p: float, trials: int) -> float:
    return math.sqrt(p * (1 - p) / trials) if trials else float("nan")


def fraction_estimate(flags: np.ndarray, seed: int = 0) -> EstimateWithCI:
    flags = np.asarray(flags, dtype=bool)
    return EstimateWithCI.from_counts(int(flags.sum()), int(flags.size), seed)

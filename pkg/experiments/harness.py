"""
Monte Carlo runner shared by every experiment.

Trials for one grid point are split into chunks of TRIAL_CHUNK blocks. Chunk
c of point i draws from make_rng(seed, i, c), so the counts do not depend on
how many workers ran the chunks or in which order; aggregation is a sum.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.codec import CodeSpec
from core.protocol import AttackerStrategy, BlockOutcome, BlockVerdict, ObservationModel, run_block
from core.rng import make_rng
from experiments.estimators import EstimateWithCI

logger = logging.getLogger(__name__)

TRIAL_CHUNK = 1000


# ============================================================================
# BLOCK COUNTS
# ============================================================================

@dataclass
class BlockCounts:
    trials: int = 0
    misses: int = 0
    caught_by_watchdog: int = 0
    caught_by_decoder: int = 0
    no_attack: int = 0

    def add(self, outcome: BlockOutcome) -> None:
        self.trials += 1
        if outcome.verdict is BlockVerdict.MISSED:
            self.misses += 1
        elif outcome.verdict is BlockVerdict.CAUGHT_BY_WATCHDOG:
            self.caught_by_watchdog += 1
        elif outcome.verdict is BlockVerdict.CAUGHT_BY_DECODER:
            self.caught_by_decoder += 1
        else:
            self.no_attack += 1

    def __add__(self, other: "BlockCounts") -> "BlockCounts":
        return BlockCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))


@dataclass(frozen=True, eq=False)
class ChunkTask:
    code: CodeSpec
    strategy: Optional[AttackerStrategy]
    observation: ObservationModel
    seed: int
    point: int
    chunk: int
    first_block: int
    blocks: int
    packet_len: int = 1


def run_chunk(task: ChunkTask) -> BlockCounts:
    rng = make_rng(task.seed, task.point, task.chunk)
    observation = task.observation.for_chunk(task.first_block, task.blocks, task.code.n)
    counts = BlockCounts()
    for i in range(task.blocks):
        counts.add(run_block(task.code, task.strategy, observation, rng,
                             task.packet_len, block_id=task.first_block + i))
    return counts


def chunk_tasks(code: CodeSpec, strategy: Optional[AttackerStrategy], observation: ObservationModel,
                trials: int, seed: int, point: int, packet_len: int = 1) -> List[ChunkTask]:
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    return [ChunkTask(code, strategy, observation, seed, point, c, start,
                      min(TRIAL_CHUNK, trials - start), packet_len)
            for c, start in enumerate(range(0, trials, TRIAL_CHUNK))]


def simulate_blocks(code: CodeSpec, strategy: Optional[AttackerStrategy], observation: ObservationModel,
                    trials: int, seed: int, point: int = 0, jobs: int = 1,
                    packet_len: int = 1) -> BlockCounts:
    tasks = chunk_tasks(code, strategy, observation, trials, seed, point, packet_len)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_chunk, tasks))
    else:
        results = [run_chunk(t) for t in tasks]
    return sum(results, BlockCounts())


def estimate_p_miss(code: CodeSpec, strategy: Optional[AttackerStrategy], observation: ObservationModel,
                    trials: int, seed: int, point: int = 0, jobs: int = 1,
                    packet_len: int = 1) -> EstimateWithCI:
    """Fraction of blocks whose tampering went unnoticed, with a 95% interval."""
    counts = simulate_blocks(code, strategy, observation, trials, seed, point, jobs, packet_len)
    return EstimateWithCI.from_counts(counts.misses, counts.trials, seed)


# ============================================================================
# RESULTS
# ============================================================================

@dataclass
class ExperimentResult:
    name: str
    columns: Tuple[str, ...]
    rows: List[Dict[str, Any]]
    summary: Dict[str, Any] = field(default_factory=dict)


def check(checks: List[Dict], row: int, name: str, passed: bool) -> bool:
    checks.append({'row': row, 'check': name, 'passed': bool(passed)})
    return bool(passed)


def build_summary(name: str, config: Dict, rows: Sequence[Dict], checks: List[Dict],
                  shape_checks: Dict[str, bool], notes: Optional[List[str]] = None) -> Dict[str, Any]:
    failed = sum(not c['passed'] for c in checks)
    return {
        'experiment': name,
        'config': config,
        'rows': len(rows),
        'checks': checks,
        'checks_passed': len(checks) - failed,
        'checks_failed': failed,
        'shape_checks': shape_checks,
        'notes': notes or [],
        'all_passed': failed == 0 and all(shape_checks.values()),
    }


# --- shape tests on a curve ---

def nonincreasing(values: Sequence[float], tol: float = 1e-15) -> bool:
    return all(b <= a + tol for a, b in zip(values, values[1:]))


def nondecreasing(values: Sequence[float], tol: float = 1e-15) -> bool:
    return all(b >= a - tol for a, b in zip(values, values[1:]))


def single_peak(values: Sequence[float]) -> bool:
    """Discrete differences change sign exactly once, from rising to falling."""
    signs = [s for s in np.sign(np.diff(values)) if s != 0]
    changes = sum(a != b for a, b in zip(signs, signs[1:]))
    return len(signs) > 1 and signs[0] > 0 and changes == 1


def blank_row(columns: Sequence[str], **values) -> Dict[str, Any]:
    row = {c: '' for c in columns}
    row.update(values)
    return row


def se_at(p: float, trials: int) -> float:
    return math.sqrt(p * (1 - p) / trials) if trials else float('nan')

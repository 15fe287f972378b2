"""
Oracle suite on instances small enough to enumerate: field axioms,
generator / parity-check consistency, exhaustive minimum distance,
null-space exhaustion and interval coverage.
"""

import itertools
import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from core.algebra import FieldMatrix, field_axioms_hold, field_make, mat_rank, null_space
from core.codec import CodeSpec, Verdict, code_make_hamming, code_make_rs, detect, min_distance, weight_distribution
from core.errors import WatchdogLabError
from core.protocol import all_nonzero_errors
from core.rng import make_rng
from experiments.estimators import coverage_rate

logger = logging.getLogger(__name__)

SELFTEST_SEED = 20240601
AXIOM_FIELD_ORDERS = (2, 3, 4, 5, 7, 8, 11, 13, 16)
# (n, k, field order) of the Reed-Solomon codes the experiments and examples use
SHIPPED_RS = ((6, 3, 7), (7, 3, 8), (15, 11, 16), (15, 7, 16), (63, 47, 64), (255, 223, 256))
SHIPPED_HAMMING_M = (2, 3, 4, 5, 6, 7)
DETECTION_SAMPLES_PER_SUPPORT = 250
COVERAGE_REPETITIONS = 1000
COVERAGE_FLOOR = 0.93


@dataclass
class SelfTestCheck:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def shipped_codes() -> List[CodeSpec]:
    codes = [code_make_rs(n, k, field_make(q)) for n, k, q in SHIPPED_RS]
    return codes + [code_make_hamming(m) for m in SHIPPED_HAMMING_M]


def corrupt_generator(code: CodeSpec) -> CodeSpec:
    """Copy of code with one parity entry of G bumped; G . H^T no longer vanishes."""
    G = np.array(code.G.data)
    G[0, code.k] = code.field.add(G[0, code.k], 1)
    return CodeSpec(code.n, code.k, code.field, code.kind, FieldMatrix(code.field, G), code.H,
                    known_d_min=code.known_d_min, eval_points=code.eval_points)


# ============================================================================
# CHECKS
# ============================================================================

def check_field_axioms() -> Tuple[bool, str]:
    failed = [q for q in AXIOM_FIELD_ORDERS if not field_axioms_hold(field_make(q), exhaustive=True)]
    return not failed, f"orders {list(AXIOM_FIELD_ORDERS)}" + (f"; failed {failed}" if failed else "")


def check_parity(codes: List[CodeSpec]) -> Tuple[bool, str]:
    failed = [c.label for c in codes if not c.parity_check_ok()]
    return not failed, f"{len(codes)} codes" + (f"; G.H^T != 0 for {', '.join(failed)}" if failed else "")


def check_rs_min_distance() -> Tuple[bool, str]:
    code = code_make_rs(6, 3, field_make(7))
    weights = weight_distribution(code)
    d = min_distance(code, exhaustive=True)
    return d == 4 and int(weights.sum()) == 343, f"{code.label}: {int(weights.sum())} codewords, d_min {d}"


def check_mds_detection() -> Tuple[bool, str]:
    """Every corruption touching at most n - k positions changes the syndrome."""
    code = code_make_rs(6, 3, field_make(7))
    field = code.field
    rng = make_rng(SELFTEST_SEED, "mds-detection")
    lanes = DETECTION_SAMPLES_PER_SUPPORT
    cases = missed = 0
    for size in range(1, code.n - code.k + 1):
        for support in itertools.combinations(range(code.n), size):
            message = rng.integers(0, field.order, (code.k, lanes), dtype=np.int64)
            codeword = field.matmul(code.G.data.T, message)
            delta = np.zeros_like(codeword)
            delta[list(support)] = rng.integers(1, field.order, (size, lanes), dtype=np.int64)
            received = field.add(codeword, delta)
            syn = field.matmul(code.H.data, received)
            missed += int(np.count_nonzero(~syn.any(axis=0)))
            cases += lanes
    # the Verdict path on one lane as well
    one = field.add(field.matmul(code.G.data.T, np.zeros((code.k, 1), dtype=np.int64)),
                    np.eye(code.n, 1, dtype=np.int64))
    verdict_ok = detect(code, one) is Verdict.TAMPERED
    return missed == 0 and verdict_ok, f"{cases} corruptions of <= {code.n - code.k} positions, {missed} missed"


def check_null_space() -> Tuple[bool, str]:
    """Basis size equals cols - rank, and exactly fq^nullity - 1 nonzero vectors are annihilated."""
    rng = make_rng(SELFTEST_SEED, "null-space")
    tried = 0
    for q, rows, cols in ((2, 4, 8), (2, 6, 10), (3, 3, 6), (7, 2, 4)):
        field = field_make(q)
        for _ in range(5):
            M = FieldMatrix(field, rng.integers(0, q, (rows, cols), dtype=np.int64))
            basis = null_space(M)
            nullity = cols - mat_rank(M)
            vectors = all_nonzero_errors(field, cols)
            zero = int(np.count_nonzero(~field.matmul(M.data, vectors.T).any(axis=0)))
            if len(basis) != nullity or zero != q ** nullity - 1:
                return False, f"GF({q}) {rows}x{cols}: basis {len(basis)}, nullity {nullity}, kernel size {zero + 1}"
            tried += 1
    return True, f"{tried} random matrices enumerated"


def check_hamming_distance() -> Tuple[bool, str]:
    found = {m: min_distance(code_make_hamming(m), exhaustive=True) for m in (2, 3, 4)}
    return all(d == 3 for d in found.values()), ", ".join(f"m={m}: d_min {d}" for m, d in found.items())


def check_coverage() -> Tuple[bool, str]:
    rate = coverage_rate(0.2, 1000, COVERAGE_REPETITIONS, SELFTEST_SEED)
    return rate >= COVERAGE_FLOOR, f"95% interval covered p in {rate:.3f} of {COVERAGE_REPETITIONS} runs"


# ============================================================================
# SUITE
# ============================================================================

def run_selftest(fault_injection: bool = False) -> List[SelfTestCheck]:
    """
    Run every check. fault_injection corrupts the generator of the first
    shipped code so the parity check must fail.
    """
    codes = shipped_codes()
    if fault_injection:
        logger.warning("fault injection: corrupting the generator of %s", codes[0].label)
        codes[0] = corrupt_generator(codes[0])

    suite: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
        ('field_axioms', check_field_axioms),
        ('generator_parity_check', lambda: check_parity(codes)),
        ('rs_min_distance', check_rs_min_distance),
        ('mds_detection', check_mds_detection),
        ('null_space', check_null_space),
        ('hamming_min_distance', check_hamming_distance),
        ('interval_coverage', check_coverage),
    ]
    results = []
    for name, fn in suite:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except (WatchdogLabError, AssertionError) as e:
            passed, detail = False, f"{type(e).__name__}: {e}"
        elapsed = time.perf_counter() - start
        logger.info("selftest %s: %s (%.2fs)", name, "pass" if passed else "FAIL", elapsed)
        results.append(SelfTestCheck(name, bool(passed), detail, elapsed))
    return results

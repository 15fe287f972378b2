"""
Watchdog, attacker and decoder state machines
---------------------------------------------
Two settings share this module:

* per-packet checking: the watchdog overhears p (S -> A) and the forwarded
  p' (A -> D) and sends D a few checking symbols computed from both;
* block coding: S encodes k packets into n, A tampers with some of them,
  W compares the packets it overheard twice, and D runs the syndrome check.

A block verdict is decided after the whole block has been forwarded.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

from core.algebra import FieldMatrix, FieldSpec, combine, mat_rank, null_space, random_nonzero_vector
from core.codec import (
    Block,
    CodeSpec,
    ForgeryMode,
    TamperPlan,
    Verdict,
    apply_tamper,
    detect,
    make_block,
    min_weight_forgery,
    raw_corruption,
)
from core.errors import (
    DimensionMismatch,
    NoUndetectableError,
    ProtocolError,
    StrategyCodeMismatch,
    TooLargeForExhaustive,
)

logger = logging.getLogger(__name__)

EXHAUSTIVE_ERROR_LIMIT = 1 << 20


class CheckVerdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class AttackKind(str, Enum):
    NULL_SPACE = "null-space"
    RANDOM_ERROR = "random-error"
    MIN_WEIGHT_FORGERY = "min-weight-forgery"
    RAW_CORRUPTION = "raw-corruption"


class BlockVerdict(str, Enum):
    NO_ATTACK = "no-attack"
    CAUGHT_BY_WATCHDOG = "caught-by-watchdog"
    CAUGHT_BY_DECODER = "caught-by-decoder"
    MISSED = "missed"


# ============================================================================
# PER-PACKET CHECKERS
# ============================================================================

@dataclass(frozen=True, eq=False)
class LinearChecker:
    """F(a, b) = M1 a + M2 b, both m_check x L_sym."""
    M1: FieldMatrix
    M2: FieldMatrix

    def __post_init__(self):
        if self.M1.shape != self.M2.shape:
            raise DimensionMismatch(f"M1 {self.M1.shape} and M2 {self.M2.shape} differ in shape")
        if self.M1.field != self.M2.field:
            raise DimensionMismatch("M1 and M2 live over different fields")

    @classmethod
    def random(cls, field: FieldSpec, m_check: int, L_sym: int, rng: np.random.Generator) -> "LinearChecker":
        M1 = rng.integers(0, field.order, (m_check, L_sym), dtype=np.int64)
        M2 = rng.integers(0, field.order, (m_check, L_sym), dtype=np.int64)
        return cls(FieldMatrix(field, M1), FieldMatrix(field, M2))

    @property
    def field(self) -> FieldSpec:
        return self.M1.field

    @property
    def m_check(self) -> int:
        return self.M1.rows

    @property
    def L_sym(self) -> int:
        return self.M1.cols

    @cached_property
    def rank(self) -> int:
        return mat_rank(self.M1)

    @property
    def nullity(self) -> int:
        return self.L_sym - self.rank

    @cached_property
    def kernel(self) -> List[np.ndarray]:
        return null_space(self.M1)

    def F(self, a, b) -> np.ndarray:
        a, b = self._packet(a), self._packet(b)
        return self.field.add(self.M1 @ a, self.M2 @ b)

    def _packet(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=np.int64)
        if p.shape != (self.L_sym,):
            raise DimensionMismatch(f"packet shape {p.shape}, checker expects ({self.L_sym},)")
        return p


def linear_check_roundtrip(checker: LinearChecker, p, p_fwd) -> CheckVerdict:
    """W sends F(p, p_fwd); D recomputes F(p_fwd, p_fwd) and compares."""
    from_watchdog = checker.F(p, p_fwd)
    at_destination = checker.F(p_fwd, p_fwd)
    return CheckVerdict.REJECT if np.any(from_watchdog != at_destination) else CheckVerdict.ACCEPT


def packets_equal(p, p_fwd) -> np.ndarray:
    """Equality indicator per packet; the last axis holds the symbols, so stacked packets compare row-wise."""
    p, p_fwd = np.asarray(p), np.asarray(p_fwd)
    if p.shape != p_fwd.shape:
        raise DimensionMismatch(f"packet shapes {p.shape} and {p_fwd.shape} differ")
    return np.all(p == p_fwd, axis=-1)


def nonlinear_check(p, p_fwd) -> CheckVerdict:
    """Equality indicator: one symbol is enough and nothing slips through."""
    return CheckVerdict.ACCEPT if bool(packets_equal(p, p_fwd)) else CheckVerdict.REJECT


def all_nonzero_errors(field: FieldSpec, L_sym: int) -> np.ndarray:
    """Every nonzero error vector of length L_sym, one per row, in index order."""
    total = field.order ** L_sym
    if total > EXHAUSTIVE_ERROR_LIMIT:
        raise TooLargeForExhaustive(f"{field.order}^{L_sym} error vectors exceed the limit of 2^20")
    idx = np.arange(1, total, dtype=np.int64)
    powers = field.order ** np.arange(L_sym, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % field.order


def count_linear_misses(checker: LinearChecker, errors: np.ndarray) -> int:
    """Number of error rows e the roundtrip check accepts, i.e. with M1 e = 0."""
    residues = checker.field.matmul(checker.M1.data, errors.T)
    return int(np.count_nonzero(~residues.any(axis=0)))


def count_nonlinear_misses(field: FieldSpec, errors: np.ndarray, rng: np.random.Generator) -> int:
    """Error rows the equality check accepts, with every e sent on a fresh random packet p -> p + e."""
    p = rng.integers(0, field.order, errors.shape, dtype=np.int64)
    return int(np.count_nonzero(packets_equal(p, field.add(p, errors))))


# ============================================================================
# ATTACKERS
# ============================================================================

@dataclass(frozen=True, eq=False)
class AttackerStrategy:
    kind: AttackKind
    checker: Optional[LinearChecker] = None
    code: Optional[CodeSpec] = None
    corrupt_count: int = 1
    knows_encoder: bool = True
    knows_observations: bool = False

    def __post_init__(self):
        if self.kind is AttackKind.NULL_SPACE and self.checker is None:
            raise StrategyCodeMismatch("a null-space attacker needs the watchdog's linear checker")
        if self.kind is AttackKind.MIN_WEIGHT_FORGERY and self.code is None:
            raise StrategyCodeMismatch("a minimum-weight forgery needs the code")
        if self.kind is AttackKind.RAW_CORRUPTION and self.corrupt_count < 1:
            raise StrategyCodeMismatch(f"raw corruption of {self.corrupt_count} packets")
        if self.knows_observations:
            raise ProtocolError("attackers that know the watchdog's observations are not modelled")

    @classmethod
    def null_space(cls, checker: LinearChecker) -> "AttackerStrategy":
        return cls(AttackKind.NULL_SPACE, checker=checker)

    @classmethod
    def random_error(cls, checker: Optional[LinearChecker] = None) -> "AttackerStrategy":
        return cls(AttackKind.RANDOM_ERROR, checker=checker)

    @classmethod
    def min_weight(cls, code: CodeSpec) -> "AttackerStrategy":
        return cls(AttackKind.MIN_WEIGHT_FORGERY, code=code)

    @classmethod
    def raw(cls, count: int) -> "AttackerStrategy":
        return cls(AttackKind.RAW_CORRUPTION, corrupt_count=count)

    @property
    def label(self) -> str:
        if self.kind is AttackKind.RAW_CORRUPTION:
            return f"{self.kind.value}({self.corrupt_count})"
        return self.kind.value


def packet_error(strategy: AttackerStrategy, field: FieldSpec, L_sym: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Nonzero error vector e for one packet (the forwarded packet is p + e)."""
    if strategy.kind is AttackKind.NULL_SPACE:
        checker = strategy.checker
        if checker.field != field or checker.L_sym != L_sym:
            raise StrategyCodeMismatch(f"checker is {checker.m_check}x{checker.L_sym} over {checker.field!r}, "
                                       f"packets are {L_sym} symbols over {field!r}")
        basis = checker.kernel
        if not basis:
            raise NoUndetectableError("the check matrix has full column rank; no error passes unnoticed")
        e = np.zeros(L_sym, dtype=np.int64)
        while not e.any():
            e = combine(field, basis, rng.integers(0, field.order, len(basis)))
        return e
    if strategy.kind is AttackKind.RANDOM_ERROR:
        return random_nonzero_vector(field, L_sym, rng)
    raise StrategyCodeMismatch(f"{strategy.label} is a block attack, not a per-packet one")


def attack_block(strategy: AttackerStrategy, block: Block,
                 rng: np.random.Generator) -> Tuple[np.ndarray, TamperPlan]:
    """Tampered codeword (n x L) and the plan that produced it."""
    code, L = block.code, block.packet_len
    if strategy.kind is AttackKind.MIN_WEIGHT_FORGERY:
        if strategy.code is not code:
            raise StrategyCodeMismatch(f"forgery prepared for {strategy.code.label}, block uses {code.label}")
        plan = min_weight_forgery(code, rng, L, block.block_id)
    elif strategy.kind is AttackKind.RAW_CORRUPTION:
        if strategy.corrupt_count > code.n:
            raise StrategyCodeMismatch(f"cannot corrupt {strategy.corrupt_count} of {code.n} packets")
        plan = raw_corruption(code, strategy.corrupt_count, rng, L, block.block_id)
    else:
        position = int(rng.integers(code.n))
        delta = np.zeros((code.n, L), dtype=np.int64)
        delta[position] = packet_error(strategy, code.field, L, rng)
        plan = TamperPlan((position,), delta, block.block_id, ForgeryMode.PACKET_ERROR)
    return apply_tamper(code, block.codeword, plan), plan


# ============================================================================
# WATCHDOG OBSERVATIONS
# ============================================================================

class ObservationModel:
    """Supplies, per block, which positions W overheard from both sender and relay."""

    def observe(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def for_chunk(self, first_block: int, blocks: int, n: int) -> "ObservationModel":
        """The model to use for blocks [first_block, first_block + blocks) of a chunked run."""
        return self


@dataclass(frozen=True)
class BernoulliObservation(ObservationModel):
    """
    Each position is compared independently with probability p_obs. Also
    covers a watchdog that is duty-cycled off part of the time to save power.
    """
    p_obs: float

    def __post_init__(self):
        if not 0.0 <= self.p_obs <= 1.0:
            raise ProtocolError(f"p_obs must lie in [0, 1], got {self.p_obs}")

    def observe(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random(n) < self.p_obs


@dataclass(frozen=True)
class FixedObservation(ObservationModel):
    positions: frozenset

    def observe(self, n: int, rng: np.random.Generator) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[_checked_positions(self.positions, n)] = True
        return mask


def _checked_positions(observed: Iterable[int], n: int) -> List[int]:
    positions = sorted(int(j) for j in observed)
    if positions and (positions[0] < 0 or positions[-1] >= n):
        raise ProtocolError(f"observed positions {positions} outside [0, {n})")
    return positions


def watchdog_block_judge(original: np.ndarray, tampered: np.ndarray,
                         observed: Union[np.ndarray, Iterable[int]]) -> bool:
    """True (alarm) iff some observed packet differs between the two copies."""
    n = original.shape[0]
    if isinstance(observed, np.ndarray) and observed.dtype == bool:
        if observed.shape != (n,):
            raise ProtocolError(f"observation mask shape {observed.shape}, block has {n} packets")
        mask = observed
    else:
        mask = np.zeros(n, dtype=bool)
        mask[_checked_positions(observed, n)] = True
    differs = np.asarray(original != tampered).reshape(n, -1).any(axis=1)
    return bool(np.any(differs & mask))


# ============================================================================
# ONE BLOCK, END TO END
# ============================================================================

@dataclass(frozen=True)
class BlockOutcome:
    verdict: BlockVerdict
    compared: int               # packets W compared
    corrupted: int              # packets A changed
    decoder_clean: bool

    def __post_init__(self):
        if self.verdict is BlockVerdict.MISSED and (self.corrupted < 1 or not self.decoder_clean):
            raise ProtocolError(f"inconsistent miss: {self}")


def run_block(code: CodeSpec, strategy: Optional[AttackerStrategy], observation: ObservationModel,
              rng: np.random.Generator, packet_len: int = 1, block_id: int = 0) -> BlockOutcome:
    """
    encode -> attack -> watchdog comparison -> syndrome check -> verdict.
    When both the watchdog and the decoder would fire, the watchdog wins.
    """
    message = rng.integers(0, code.field.order, (code.k, packet_len), dtype=np.int64)
    block = make_block(code, message, block_id)
    if strategy is None:
        observed = observation.observe(code.n, rng)
        clean = detect(code, block.codeword) is Verdict.CLEAN
        return BlockOutcome(BlockVerdict.NO_ATTACK, int(observed.sum()), 0, clean)

    tampered, plan = attack_block(strategy, block, rng)
    observed = observation.observe(code.n, rng)
    alarm = watchdog_block_judge(block.codeword, tampered, observed)
    clean = detect(code, tampered) is Verdict.CLEAN
    if alarm:
        verdict = BlockVerdict.CAUGHT_BY_WATCHDOG
    elif not clean:
        verdict = BlockVerdict.CAUGHT_BY_DECODER
    else:
        verdict = BlockVerdict.MISSED
    return BlockOutcome(verdict, int(observed.sum()), len(plan.support), clean)

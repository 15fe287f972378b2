# tests/test_protocol.py
import numpy as np
import pytest

from core.algebra import FieldMatrix, field_make
from core.codec import make_block
from core.errors import (
    DimensionMismatch,
    NoUndetectableError,
    ProtocolError,
    StrategyCodeMismatch,
    TooLargeForExhaustive,
)
from core.protocol import (
    AttackerStrategy,
    AttackKind,
    BernoulliObservation,
    BlockOutcome,
    BlockVerdict,
    CheckVerdict,
    FixedObservation,
    LinearChecker,
    all_nonzero_errors,
    attack_block,
    count_linear_misses,
    count_nonlinear_misses,
    linear_check_roundtrip,
    nonlinear_check,
    packet_error,
    packets_equal,
    run_block,
    watchdog_block_judge,
)
from core.rng import make_rng


# ---------------------------------------------------------
# Per-packet checkers
# ---------------------------------------------------------
def test_checker_is_linear(gf7, rng):
    checker = LinearChecker.random(gf7, 3, 5, rng)
    a, a2, b, b2 = (rng.integers(0, 7, 5) for _ in range(4))
    left = checker.F(gf7.add(a, a2), gf7.add(b, b2))
    right = gf7.add(checker.F(a, b), checker.F(a2, b2))
    assert np.array_equal(left, right)


def test_checker_shapes(gf2, gf7):
    with pytest.raises(DimensionMismatch):
        LinearChecker(FieldMatrix.zeros(gf2, 2, 4), FieldMatrix.zeros(gf2, 2, 3))
    with pytest.raises(DimensionMismatch):
        LinearChecker(FieldMatrix.zeros(gf2, 2, 4), FieldMatrix.zeros(gf7, 2, 4))
    checker = LinearChecker.random(gf2, 2, 4, make_rng(0))
    with pytest.raises(DimensionMismatch):
        checker.F([0, 1, 0], [0, 1, 0])


@pytest.mark.parametrize("order,m_check,L_sym", [(2, 2, 4), (2, 3, 6), (3, 1, 4), (4, 2, 3)])
def test_roundtrip_accepts_exactly_the_kernel(order, m_check, L_sym):
    field = field_make(order)
    rng = make_rng(31, "roundtrip", order, m_check, L_sym)
    checker = LinearChecker.random(field, m_check, L_sym, rng)
    kernel_hits = 0
    for e in all_nonzero_errors(field, L_sym):
        p = rng.integers(0, order, L_sym)
        verdict = linear_check_roundtrip(checker, p, field.add(p, e))
        in_kernel = not np.any(checker.M1 @ e)
        assert (verdict is CheckVerdict.ACCEPT) == in_kernel
        kernel_hits += in_kernel
    assert kernel_hits == order ** checker.nullity - 1
    assert count_linear_misses(checker, all_nonzero_errors(field, L_sym)) == kernel_hits


def test_unmodified_packet_always_accepted(gf16, rng):
    checker = LinearChecker.random(gf16, 2, 6, rng)
    p = rng.integers(0, 16, 6)
    assert linear_check_roundtrip(checker, p, p) is CheckVerdict.ACCEPT
    assert nonlinear_check(p, p) is CheckVerdict.ACCEPT


def test_nonlinear_check_never_misses(gf2, rng):
    errors = all_nonzero_errors(gf2, 8)
    assert count_nonlinear_misses(gf2, errors, rng) == 0
    assert nonlinear_check([0, 1, 1], [0, 1, 0]) is CheckVerdict.REJECT
    with pytest.raises(DimensionMismatch):
        nonlinear_check([0, 1], [0, 1, 0])


def test_packets_equal_row_wise(gf7):
    p = np.array([[1, 2, 3], [4, 5, 6]])
    assert packets_equal(p, p).tolist() == [True, True]
    assert packets_equal(p, gf7.add(p, [[0, 0, 0], [0, 1, 0]])).tolist() == [True, False]
    with pytest.raises(DimensionMismatch):
        packets_equal(p, p[:, :2])


def test_nonlinear_count_accepts_zero_error(gf7, rng):
    errors = np.vstack([np.zeros(3, dtype=np.int64), all_nonzero_errors(gf7, 3)])
    assert count_nonlinear_misses(gf7, errors, rng) == 1


def test_all_nonzero_errors(gf2, gf7):
    errors = all_nonzero_errors(gf2, 4)
    assert errors.shape == (15, 4)
    assert errors.any(axis=1).all()
    assert len({tuple(row) for row in errors}) == 15
    assert all_nonzero_errors(gf7, 2).shape == (48, 2)
    with pytest.raises(TooLargeForExhaustive):
        all_nonzero_errors(gf2, 21)


# ---------------------------------------------------------
# Attackers
# ---------------------------------------------------------
def test_null_space_attacker_always_passes(gf2, rng):
    checker = LinearChecker.random(gf2, 3, 8, rng)
    strategy = AttackerStrategy.null_space(checker)
    for _ in range(200):
        e = packet_error(strategy, gf2, 8, rng)
        p = rng.integers(0, 2, 8)
        assert e.any()
        assert linear_check_roundtrip(checker, p, gf2.add(p, e)) is CheckVerdict.ACCEPT
        assert nonlinear_check(p, gf2.add(p, e)) is CheckVerdict.REJECT


def test_full_rank_checker_leaves_no_undetectable_error(gf2, rng):
    checker = LinearChecker(FieldMatrix.identity(gf2, 4), FieldMatrix.zeros(gf2, 4, 4))
    assert checker.nullity == 0
    with pytest.raises(NoUndetectableError):
        packet_error(AttackerStrategy.null_space(checker), gf2, 4, rng)


def test_random_error_is_nonzero(gf7, rng):
    strategy = AttackerStrategy.random_error()
    assert all(packet_error(strategy, gf7, 3, rng).any() for _ in range(200))


def test_strategy_preconditions(gf2, rng, rs63):
    checker = LinearChecker.random(gf2, 2, 4, rng)
    with pytest.raises(StrategyCodeMismatch):
        packet_error(AttackerStrategy.null_space(checker), gf2, 5, rng)
    with pytest.raises(StrategyCodeMismatch):
        AttackerStrategy(AttackKind.NULL_SPACE)
    with pytest.raises(StrategyCodeMismatch):
        AttackerStrategy(AttackKind.MIN_WEIGHT_FORGERY)
    with pytest.raises(StrategyCodeMismatch):
        AttackerStrategy.raw(0)
    with pytest.raises(StrategyCodeMismatch):
        packet_error(AttackerStrategy.min_weight(rs63), gf2, 4, rng)
    with pytest.raises(ProtocolError):
        AttackerStrategy(AttackKind.RANDOM_ERROR, knows_observations=True)


def test_strategy_labels(rs63):
    assert AttackerStrategy.raw(2).label == "raw-corruption(2)"
    assert AttackerStrategy.min_weight(rs63).label == "min-weight-forgery"


def test_forgery_for_another_code(rs63, rs15_11, rng):
    block = make_block(rs63, rng.integers(0, 7, (3, 1)))
    with pytest.raises(StrategyCodeMismatch):
        attack_block(AttackerStrategy.min_weight(rs15_11), block, rng)
    with pytest.raises(StrategyCodeMismatch):
        attack_block(AttackerStrategy.raw(7), block, rng)


def test_packet_attack_changes_one_position(rs63, rng):
    block = make_block(rs63, rng.integers(0, 7, (3, 2)))
    tampered, plan = attack_block(AttackerStrategy.random_error(), block, rng)
    assert len(plan.support) == 1
    assert np.count_nonzero((tampered != block.codeword).any(axis=1)) == 1


# ---------------------------------------------------------
# Watchdog judgement
# ---------------------------------------------------------
def test_block_judge_positions():
    original = np.array([[1], [2], [3], [4]])
    tampered = np.array([[1], [5], [3], [6]])
    assert watchdog_block_judge(original, tampered, [1])
    assert watchdog_block_judge(original, tampered, np.array([False, False, False, True]))
    assert not watchdog_block_judge(original, tampered, [0, 2])
    assert not watchdog_block_judge(original, tampered, [])
    with pytest.raises(ProtocolError):
        watchdog_block_judge(original, tampered, [4])
    with pytest.raises(ProtocolError):
        watchdog_block_judge(original, tampered, np.array([True, False]))


def test_observation_models(rng):
    assert not BernoulliObservation(0.0).observe(10, rng).any()
    assert BernoulliObservation(1.0).observe(10, rng).all()
    assert FixedObservation(frozenset({0, 3})).observe(5, rng).tolist() == [True, False, False, True, False]
    with pytest.raises(ProtocolError):
        BernoulliObservation(1.2)


# ---------------------------------------------------------
# Whole blocks
# ---------------------------------------------------------
def test_run_block_without_attack(rs63, rng):
    outcome = run_block(rs63, None, BernoulliObservation(0.5), rng, packet_len=3)
    assert outcome.verdict is BlockVerdict.NO_ATTACK
    assert outcome.decoder_clean
    assert outcome.corrupted == 0


def test_run_block_verdicts(rs63, rng):
    forgery = AttackerStrategy.min_weight(rs63)
    assert run_block(rs63, forgery, BernoulliObservation(1.0), rng).verdict is BlockVerdict.CAUGHT_BY_WATCHDOG
    missed = run_block(rs63, forgery, BernoulliObservation(0.0), rng)
    assert missed.verdict is BlockVerdict.MISSED
    assert missed.corrupted == 4 and missed.compared == 0
    raw = run_block(rs63, AttackerStrategy.raw(1), FixedObservation(frozenset()), rng)
    assert raw.verdict is BlockVerdict.CAUGHT_BY_DECODER


def test_watchdog_takes_precedence_over_decoder(rs63, rng):
    outcome = run_block(rs63, AttackerStrategy.raw(2), BernoulliObservation(1.0), rng, packet_len=2)
    assert outcome.verdict is BlockVerdict.CAUGHT_BY_WATCHDOG
    assert not outcome.decoder_clean


def test_forgery_miss_rate_matches_d_min(rs63):
    rng = make_rng(41, "miss-rate")
    forgery = AttackerStrategy.min_weight(rs63)
    observation = BernoulliObservation(0.5)
    trials = 4000
    misses = sum(run_block(rs63, forgery, observation, rng).verdict is BlockVerdict.MISSED
                 for _ in range(trials))
    assert misses / trials == pytest.approx(0.5 ** 4, abs=0.02)


def test_inconsistent_miss_rejected():
    with pytest.raises(ProtocolError):
        BlockOutcome(BlockVerdict.MISSED, compared=0, corrupted=0, decoder_clean=True)
    with pytest.raises(ProtocolError):
        BlockOutcome(BlockVerdict.MISSED, compared=0, corrupted=2, decoder_clean=False)

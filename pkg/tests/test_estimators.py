# tests/test_estimators.py
import math

import numpy as np
import pytest

from core.protocol import AttackerStrategy, BernoulliObservation
from core.rng import make_rng
from experiments.estimators import (
    EstimateWithCI,
    coverage_rate,
    fraction_estimate,
    standard_error,
    wilson_interval,
)
from experiments.harness import (
    TRIAL_CHUNK,
    BlockCounts,
    build_summary,
    check,
    chunk_tasks,
    estimate_p_miss,
    nondecreasing,
    nonincreasing,
    simulate_blocks,
    single_peak,
)


# ---------------------------------------------------------
# Intervals
# ---------------------------------------------------------
def test_normal_interval():
    est = EstimateWithCI.from_counts(500, 1000, seed=3)
    assert est.method == "normal"
    assert est.point == 0.5
    assert est.std_error == pytest.approx(math.sqrt(0.25 / 1000))
    assert est.ci_low == pytest.approx(0.5 - 1.959964 * est.std_error, abs=1e-6)
    assert est.covers(0.5) and not est.covers(0.6)
    assert est.to_dict()["seed"] == 3


def test_wilson_interval_for_rare_events():
    est = EstimateWithCI.from_counts(0, 1000)
    assert est.method == "wilson"
    assert est.ci_low == 0.0
    assert 0.0 < est.ci_high < 0.01
    low, high = wilson_interval(5, 100, 1.96)
    assert low < 0.05 < high


def test_interval_stays_in_unit_range():
    for successes in (0, 1, 10, 990, 1000):
        est = EstimateWithCI.from_counts(successes, 1000)
        assert 0.0 <= est.ci_low <= est.point <= est.ci_high <= 1.0


def test_invalid_counts():
    with pytest.raises(ValueError):
        EstimateWithCI.from_counts(1, 0)
    with pytest.raises(ValueError):
        EstimateWithCI.from_counts(11, 10)


def test_agrees_with():
    est = EstimateWithCI.from_counts(270, 1000)
    assert est.agrees_with(0.25)
    assert not est.agrees_with(0.4)


def test_coverage_near_nominal():
    assert coverage_rate(0.2, 1000, 1000, seed=5) >= 0.93


def test_fraction_estimate_and_standard_error():
    est = fraction_estimate(np.array([True, False, False, True]))
    assert (est.successes, est.trials) == (2, 4)
    assert standard_error(0.5, 4) == pytest.approx(0.25)
    assert math.isnan(standard_error(0.5, 0))


# ---------------------------------------------------------
# Chunked Monte Carlo
# ---------------------------------------------------------
def test_chunks_cover_every_trial(rs63):
    tasks = chunk_tasks(rs63, None, BernoulliObservation(0.5), 2500, seed=1, point=4)
    assert [t.blocks for t in tasks] == [TRIAL_CHUNK, TRIAL_CHUNK, 500]
    assert [t.first_block for t in tasks] == [0, TRIAL_CHUNK, 2 * TRIAL_CHUNK]
    assert {t.point for t in tasks} == {4}
    with pytest.raises(ValueError):
        chunk_tasks(rs63, None, BernoulliObservation(0.5), 0, seed=1, point=0)


def test_counts_add_up(rs63):
    counts = simulate_blocks(rs63, AttackerStrategy.min_weight(rs63), BernoulliObservation(0.5), 1500, seed=2)
    assert counts.trials == 1500
    assert counts.misses + counts.caught_by_watchdog + counts.caught_by_decoder == 1500
    assert counts.caught_by_decoder == 0
    assert (BlockCounts(1, 1) + BlockCounts(2, 0, 2)) == BlockCounts(3, 1, 2)


def test_result_independent_of_worker_count(rs63):
    strategy = AttackerStrategy.min_weight(rs63)
    observation = BernoulliObservation(0.4)
    serial = simulate_blocks(rs63, strategy, observation, 2200, seed=11, point=1, jobs=1)
    parallel = simulate_blocks(rs63, strategy, observation, 2200, seed=11, point=1, jobs=2)
    assert serial == parallel


def test_chunks_draw_independent_streams(rs63):
    tasks = chunk_tasks(rs63, None, BernoulliObservation(0.5), 2000, seed=11, point=0)
    tasks += chunk_tasks(rs63, None, BernoulliObservation(0.5), 1000, seed=11, point=1)
    draws = {make_rng(t.seed, t.point, t.chunk).integers(1 << 62) for t in tasks}
    assert len(draws) == 3


def test_estimate_p_miss_matches_closed_form(rs63):
    est = estimate_p_miss(rs63, AttackerStrategy.min_weight(rs63), BernoulliObservation(0.3), 5000, seed=13)
    assert est.agrees_with(0.7 ** 4)


# ---------------------------------------------------------
# Summaries and curve shapes
# ---------------------------------------------------------
def test_summary_flags_failures():
    checks = []
    check(checks, 0, "within-3-se", True)
    check(checks, 1, "within-3-se", False)
    summary = build_summary("demo", {"seed": 1}, [{}, {}], checks, {"monotone": True})
    assert summary["checks_passed"] == 1 and summary["checks_failed"] == 1
    assert not summary["all_passed"]
    assert build_summary("demo", {}, [], [], {"monotone": True})["all_passed"]


def test_curve_shapes():
    assert nonincreasing([3, 2, 2, 1])
    assert not nonincreasing([1, 2])
    assert nondecreasing([1, 1, 2])
    assert single_peak([0.1, 0.3, 0.4, 0.2])
    assert not single_peak([0.1, 0.2, 0.3])
    assert not single_peak([0.3, 0.1, 0.2, 0.1])

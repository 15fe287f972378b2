# tests/test_simnet.py
import csv
import io

import numpy as np
import pytest

from core.errors import SimulationError
from core.rng import make_rng
from core.simnet import (
    DUMMY_SEQ,
    NetworkQueues,
    ReceptionKind,
    Topology,
    TopologyMode,
    TraceObservation,
    run_sim,
    single_flow_schedule,
    slots_for_delivery,
    step_slot,
)

# draws for (S1, A, S2, B); a sender is active when its draw is below alpha
ON, OFF = 0.0, 0.99


@pytest.fixture
def two_flows():
    return Topology.two_flows()


# ---------------------------------------------------------
# Topology
# ---------------------------------------------------------
def test_two_flow_topology(two_flows):
    assert two_flows.senders == ("S1", "A", "S2", "B")
    assert two_flows.links == ("S1->A", "A->D1", "S2->B", "B->D2")
    assert two_flows.audibility["W"] == frozenset(two_flows.senders)


def test_from_mode():
    assert Topology.from_mode("single-flow").mode is TopologyMode.SINGLE_FLOW
    assert Topology.from_mode(TopologyMode.TWO_FLOWS).senders[0] == "S1"


# ---------------------------------------------------------
# One slot
# ---------------------------------------------------------
def test_relay_then_forward(two_flows, rng):
    queues = NetworkQueues.empty(two_flows)
    first = step_slot(two_flows, 0.5, rng, queues, 0, np.array([ON, OFF, OFF, OFF]))
    assert str(first.outcomes["A"]) == "S1:0"
    assert str(first.outcomes["W"]) == "S1:0"
    assert first.outcomes["D1"].kind is ReceptionKind.IDLE
    assert list(queues.relay["A"]) == [(0, True)]

    second = step_slot(two_flows, 0.5, rng, queues, 1, np.array([OFF, ON, OFF, OFF]))
    assert str(second.outcomes["D1"]) == "A:0"
    (record,) = second.deliveries
    assert record.seq == 0 and record.comparable
    assert not queues.relay["A"]


def test_flows_only_collide_at_the_watchdog(two_flows, rng):
    queues = NetworkQueues.empty(two_flows)
    event = step_slot(two_flows, 0.5, rng, queues, 0, np.array([ON, OFF, OFF, ON]))
    assert str(event.outcomes["A"]) == "S1:0"
    assert event.outcomes["W"].kind is ReceptionKind.COLLISION
    assert event.sent["B"] == DUMMY_SEQ
    assert str(event.outcomes["D2"]) == f"B:{DUMMY_SEQ}"
    assert list(queues.relay["A"]) == [(0, False)]
    assert event.deliveries == ()


def test_half_duplex_relay_misses_its_source(two_flows, rng):
    queues = NetworkQueues.empty(two_flows)
    event = step_slot(two_flows, 0.5, rng, queues, 0, np.array([ON, ON, OFF, OFF]))
    assert event.outcomes["A"].kind is ReceptionKind.COLLISION
    assert not queues.relay["A"]
    assert queues.next_seq["S1"] == 1


def test_invalid_alpha(two_flows, rng):
    with pytest.raises(SimulationError):
        step_slot(two_flows, 1.5, rng, NetworkQueues.empty(two_flows))
    with pytest.raises(SimulationError):
        step_slot(two_flows, 0.5, rng, NetworkQueues.empty(two_flows), alpha_flow2=-0.1)


# ---------------------------------------------------------
# Full runs
# ---------------------------------------------------------
def test_alpha_zero_is_silent(two_flows):
    stats = run_sim(two_flows, 0.0, 500, seed=1)
    assert stats.slots == 500
    assert stats.flow1_delivered == 0
    assert all(v == 0 for v in stats.link_successes.values())
    assert np.isnan(stats.q_hat)


def test_alpha_one_collides_everywhere(two_flows):
    trace = io.StringIO()
    stats = run_sim(two_flows, 1.0, 50, seed=1, trace=trace)
    assert stats.flow1_delivered == 0
    rows = list(csv.DictReader(io.StringIO(trace.getvalue())))
    assert all(row["W"] == "collision" for row in rows)
    assert all(row["transmitters"] == "S1;A;S2;B" for row in rows)


def test_runs_are_reproducible(two_flows):
    a = run_sim(two_flows, 0.2, 20000, seed=9)
    b = run_sim(two_flows, 0.2, 20000, seed=9)
    c = run_sim(two_flows, 0.2, 20000, seed=10)
    assert a.summary() == b.summary()
    assert np.array_equal(a.delivered_seqs, b.delivered_seqs)
    assert np.array_equal(a.comparable_flags, b.comparable_flags)
    assert not np.array_equal(a.comparable_flags, c.comparable_flags)


def test_relays_deliver_in_order(two_flows):
    stats = run_sim(two_flows, 0.3, 20000, seed=3)
    assert stats.flow1_delivered > 0
    assert np.all(np.diff(stats.delivered_seqs) > 0)
    assert stats.link_successes["A->D1"] >= stats.flow1_delivered


def test_delivered_target_stops_early(two_flows):
    stats = run_sim(two_flows, 0.3, 10 ** 6, seed=4, delivered_target=200)
    assert stats.flow1_delivered == 200
    assert stats.slots < 10 ** 6


def test_trace_format(two_flows):
    trace = io.StringIO()
    run_sim(two_flows, 0.4, 30, seed=5, trace=trace)
    rows = list(csv.reader(io.StringIO(trace.getvalue())))
    assert rows[0] == ["slot", "transmitters", "A", "D1", "B", "D2", "W"]
    assert len(rows) == 31
    assert [int(r[0]) for r in rows[1:]] == list(range(30))


def test_single_flow_source_always_overheard():
    stats = run_sim(Topology.single_flow(), 0.3, 20000, seed=6)
    assert stats.p_source_overheard == 1.0
    assert stats.q_hat == pytest.approx(0.7, abs=0.05)


def test_run_preconditions(two_flows):
    with pytest.raises(SimulationError):
        run_sim(two_flows, 0.2, 0, seed=1)
    with pytest.raises(SimulationError):
        slots_for_delivery(0.0, 100)


@pytest.mark.slow
def test_comparable_fraction_two_flows(two_flows):
    stats = run_sim(two_flows, 0.2, slots_for_delivery(0.2, 20000), seed=7, delivered_target=20000)
    assert stats.flow1_delivered == 20000
    assert stats.q_hat == pytest.approx(0.8 ** 5, abs=0.015)
    assert stats.link_rate("S1->A") == pytest.approx(0.16, abs=0.01)


# ---------------------------------------------------------
# Trace-driven observations
# ---------------------------------------------------------
def test_trace_observation_consumes_windows(rng):
    obs = TraceObservation(np.array([1, 0, 1, 1, 0, 0, 1], dtype=bool))
    assert obs.blocks_available(3) == 2
    assert obs.observe(3, rng).tolist() == [True, False, True]
    assert obs.observe(3, rng).tolist() == [True, False, False]
    with pytest.raises(SimulationError):
        obs.observe(3, rng)


def test_trace_observation_chunks():
    obs = TraceObservation(np.arange(12) % 3 == 0)
    chunk = obs.for_chunk(1, 2, 3)
    assert chunk.flags.tolist() == (np.arange(3, 9) % 3 == 0).tolist()


def test_interleaved_trace_observation():
    flags = np.array([True, False] * 6)
    obs = TraceObservation(flags, interleave_depth=2)
    rng = make_rng(8, "interleave")
    assert obs.blocks_available(3) == 2
    assert obs.observe(3, rng).shape == (3,)
    assert obs.cursor == 6
    with pytest.raises(SimulationError):
        TraceObservation(flags, interleave_depth=0)


# ---------------------------------------------------------
# Centralized schedule
# ---------------------------------------------------------
@pytest.mark.parametrize("L,m,expected", [(1, 0, 0.5), (100, 0, 0.5), (100, 50, 0.4)])
def test_schedule_throughput(L, m, expected):
    schedule = single_flow_schedule(L, m)
    assert schedule.conflict_free()
    assert schedule.throughput == pytest.approx(expected)


def test_schedule_preconditions():
    with pytest.raises(SimulationError):
        single_flow_schedule(0, 1)

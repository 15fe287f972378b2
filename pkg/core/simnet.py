"""
Slot-level network simulator
----------------------------
Two relay flows S1 -> A -> D1 and S2 -> B -> D2 share a watchdog W that can
hear all four transmitters. Every sender runs slotted ALOHA: in each slot it
transmits independently with its access probability, sending a dummy packet
when it has nothing to forward.

Reception rule: a receiver gets a packet iff exactly one transmitter it can
hear is active and it is not transmitting itself. Flows only interfere at W.

Sources are saturated and put a fresh sequence number on every transmission
(no MAC retransmission). Relays forward what they received in FIFO order.

The single-flow topology (S -> A -> D watched by W) is also available, both
under ALOHA and as the centralized TDMA schedule.
"""

import csv
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Dict, FrozenSet, List, Optional, TextIO, Tuple

import numpy as np

from core.errors import SimulationError
from core.protocol import ObservationModel
from core.rng import make_rng

logger = logging.getLogger(__name__)

DUMMY_SEQ = -1
SLOT_CHUNK = 1 << 14


class TopologyMode(str, Enum):
    SINGLE_FLOW = "single-flow"
    TWO_FLOWS = "two-flows"


class ReceptionKind(str, Enum):
    RECEIVED = "received"
    COLLISION = "collision"
    IDLE = "idle"


# ============================================================================
# TOPOLOGY
# ============================================================================

@dataclass(frozen=True)
class Flow:
    source: str
    relay: str
    destination: str

    @property
    def name(self) -> str:
        return f"{self.source}->{self.destination}"

    @property
    def links(self) -> Tuple[str, str]:
        return f"{self.source}->{self.relay}", f"{self.relay}->{self.destination}"


@dataclass(frozen=True, eq=False)
class Topology:
    mode: TopologyMode
    flows: Tuple[Flow, ...]
    watchdog: str
    audibility: Dict[str, FrozenSet[str]]     # receiver -> transmitters it can hear

    def __post_init__(self):
        if self.audibility.get(self.watchdog) != frozenset(self.senders):
            raise SimulationError(f"watchdog {self.watchdog} must hear every sender {self.senders}")
        for f in self.flows:
            if f.source not in self.audibility[f.relay] or f.relay not in self.audibility[f.destination]:
                raise SimulationError(f"flow {f.name} is not connected")

    @classmethod
    def two_flows(cls) -> "Topology":
        flows = (Flow("S1", "A", "D1"), Flow("S2", "B", "D2"))
        return cls(TopologyMode.TWO_FLOWS, flows, "W", {
            "A": frozenset({"S1"}),
            "D1": frozenset({"A"}),
            "B": frozenset({"S2"}),
            "D2": frozenset({"B"}),
            "W": frozenset({"S1", "A", "S2", "B"}),
        })

    @classmethod
    def single_flow(cls) -> "Topology":
        return cls(TopologyMode.SINGLE_FLOW, (Flow("S", "A", "D"),), "W", {
            "A": frozenset({"S"}),
            "D": frozenset({"A"}),
            "W": frozenset({"S", "A"}),
        })

    @classmethod
    def from_mode(cls, mode: TopologyMode) -> "Topology":
        return cls.two_flows() if TopologyMode(mode) is TopologyMode.TWO_FLOWS else cls.single_flow()

    @property
    def senders(self) -> Tuple[str, ...]:
        return tuple(node for f in self.flows for node in (f.source, f.relay))

    @property
    def receivers(self) -> Tuple[str, ...]:
        return tuple(self.audibility)

    @property
    def links(self) -> Tuple[str, ...]:
        return tuple(link for f in self.flows for link in f.links)


# ============================================================================
# SLOT STATE
# ============================================================================

@dataclass(frozen=True)
class Reception:
    kind: ReceptionKind
    sender: Optional[str] = None
    seq: Optional[int] = None

    def __str__(self) -> str:
        if self.kind is ReceptionKind.RECEIVED:
            return f"{self.sender}:{self.seq}"
        return self.kind.value


IDLE = Reception(ReceptionKind.IDLE)
COLLISION = Reception(ReceptionKind.COLLISION)


@dataclass(frozen=True)
class ObservationRecord:
    seq: int
    overheard_from_source: bool
    overheard_from_relay: bool
    flow: int = 0

    @property
    def comparable(self) -> bool:
        return self.overheard_from_source and self.overheard_from_relay


@dataclass(frozen=True)
class SlotEvent:
    slot: int
    transmitters: Tuple[str, ...]
    sent: Dict[str, int]                    # sender -> sequence number (DUMMY_SEQ for dummies)
    outcomes: Dict[str, Reception]          # receiver -> what it got
    deliveries: Tuple[ObservationRecord, ...] = ()


@dataclass
class NetworkQueues:
    next_seq: Dict[str, int]
    relay: Dict[str, Deque[Tuple[int, bool]]]   # FIFO of (seq, overheard from source)

    @classmethod
    def empty(cls, topology: Topology) -> "NetworkQueues":
        return cls({f.source: 0 for f in topology.flows}, {f.relay: deque() for f in topology.flows})


def _sender_rates(topology: Topology, alpha: float, alpha_flow2: Optional[float]) -> List[float]:
    for name, value in (("alpha", alpha), ("alpha_flow2", alpha_flow2)):
        if value is not None and not 0.0 <= value <= 1.0:
            raise SimulationError(f"{name} must lie in [0, 1], got {value}")
    rates = []
    for i, _ in enumerate(topology.flows):
        rate = alpha if i == 0 or alpha_flow2 is None else alpha_flow2
        rates.extend((rate, rate))
    return rates


def step_slot(topology: Topology, alpha: float, rng: np.random.Generator, queues: NetworkQueues,
              slot: int = 0, draws: Optional[np.ndarray] = None,
              alpha_flow2: Optional[float] = None) -> SlotEvent:
    """Advance the network by one slot; queues are updated in place."""
    senders = topology.senders
    rates = _sender_rates(topology, alpha, alpha_flow2)
    if draws is None:
        draws = rng.random(len(senders))
    active = tuple(s for s, u, r in zip(senders, draws, rates) if u < r)
    active_set = frozenset(active)

    # --- what goes on the air ---
    sent: Dict[str, int] = {}
    for f in topology.flows:
        if f.source in active_set:
            sent[f.source] = queues.next_seq[f.source]
            queues.next_seq[f.source] += 1
        if f.relay in active_set:
            backlog = queues.relay[f.relay]
            sent[f.relay] = backlog[0][0] if backlog else DUMMY_SEQ

    # --- who hears what ---
    outcomes: Dict[str, Reception] = {}
    for rx, audible in topology.audibility.items():
        heard = [s for s in active if s in audible]
        if not heard:
            outcomes[rx] = IDLE
        elif len(heard) > 1 or rx in active_set:
            outcomes[rx] = COLLISION
        else:
            outcomes[rx] = Reception(ReceptionKind.RECEIVED, heard[0], sent[heard[0]])
    for rx, got in outcomes.items():
        if got.kind is ReceptionKind.RECEIVED and rx in active_set:
            raise SimulationError(f"half-duplex violated: {rx} transmits and receives in slot {slot}")

    # --- queue updates ---
    watch = outcomes[topology.watchdog]
    deliveries = []
    for i, f in enumerate(topology.flows):
        if sent.get(f.relay, DUMMY_SEQ) != DUMMY_SEQ:
            seq, from_source = queues.relay[f.relay].popleft()
            at_dst = outcomes[f.destination]
            if at_dst.kind is ReceptionKind.RECEIVED and at_dst.sender == f.relay:
                from_relay = watch.kind is ReceptionKind.RECEIVED and watch.sender == f.relay
                deliveries.append(ObservationRecord(seq, from_source, from_relay, i))
        at_relay = outcomes[f.relay]
        if at_relay.kind is ReceptionKind.RECEIVED and at_relay.sender == f.source:
            from_source = watch.kind is ReceptionKind.RECEIVED and watch.sender == f.source
            queues.relay[f.relay].append((at_relay.seq, from_source))

    return SlotEvent(slot, active, sent, outcomes, tuple(deliveries))


# ============================================================================
# FULL RUN
# ============================================================================

@dataclass
class SimStats:
    mode: str
    alpha: float
    alpha_flow2: float
    seed: int
    slots: int                              # slots actually simulated
    link_successes: Dict[str, int]          # packets (dummies included) received over each link
    delivered: Dict[str, int]               # real packets delivered end to end, per flow
    source_received: int                    # flow-1 packets the relay received
    source_overheard: int                   # ... of which W also overheard from the source
    delivered_seqs: np.ndarray = field(repr=False)
    overheard_source: np.ndarray = field(repr=False)     # flow 1, delivery order
    overheard_relay: np.ndarray = field(repr=False)

    @property
    def flow1_delivered(self) -> int:
        return int(self.delivered_seqs.size)

    @property
    def comparable_flags(self) -> np.ndarray:
        return self.overheard_source & self.overheard_relay

    @property
    def comparable(self) -> int:
        return int(self.comparable_flags.sum())

    @property
    def q_hat(self) -> float:
        """Fraction of flow-1 deliveries W could compare."""
        return self.comparable / self.flow1_delivered if self.flow1_delivered else float("nan")

    def link_rate(self, link: str) -> float:
        return self.link_successes[link] / self.slots

    @property
    def p_source_overheard(self) -> float:
        return self.source_overheard / self.source_received if self.source_received else float("nan")

    @property
    def p_relay_overheard(self) -> float:
        n = self.flow1_delivered
        return float(self.overheard_relay.sum()) / n if n else float("nan")

    @property
    def end_to_end_rate(self) -> float:
        return self.flow1_delivered / self.slots

    def summary(self) -> Dict:
        return {
            "mode": self.mode,
            "alpha": self.alpha,
            "alpha_flow2": self.alpha_flow2,
            "seed": self.seed,
            "slots": self.slots,
            "link_successes": dict(self.link_successes),
            "delivered": dict(self.delivered),
            "comparable": self.comparable,
            "q_hat": self.q_hat,
            "p_source_overheard": self.p_source_overheard,
            "p_relay_overheard": self.p_relay_overheard,
        }


def _trace_writer(trace: TextIO, topology: Topology):
    writer = csv.writer(trace, lineterminator="\n")
    writer.writerow(["slot", "transmitters"] + list(topology.receivers))
    return writer


def run_sim(topology: Topology, alpha: float, slots: int, seed: int,
            alpha_flow2: Optional[float] = None, delivered_target: Optional[int] = None,
            trace: Optional[TextIO] = None) -> SimStats:
    """
    Simulate up to `slots` slots, stopping early once flow 1 has delivered
    `delivered_target` packets. Identical arguments give identical stats.

    The optional trace gets one CSV row per slot: slot, transmitters joined
    by ';', then one column per receiver holding 'idle', 'collision' or
    'sender:seq' (seq -1 marks a dummy).
    """
    if slots < 1:
        raise SimulationError(f"slots must be >= 1, got {slots}")
    rng = make_rng(seed, "simnet", topology.mode.value)
    queues = NetworkQueues.empty(topology)
    writer = _trace_writer(trace, topology) if trace is not None else None
    n_senders = len(topology.senders)
    first = topology.flows[0]

    link_successes = {link: 0 for link in topology.links}
    delivered = {f.name: 0 for f in topology.flows}
    source_received = source_overheard = 0
    seqs: List[int] = []
    from_source: List[bool] = []
    from_relay: List[bool] = []

    slot = 0
    done = False
    while slot < slots and not done:
        chunk = rng.random((min(SLOT_CHUNK, slots - slot), n_senders))
        for draws in chunk:
            event = step_slot(topology, alpha, rng, queues, slot, draws, alpha_flow2)
            slot += 1
            for f in topology.flows:
                hop1, hop2 = f.links
                if event.outcomes[f.relay].sender == f.source:
                    link_successes[hop1] += 1
                if event.outcomes[f.destination].sender == f.relay:
                    link_successes[hop2] += 1
            got = event.outcomes[first.relay]
            if got.sender == first.source:
                source_received += 1
                watch = event.outcomes[topology.watchdog]
                source_overheard += watch.sender == first.source
            for record in event.deliveries:
                delivered[topology.flows[record.flow].name] += 1
                if record.flow == 0:
                    seqs.append(record.seq)
                    from_source.append(record.overheard_from_source)
                    from_relay.append(record.overheard_from_relay)
            if writer is not None:
                writer.writerow([event.slot, ";".join(event.transmitters)]
                                + [str(event.outcomes[rx]) for rx in topology.receivers])
            if delivered_target is not None and len(seqs) >= delivered_target:
                done = True
                break

    stats = SimStats(
        mode=topology.mode.value,
        alpha=alpha,
        alpha_flow2=alpha if alpha_flow2 is None else alpha_flow2,
        seed=seed,
        slots=slot,
        link_successes=link_successes,
        delivered=delivered,
        source_received=source_received,
        source_overheard=source_overheard,
        delivered_seqs=np.array(seqs, dtype=np.int64),
        overheard_source=np.array(from_source, dtype=bool),
        overheard_relay=np.array(from_relay, dtype=bool),
    )
    logger.info("simulated %d slots at alpha=%g: %d delivered, q_hat=%.5f",
                stats.slots, alpha, stats.flow1_delivered, stats.q_hat)
    return stats


def slots_for_delivery(alpha: float, delivered_target: int, margin: float = 1.5) -> int:
    """Slot cap that comfortably covers delivered_target flow-1 deliveries at rate alpha (1 - alpha)."""
    if not 0 < alpha < 1:
        raise SimulationError(f"alpha must lie in (0, 1), got {alpha}")
    return int(np.ceil(margin * delivered_target / (alpha * (1 - alpha)))) + 1000


# ============================================================================
# WATCHDOG OBSERVATIONS FROM A TRACE
# ============================================================================

class TraceObservation(ObservationModel):
    """
    Feeds protocol.run_block the comparable flags of a simulated run. Each
    block consumes interleave_depth * n consecutive deliveries; with depth
    D > 1 the block's packets sit at random positions inside that window,
    as they would after scrambling D blocks together.
    """

    def __init__(self, flags: np.ndarray, interleave_depth: int = 1):
        if interleave_depth < 1:
            raise SimulationError(f"interleave depth must be >= 1, got {interleave_depth}")
        self.flags = np.asarray(flags, dtype=bool)
        self.interleave_depth = interleave_depth
        self.cursor = 0

    def blocks_available(self, n: int) -> int:
        return (self.flags.size - self.cursor) // (self.interleave_depth * n)

    def for_chunk(self, first_block: int, blocks: int, n: int) -> "TraceObservation":
        span = self.interleave_depth * n
        start = self.cursor + first_block * span
        return TraceObservation(self.flags[start:start + blocks * span], self.interleave_depth)

    def observe(self, n: int, rng: np.random.Generator) -> np.ndarray:
        span = self.interleave_depth * n
        if self.cursor + span > self.flags.size:
            raise SimulationError(f"trace exhausted after {self.cursor} deliveries")
        window = self.flags[self.cursor:self.cursor + span]
        self.cursor += span
        if self.interleave_depth == 1:
            return window.copy()
        return window[np.sort(rng.choice(span, n, replace=False))]


# ============================================================================
# SINGLE FLOW, CENTRALIZED SCHEDULE
# ============================================================================

@dataclass(frozen=True)
class ScheduleEntry:
    start: int          # symbol time
    length: int
    tx: str
    rx: str

    @property
    def end(self) -> int:
        return self.start + self.length

    def interferes_with(self, other: "ScheduleEntry") -> bool:
        overlap = self.start < other.end and other.start < self.end
        return overlap and bool({self.tx, self.rx} & {other.tx, other.rx})


@dataclass(frozen=True)
class Schedule:
    L_sym: int
    m_check: int
    entries: Tuple[ScheduleEntry, ...]

    @property
    def period(self) -> int:
        return max(e.end for e in self.entries)

    @property
    def throughput(self) -> float:
        """Payload symbols delivered per symbol time."""
        return self.L_sym / self.period

    def conflict_free(self) -> bool:
        entries = self.entries
        return not any(a.interferes_with(b) for i, a in enumerate(entries) for b in entries[i + 1:])


def single_flow_schedule(L_sym: int, m_check: int) -> Schedule:
    """TDMA round: S -> A for L_sym, A -> D for L_sym, W -> D for m_check symbol times."""
    if L_sym < 1 or m_check < 0:
        raise SimulationError(f"need L_sym >= 1 and m_check >= 0, got {L_sym}, {m_check}")
    entries = [ScheduleEntry(0, L_sym, "S", "A"), ScheduleEntry(L_sym, L_sym, "A", "D")]
    if m_check:
        entries.append(ScheduleEntry(2 * L_sym, m_check, "W", "D"))
    schedule = Schedule(L_sym, m_check, tuple(entries))
    if not schedule.conflict_free():
        raise SimulationError("single-flow schedule has interfering entries")
    return schedule

"""
Synchronous round-based network simulator.

Each round is one tick. Messages sent in a round are delivered at the
start of the next one. Within a round honest parties step first in id
order, then corrupt parties, then the trusted node; a rushing adversary
sees the honest messages addressed to corrupt parties of the same round.
The run ends once every honest party has halted.
"""

import hashlib
import logging
from fractions import Fraction
from math import floor

from datashare.config import config
from datashare.errors import InvalidInputError, SimulationTimeoutError
from datashare.simnet.models import (
    NODE,
    AbortEvent,
    CheckpointEvent,
    ClockEvent,
    Message,
    MessageEvent,
    OutputEvent,
    PhaseEvent,
    Protocol,
    SimConfig,
    StepContext,
    Transcript,
    canonical_json,
)

logger = logging.getLogger(__name__)


def digest(message: Message) -> str:
    return hashlib.sha256(canonical_json(message.payload).encode()).hexdigest()


def steps_between(speed: Fraction, start: int, end: int) -> int:
    """Chain steps a solver of this speed completes over ticks start..end - 1."""
    return floor(speed * end) - floor(speed * start)


def compute_budget(config_: SimConfig, party: int, tick: int) -> int:
    return steps_between(config_.speed_of(party), tick, tick + 1)


def run(sim: SimConfig, protocol: Protocol) -> Transcript:
    machines = protocol.machines(sim)
    schedule = protocol.schedule(sim)
    adversary = sim.adversary
    transcript = Transcript()
    honest = sorted(p for p in machines if p != NODE and not sim.is_corrupt(p))
    corrupt = sorted(p for p in machines if p != NODE and sim.is_corrupt(p))
    order = honest + corrupt + ([NODE] if NODE in machines else [])

    inboxes: dict[int, list[Message]] = {party: [] for party in machines}
    active = set(machines)
    # with nobody honest, run until every machine is done
    watched = set(honest) or set(machines)
    silenced: set[int] = set()
    checkpoints = 0
    current_phase = -1
    tick = 0

    while active & watched:
        if tick >= config.simulation.round_cap:
            logger.error(
                "%s hit the round cap at tick %d",
                protocol.name,
                tick,
                extra={"protocol": protocol.name, "tick": tick},
            )
            raise SimulationTimeoutError(
                f"Simulation exceeded {config.simulation.round_cap} rounds",
                transcript=transcript,
            )
        phase, within = schedule.locate(tick)
        if phase != current_phase:
            current_phase = phase
            transcript.append(PhaseEvent(tick=tick, phase=phase))
        aborting = adversary.abort_at is not None and (phase, within) >= adversary.abort_at

        delivered = {party: inboxes[party] for party in machines}
        inboxes = {party: [] for party in machines}
        honest_sends: list[Message] = []

        for party in order:
            if party not in active:
                continue
            silent = aborting and sim.is_corrupt(party)
            if silent and party not in silenced:
                silenced.add(party)
                transcript.append(
                    AbortEvent(tick=tick, party=party, reason="corrupt party stops sending")
                )
                logger.debug(
                    "Corrupt party %d aborts at %s",
                    party,
                    (phase, within),
                    extra={"protocol": protocol.name, "tick": tick, "phase": phase, "party": party},
                )
            rushed = ()
            if adversary.rushing and sim.is_corrupt(party):
                rushed = tuple(m for m in honest_sends if sim.is_corrupt(m.receiver))
            ctx = StepContext(
                round=tick,
                inbox=tuple(delivered[party]),
                rushed=rushed,
                compute_budget=compute_budget(sim, party, tick),
            )
            result = machines[party].step(ctx)

            for message in [] if silent else result.sends:
                if message.sender != party or message.receiver not in machines:
                    raise InvalidInputError(f"Party {party} sent a malformed message {message}")
                transcript.append(
                    MessageEvent(
                        tick=tick,
                        sender=party,
                        receiver=message.receiver,
                        digest=digest(message),
                    )
                )
                if message.receiver in active:
                    inboxes[message.receiver].append(message)
                if not sim.is_corrupt(party):
                    honest_sends.append(message)
            if result.clock_evaluations:
                transcript.append(
                    ClockEvent(tick=tick, party=party, count=result.clock_evaluations)
                )
            if result.has_output:
                transcript.append(OutputEvent(tick=tick, party=party, value=result.output))
            if result.checkpoint:
                checkpoints += 1
                transcript.append(CheckpointEvent(tick=tick, index=checkpoints, party=party))
            if result.abort is not None:
                transcript.append(AbortEvent(tick=tick, party=party, reason=result.abort))
            if result.halted:
                active.discard(party)
        tick += 1

    logger.debug(
        "%s finished after %d ticks with %d events",
        protocol.name,
        tick,
        len(transcript.events),
        extra={"protocol": protocol.name, "tick": tick},
    )
    return transcript


def clock_window_counts(
    transcript: Transcript, parties: list[int] | None = None
) -> list[dict[int, int]]:
    """Clock evaluations per party between each pair of consecutive checkpoints."""
    positions = [
        index
        for index, event in enumerate(transcript.events)
        if isinstance(event, CheckpointEvent)
    ]
    if not positions:
        raise InvalidInputError("Transcript has no checkpoints")
    if parties is None:
        parties = sorted(
            {event.party for event in transcript.events if isinstance(event, ClockEvent)}
        )
    windows = []
    for start, end in zip(positions, positions[1:]):
        counts = dict.fromkeys(parties, 0)
        for event in transcript.events[start + 1 : end]:
            if isinstance(event, ClockEvent) and event.party in counts:
                counts[event.party] += event.count
        windows.append(counts)
    return windows

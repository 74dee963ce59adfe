"""
Ordered MPC: the inputs are shared once, then outputs are released in n
phases, one party per phase, in the order the ordering function picks.

The general secure computation each phase needs is delegated to a backend
running at the trusted node; the shipped one is an ideal functionality
that keeps a ledger of everything it hands to corrupt parties.
"""

import json
import logging
from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from typing import Any

import numpy as np

from datashare.errors import InvalidInputError, ProtocolAbort
from datashare.ordered.models import (
    LeakageRecord,
    MaskedPhaseOutput,
    OrderedRun,
    OrderedSpec,
    ThresholdMode,
)
from datashare.sharing.models import ByteShare
from datashare.sharing.service import reconstruct_bytes, share_bytes
from datashare.simnet.models import (
    NODE,
    Message,
    PartyMachine,
    PhaseSchedule,
    Protocol,
    SimConfig,
    StepContext,
    StepResult,
    Transcript,
    canonical_json,
)
from datashare.simnet.service import run
from datashare.utils.randomness import random_bits, substream

logger = logging.getLogger(__name__)


def masked_phase_vector(
    pi: Sequence[int],
    y: Sequence[int],
    phase: int,
    masks: Sequence[int | None],
    output_length: int,
) -> MaskedPhaseOutput:
    """
    Slot j carries y_j when j is served at this phase and the empty output
    otherwise, XOR-masked with the mask j contributed. Slots without a
    mask stay empty.
    """
    bottom = 1 << output_length
    z = []
    for j, mask in enumerate(masks):
        if mask is None:
            z.append(None)
            continue
        tagged = y[j] if pi[phase - 1] == j else bottom
        z.append(tagged ^ mask)
    return MaskedPhaseOutput(phase=phase, z=tuple(z))


def recover(z: int, mask: int, output_length: int) -> int | None:
    value = z ^ mask
    if value >> output_length:
        return None
    return value


def encode_state(pi: Sequence[int], y: Sequence[int]) -> bytes:
    return canonical_json({"pi": list(pi), "y": list(y)}).encode()


def decode_state(data: bytes) -> tuple[tuple[int, ...], tuple[int, ...]]:
    try:
        state = json.loads(data)
        return tuple(state["pi"]), tuple(state["y"])
    except (ValueError, KeyError, TypeError) as e:
        raise ProtocolAbort("Shared state does not decode") from e


def ordered_schedule(n: int, dummy_rounds: int = 0) -> PhaseSchedule:
    """Phase 0 shares the inputs in two rounds; output phase i then lasts 2G + 2 rounds."""
    length = 2 * dummy_rounds + 2
    return PhaseSchedule(starts=(0, *(2 + i * length for i in range(n + 1))))


class MpcBackend(ABC):
    """General secure computation as the ordered protocol uses it."""

    def __init__(self) -> None:
        self.leakage: list[LeakageRecord] = []

    @abstractmethod
    def share_phase(
        self, spec: OrderedSpec, inputs: Mapping[int, int], rng: np.random.Generator
    ) -> dict[int, ByteShare]:
        """Evaluate f and p and hand every party its share of (pi, y)."""

    @abstractmethod
    def output_phase(
        self,
        spec: OrderedSpec,
        phase: int,
        contributions: Mapping[int, tuple[ByteShare, int]],
    ) -> MaskedPhaseOutput:
        """Recombine the shares and release phase's masked vector; raise ProtocolAbort to stop."""


class IdealBackend(MpcBackend):
    def __init__(self, corrupt: frozenset[int] = frozenset()):
        super().__init__()
        self.corrupt = corrupt

    def _leak(self, phase: int, party: int, item: str, subject: int, value: Any) -> None:
        if party in self.corrupt:
            self.leakage.append(
                LeakageRecord(phase=phase, party=party, item=item, subject=subject, value=value)
            )

    def share_phase(self, spec, inputs, rng):
        missing = sorted(set(range(spec.n)) - set(inputs))
        if missing:
            raise ProtocolAbort(f"No input from parties {missing}")
        values = tuple(inputs[j] for j in range(spec.n))
        pi, y = spec.evaluate(values)
        shares = share_bytes(encode_state(pi, y), spec.threshold, spec.n, rng)
        for j in range(spec.n):
            self._leak(0, j, "input", j, values[j])
            self._leak(0, j, "share", -1, None)
        return {j: shares[j] for j in range(spec.n)}

    def output_phase(self, spec, phase, contributions):
        present = sorted(contributions)
        if len(present) < spec.threshold:
            raise ProtocolAbort(f"Phase {phase} has {len(present)} shares, needs {spec.threshold}")
        data = reconstruct_bytes([contributions[j][0] for j in present], spec.threshold)
        if data is None:
            raise ProtocolAbort(f"Phase {phase} could not recombine the shared state")
        pi, y = decode_state(data)
        missing = [j for j in range(spec.n) if j not in contributions]
        if missing:
            if spec.mode is ThresholdMode.DISHONEST_MAJORITY:
                raise ProtocolAbort(f"Phase {phase} is missing contributions from {missing}")
            # parties already served may drop out; anyone still waiting may not
            waiting = [j for j in missing if pi.index(j) + 1 >= phase]
            if waiting:
                raise ProtocolAbort(f"Phase {phase} is missing parties still waiting: {waiting}")
        masks = [contributions[j][1] if j in contributions else None for j in range(spec.n)]
        served = pi[phase - 1]
        self._leak(phase, served, "position", served, phase)
        self._leak(phase, served, "output", served, y[served])
        return masked_phase_vector(pi, y, phase, masks, spec.output_length)


class OrderedParty(PartyMachine):
    def __init__(
        self,
        party: int,
        spec: OrderedSpec,
        value: int,
        dummy_rounds: int,
        rng: np.random.Generator,
    ):
        super().__init__(party)
        self.spec = spec
        self.value = value
        self.dummy_rounds = dummy_rounds
        self.schedule = ordered_schedule(spec.n, dummy_rounds)
        self.peers = frozenset(range(spec.n)) - {party}
        self.masks = {
            phase: random_bits(rng, spec.output_length + 1) for phase in range(1, spec.n + 1)
        }
        self.share: ByteShare | None = None
        self.output: int | None = None
        self.responders: dict[tuple[int, int], set[int]] = {}
        self.answered: set[tuple[int, int, int]] = set()

    def _missing(self, senders: set[int], kind: str, result: StepResult) -> bool:
        missing = sorted(self.peers - senders)
        if not missing:
            return False
        if self.spec.mode is ThresholdMode.HONEST_MAJORITY:
            logger.debug("Party %d saw no %s from %s", self.party, kind, missing)
            return False
        result.abort = f"no {kind} from {missing}"
        result.halted = True
        return True

    def _responded(self, phase: int, offset: int) -> set[int]:
        return self.responders.get((phase, offset), set())

    def _collect(self, inbox: Sequence[Message]) -> None:
        for message in inbox:
            payload = message.payload
            if payload.get("type") == "response":
                key = (payload["phase"], payload["offset"])
                self.responders.setdefault(key, set()).add(message.sender)

    def _answer(self, messages: Sequence[Message], result: StepResult) -> int:
        """
        Respond once to every challenge addressed to this party. A rushing
        adversary hands over the same-round challenges too, so a corrupt
        party answers them a round ahead of the honest ones.
        """
        answered = 0
        for message in messages:
            payload = message.payload
            if message.receiver != self.party or payload.get("type") != "challenge":
                continue
            key = (message.sender, payload["phase"], payload["offset"])
            if key in self.answered:
                continue
            self.answered.add(key)
            result.send(
                self.party,
                message.sender,
                {"type": "response", "phase": payload["phase"], "offset": payload["offset"]},
            )
            answered += 1
        return answered

    def _from_node(self, ctx: StepContext, result: StepResult) -> bool:
        for message in ctx.inbox:
            if message.sender != NODE:
                continue
            payload = message.payload
            if payload["type"] == "abort":
                result.halted = True
                return True
            if payload["type"] == "share":
                self.share = ByteShare.model_validate(payload["share"])
            elif payload["type"] == "phase_output":
                value = recover(
                    payload["z"], self.masks[payload["phase"]], self.spec.output_length
                )
                if value is not None:
                    self.output = value
                    result.deliver(format(value, "x"))
        return False

    def step(self, ctx: StepContext) -> StepResult:
        result = StepResult()
        if self._from_node(ctx, result):
            return result
        self._collect(ctx.inbox)
        if ctx.round == 0:
            result.send(self.party, NODE, {"type": "input", "value": self.value})
            return result
        phase, offset = self.schedule.locate(ctx.round)
        if phase > self.spec.n:
            result.halted = True
            return result
        if phase == 0:
            return result

        dummy_span = 2 * self.dummy_rounds
        if offset < dummy_span and offset % 2 == 0:
            if offset > 0 and self._missing(self._responded(phase, offset - 2), "response", result):
                return result
            challenge = {"type": "challenge", "phase": phase, "offset": offset}
            for peer in sorted(self.peers):
                result.send(self.party, peer, challenge)
            result.clock_evaluations = self._answer(ctx.rushed, result)
        elif offset < dummy_span:
            challengers = {m.sender for m in ctx.inbox if m.payload.get("type") == "challenge"}
            result.clock_evaluations = self._answer(ctx.inbox, result)
            self._missing(challengers, "challenge", result)
        elif offset == dummy_span:
            if dummy_span and self._missing(
                self._responded(phase, dummy_span - 2), "response", result
            ):
                return result
            if self.share is None:
                result.abort = "no share of the joint state"
                result.halted = True
                return result
            result.send(
                self.party,
                NODE,
                {
                    "type": "contribution",
                    "phase": phase,
                    "share": self.share.model_dump(),
                    "mask": self.masks[phase],
                },
            )
        return result


class OrderedNode(PartyMachine):
    """Trusted node running the backend; logs checkpoint C_i when phase i ends."""

    def __init__(
        self,
        spec: OrderedSpec,
        backend: MpcBackend,
        dummy_rounds: int,
        rng: np.random.Generator,
    ):
        super().__init__(NODE)
        self.spec = spec
        self.backend = backend
        self.dummy_rounds = dummy_rounds
        self.schedule = ordered_schedule(spec.n, dummy_rounds)
        self.rng = rng

    def _abort(self, result: StepResult, reason: str, tick: int, phase: int) -> StepResult:
        logger.info(
            "Ordered protocol aborted: %s",
            reason,
            extra={"protocol": OrderedProtocol.name, "tick": tick, "phase": phase},
        )
        for party in range(self.spec.n):
            result.send(NODE, party, {"type": "abort"})
        result.abort = reason
        result.halted = True
        return result

    def step(self, ctx: StepContext) -> StepResult:
        result = StepResult()
        phase, offset = self.schedule.locate(ctx.round)
        try:
            if ctx.round == 1:
                inputs = {
                    m.sender: m.payload["value"]
                    for m in ctx.inbox
                    if m.payload.get("type") == "input"
                }
                shares = self.backend.share_phase(self.spec, inputs, self.rng)
                for party, share in shares.items():
                    result.send(NODE, party, {"type": "share", "share": share.model_dump()})
            elif 1 <= phase <= self.spec.n and offset == 2 * self.dummy_rounds + 1:
                contributions = {
                    m.sender: (ByteShare.model_validate(m.payload["share"]), m.payload["mask"])
                    for m in ctx.inbox
                    if m.payload.get("type") == "contribution" and m.payload["phase"] == phase
                }
                masked = self.backend.output_phase(self.spec, phase, contributions)
                for party, z in enumerate(masked.z):
                    if z is not None:
                        result.send(
                            NODE, party, {"type": "phase_output", "phase": phase, "z": z}
                        )
                result.checkpoint = True
                result.halted = phase == self.spec.n
        except ProtocolAbort as e:
            return self._abort(result, e.detail, ctx.round, phase)
        return result


class OrderedProtocol(Protocol):
    name = "ordered"

    def __init__(
        self,
        spec: OrderedSpec,
        inputs: Sequence[int],
        backend: MpcBackend,
        dummy_rounds: int = 0,
    ):
        self.spec = spec
        self.inputs = tuple(inputs)
        self.backend = backend
        self.dummy_rounds = dummy_rounds

    def machines(self, config: SimConfig) -> dict[int, PartyMachine]:
        machines: dict[int, PartyMachine] = {
            j: OrderedParty(
                j,
                self.spec,
                self.inputs[j],
                self.dummy_rounds,
                substream(config.seed, f"party/{j}/masks"),
            )
            for j in range(self.spec.n)
        }
        machines[NODE] = OrderedNode(
            self.spec, self.backend, self.dummy_rounds, substream(config.seed, "node/sharing")
        )
        return machines

    def schedule(self, config: SimConfig) -> PhaseSchedule:
        return ordered_schedule(self.spec.n, self.dummy_rounds)


def run_ordered(
    spec: OrderedSpec,
    inputs: Sequence[int],
    sim: SimConfig,
    backend: MpcBackend | None = None,
    dummy_rounds: int = 0,
) -> OrderedRun:
    if sim.n != spec.n:
        raise InvalidInputError(f"Simulation has {sim.n} parties, protocol expects {spec.n}")
    if dummy_rounds < 0:
        raise InvalidInputError("Dummy rounds must be non-negative")
    pi, y = spec.evaluate(tuple(inputs))
    backend = backend if backend is not None else IdealBackend(sim.adversary.corrupt)
    transcript = run(sim, OrderedProtocol(spec, inputs, backend, dummy_rounds))
    received = {
        party: int(event.value, 16)
        for party, event in transcript.received().items()
        if event.value is not None
    }
    logger.info("Ordered run over %d parties delivered to %s", spec.n, sorted(received))
    return OrderedRun(
        transcript=transcript,
        pi=pi,
        y=y,
        received=received,
        leakage=tuple(backend.leakage),
        dummy_rounds=dummy_rounds,
    )


def verify_ordered_delivery(transcript: Transcript, pi: Sequence[int]) -> bool:
    """Everyone received, strictly in the order pi."""
    received = transcript.received()
    if set(received) != set(pi):
        return False
    ticks = [received[party].tick for party in pi]
    return all(a < b for a, b in zip(ticks, ticks[1:]))


def verify_prefix_fairness(transcript: Transcript, pi: Sequence[int]) -> bool:
    """The parties holding an output are exactly the first j of pi, for some j."""
    received = set(transcript.received())
    return received == set(pi[: len(received)])


def phase_recoveries(transcript: Transcript, schedule: PhaseSchedule) -> dict[int, int]:
    """Non-empty recoveries per output phase; phase i lands in the first round of phase i + 1."""
    counts: dict[int, int] = {}
    for event in transcript.outputs():
        phase = schedule.locate(event.tick)[0] - 1
        counts[phase] = counts.get(phase, 0) + 1
    return counts


def audit_leakage(
    records: Sequence[LeakageRecord], corrupt: frozenset[int], threshold: int, n: int
) -> bool:
    """
    True when the adversary was handed nothing but its own inputs, outputs
    and positions, plus shares of the joint state too few to recombine.
    """
    shares_are_safe = len(corrupt) < threshold or len(corrupt) == n
    for record in records:
        if record.party not in corrupt:
            return False
        if record.item == "share":
            if record.subject != -1 or not shares_are_safe:
                return False
        elif record.subject != record.party:
            return False
    return True


def ordered_verdict(result: OrderedRun) -> dict[str, Any]:
    return {
        "ordered_delivery": verify_ordered_delivery(result.transcript, result.pi),
        "prefix_fair": verify_prefix_fairness(result.transcript, result.pi),
        "received": sorted(result.received),
    }

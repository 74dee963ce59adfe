import json
from abc import ABC, abstractmethod
from bisect import bisect_right
from fractions import Fraction
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator

NODE = -1
"""Party id of the trusted node hosting the ideal backend."""

Payload = dict[str, Any]


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, separators=(",", ":"), sort_keys=True)


class AdversaryConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    corrupt: frozenset[int] = frozenset()
    abort_at: tuple[int, int] | None = Field(
        default=None,
        description="(phase, round within phase) from which corrupt parties send nothing.",
    )
    rushing: bool = False


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: Annotated[int, Field(ge=1)]
    seed: int = 0
    adversary: AdversaryConfig = AdversaryConfig()
    speeds: tuple[Fraction, ...] | None = Field(
        default=None, description="Computation steps per tick, per party; 1 when omitted."
    )

    @field_validator("speeds", mode="before")
    @classmethod
    def _as_fractions(cls, value: Any) -> Any:
        if value is None:
            return None
        return tuple(
            speed if isinstance(speed, Fraction) else Fraction(str(speed)) for speed in value
        )

    @model_validator(mode="after")
    def _consistent(self):
        if not self.adversary.corrupt <= set(range(self.n)):
            raise ValueError(f"Corrupt set {sorted(self.adversary.corrupt)} is not within 0..{self.n - 1}")
        if self.speeds is not None:
            if len(self.speeds) != self.n:
                raise ValueError(f"Expected {self.n} speeds, got {len(self.speeds)}")
            if any(speed <= 0 for speed in self.speeds):
                raise ValueError("Speeds must be positive")
        return self

    def speed_of(self, party: int) -> Fraction:
        if party == NODE or self.speeds is None:
            return Fraction(1)
        return self.speeds[party]

    def is_corrupt(self, party: int) -> bool:
        return party in self.adversary.corrupt


class Message(BaseModel):
    model_config = ConfigDict(frozen=True)

    sender: int
    receiver: int
    payload: Payload


class StepContext(BaseModel):
    model_config = ConfigDict(frozen=True)

    round: int
    inbox: tuple[Message, ...] = ()
    rushed: tuple[Message, ...] = Field(
        default=(), description="Same-round honest messages visible to a rushing adversary."
    )
    compute_budget: int = Field(default=1, description="Computation steps available this tick.")


class StepResult(BaseModel):
    sends: list[Message] = Field(default_factory=list)
    output: str | None = Field(default=None, description="Hex of the value received as output.")
    has_output: bool = False
    checkpoint: bool = False
    clock_evaluations: int = 0
    abort: str | None = None
    halted: bool = False

    def send(self, sender: int, receiver: int, payload: Payload) -> None:
        self.sends.append(Message(sender=sender, receiver=receiver, payload=payload))

    def deliver(self, value: str | None) -> None:
        self.output = value
        self.has_output = True


class PartyMachine(ABC):
    """One party's state machine; the simulator calls step once per round until it halts."""

    def __init__(self, party: int):
        self.party = party

    @abstractmethod
    def step(self, ctx: StepContext) -> StepResult: ...


class PhaseSchedule(BaseModel):
    """Rounds at which each phase starts; phase 0 starts at round 0."""

    model_config = ConfigDict(frozen=True)

    starts: tuple[int, ...] = (0,)

    @model_validator(mode="after")
    def _increasing(self):
        if not self.starts or self.starts[0] != 0:
            raise ValueError("Phase 0 must start at round 0")
        if any(b <= a for a, b in zip(self.starts, self.starts[1:])):
            raise ValueError("Phase starts must be strictly increasing")
        return self

    def locate(self, round_: int) -> tuple[int, int]:
        phase = bisect_right(self.starts, round_) - 1
        return phase, round_ - self.starts[phase]


class Protocol(ABC):
    """Builds the party machines for one run."""

    name: str = "protocol"

    @abstractmethod
    def machines(self, config: SimConfig) -> dict[int, PartyMachine]: ...

    def schedule(self, config: SimConfig) -> PhaseSchedule:
        return PhaseSchedule()


class MessageEvent(BaseModel):
    kind: Literal["msg"] = "msg"
    tick: int
    sender: int
    receiver: int
    digest: str


class CheckpointEvent(BaseModel):
    kind: Literal["ckpt"] = "ckpt"
    tick: int
    index: int
    party: int


class OutputEvent(BaseModel):
    kind: Literal["out"] = "out"
    tick: int
    party: int
    value: str | None


class ClockEvent(BaseModel):
    kind: Literal["clk"] = "clk"
    tick: int
    party: int
    count: int


class AbortEvent(BaseModel):
    kind: Literal["abort"] = "abort"
    tick: int
    party: int
    reason: str


class PhaseEvent(BaseModel):
    kind: Literal["phase"] = "phase"
    tick: int
    phase: int


Event = Annotated[
    MessageEvent | CheckpointEvent | OutputEvent | ClockEvent | AbortEvent | PhaseEvent,
    Field(discriminator="kind"),
]
_event_adapter: TypeAdapter[Event] = TypeAdapter(Event)


class Transcript(BaseModel):
    events: list[Event] = Field(default_factory=list)

    def append(self, event: Event) -> None:
        self.events.append(event)

    def of_kind(self, kind: type[BaseModel]) -> list[Any]:
        return [event for event in self.events if isinstance(event, kind)]

    def outputs(self) -> list[OutputEvent]:
        return self.of_kind(OutputEvent)

    def checkpoints(self) -> list[CheckpointEvent]:
        return self.of_kind(CheckpointEvent)

    def received(self) -> dict[int, OutputEvent]:
        """First output event per party."""
        first: dict[int, OutputEvent] = {}
        for event in self.outputs():
            first.setdefault(event.party, event)
        return first

    def to_jsonl(self) -> str:
        return "".join(event.model_dump_json() + "\n" for event in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        return cls(
            events=[
                _event_adapter.validate_json(line) for line in text.splitlines() if line.strip()
            ]
        )

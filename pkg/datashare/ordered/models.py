from enum import Enum
from functools import reduce
from operator import xor
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from datashare.errors import InvalidInputError
from datashare.simnet.models import Transcript


class ThresholdMode(str, Enum):
    HONEST_MAJORITY = "honest-majority"
    DISHONEST_MAJORITY = "dishonest-majority"


def table_key(inputs: tuple[int, ...]) -> str:
    return ",".join(str(value) for value in inputs)


class FunctionSpec(BaseModel):
    """
    The n-ary function computed jointly. Built-ins:
    identity (each party gets its own input back), xor_sum (everyone gets the
    XOR of all inputs), constant (fixed outputs), table (explicit map keyed
    by comma-joined inputs).
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["identity", "xor_sum", "constant", "table"] = "identity"
    values: tuple[int, ...] | None = None
    table: dict[str, tuple[int, ...]] | None = None

    @model_validator(mode="after")
    def _arguments(self):
        if self.kind == "constant" and self.values is None:
            raise ValueError("constant functions need values")
        if self.kind == "table" and not self.table:
            raise ValueError("table functions need a table")
        return self

    def evaluate(self, inputs: tuple[int, ...]) -> tuple[int, ...]:
        n = len(inputs)
        if self.kind == "identity":
            return inputs
        if self.kind == "xor_sum":
            return (reduce(xor, inputs, 0),) * n
        if self.kind == "constant":
            outputs = self.values
        else:
            outputs = self.table.get(table_key(inputs))
            if outputs is None:
                raise InvalidInputError(f"Function table has no row for inputs {inputs}")
        if len(outputs) != n:
            raise InvalidInputError(f"Function returns {len(outputs)} outputs for {n} parties")
        return tuple(outputs)


class OrderingSpec(BaseModel):
    """
    The n-ary ordering function; evaluates to pi with pi[t - 1] the party
    served at position t. sort_order_p serves larger inputs first, ties by id.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["identity", "sort_order_p", "constant", "table"] = "identity"
    pi: tuple[int, ...] | None = None
    table: dict[str, tuple[int, ...]] | None = None

    @model_validator(mode="after")
    def _arguments(self):
        if self.kind == "constant" and self.pi is None:
            raise ValueError("constant orderings need pi")
        if self.kind == "table" and not self.table:
            raise ValueError("table orderings need a table")
        return self

    def evaluate(self, inputs: tuple[int, ...]) -> tuple[int, ...]:
        n = len(inputs)
        if self.kind == "identity":
            pi = tuple(range(n))
        elif self.kind == "sort_order_p":
            pi = tuple(sorted(range(n), key=lambda j: (-inputs[j], j)))
        elif self.kind == "constant":
            pi = self.pi
        else:
            pi = self.table.get(table_key(inputs))
            if pi is None:
                raise InvalidInputError(f"Ordering table has no row for inputs {inputs}")
        if sorted(pi) != list(range(n)):
            raise InvalidInputError(f"Ordering {pi} is not a permutation of {n} parties")
        return tuple(pi)


class OrderedSpec(BaseModel):
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "n": 3,
                "output_length": 8,
                "f": {"kind": "identity"},
                "p": {"kind": "sort_order_p"},
                "mode": "honest-majority",
            }
        },
    )

    n: Annotated[int, Field(ge=1)]
    output_length: Annotated[int, Field(ge=1, description="Bits per output, before the tag bit.")]
    f: FunctionSpec = FunctionSpec()
    p: OrderingSpec = OrderingSpec()
    mode: ThresholdMode = ThresholdMode.HONEST_MAJORITY

    @property
    def threshold(self) -> int:
        if self.mode is ThresholdMode.HONEST_MAJORITY:
            return (self.n + 1) // 2
        return self.n

    @property
    def bottom(self) -> int:
        """Tagged encoding of the empty output: only the tag bit set."""
        return 1 << self.output_length

    def evaluate(self, inputs: tuple[int, ...]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if len(inputs) != self.n:
            raise InvalidInputError(f"Expected {self.n} inputs, got {len(inputs)}")
        if any(value < 0 for value in inputs):
            raise InvalidInputError("Inputs must be non-negative integers")
        y = self.f.evaluate(inputs)
        if any(not 0 <= value < self.bottom for value in y):
            raise InvalidInputError(f"Outputs {y} do not fit in {self.output_length} bits")
        return self.p.evaluate(inputs), y


class MaskedPhaseOutput(BaseModel):
    model_config = ConfigDict(frozen=True)

    phase: Annotated[int, Field(ge=1)]
    z: tuple[int | None, ...] = Field(
        description="Masked tagged value per party; None for a slot left out of the phase."
    )


class LeakageRecord(BaseModel):
    """Something the ideal backend handed to a party the adversary controls."""

    model_config = ConfigDict(frozen=True)

    phase: int
    party: int
    item: Literal["input", "share", "output", "position"]
    subject: int = Field(description="Whose data the item is; -1 for the joint sharing.")
    value: Any = None


class OrderedRun(BaseModel):
    transcript: Transcript
    pi: tuple[int, ...]
    y: tuple[int, ...]
    received: dict[int, int] = Field(description="Party to the output it recovered.")
    leakage: tuple[LeakageRecord, ...] = ()
    dummy_rounds: int = 0


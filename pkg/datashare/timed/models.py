from enum import Enum
from typing import Annotated, Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from datashare.errors import InvalidInputError
from datashare.utils.base64 import Base64


class PuzzleScheme(str, Enum):
    SQUARE = "square"
    HASH = "hash"


class HidingVariant(str, Enum):
    """standard: the adversary sees (x, a) and may query up to m - 1 masks.
    strong: the adversary sees (x, every mask) and has no oracle."""

    STANDARD = "standard"
    STRONG = "strong"


def _int_field(payload: dict[str, Any], name: str) -> int:
    try:
        return Base64.decode_int(payload[name])
    except KeyError as e:
        raise InvalidInputError(f"Puzzle file has no field '{name}'") from e


class TimeLockPuzzle(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: PuzzleScheme
    x: Annotated[int, Field(ge=0, description="Chain seed.")]
    t: Annotated[int, Field(ge=1, description="Sequential steps needed to unlock.")]
    b: Annotated[int, Field(ge=0, description="Data XOR the chain value at step t.")]
    a: Annotated[int, Field(ge=0, description="Public modulus N, or the hash key.")]
    kappa: int | None = None
    ciphertext: bytes | None = Field(
        default=None, description="AES ciphertext when a key, not the data, is locked."
    )

    @model_validator(mode="after")
    def _seed(self):
        if self.scheme is PuzzleScheme.SQUARE and not 1 < self.x < self.a:
            raise ValueError(f"Seed must lie strictly between 1 and N = {self.a}")
        return self

    def to_json_dict(self) -> dict[str, Any]:
        payload = {
            "scheme": self.scheme.value,
            "kappa": self.kappa,
            "x": Base64.encode_int(self.x),
            "t": self.t,
            "b": Base64.encode_int(self.b),
            "a": Base64.encode_int(self.a),
        }
        if self.ciphertext is not None:
            payload["c"] = Base64.encode(self.ciphertext)
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict[str, Any]) -> "TimeLockPuzzle":
        return cls(
            scheme=payload.get("scheme", PuzzleScheme.SQUARE),
            kappa=payload.get("kappa"),
            x=_int_field(payload, "x"),
            t=payload.get("t", 0),
            b=_int_field(payload, "b"),
            a=_int_field(payload, "a"),
            ciphertext=Base64.decode_bytes(payload["c"]) if "c" in payload else None,
        )


class TimeLinePuzzle(BaseModel):
    """
    One sequential chain locking m items: item i is masked with the chain
    value at step t[i]. Delays need not be sorted; `note` says so when they
    are not.
    """

    model_config = ConfigDict(frozen=True)

    scheme: PuzzleScheme
    x: Annotated[int, Field(ge=0)]
    t: tuple[Annotated[int, Field(ge=1)], ...]
    b: tuple[Annotated[int, Field(ge=0)], ...]
    a: Annotated[int, Field(ge=0)]
    kappa: int | None = None
    note: str | None = None

    @model_validator(mode="after")
    def _shape(self):
        if not self.t:
            raise ValueError("A time-line puzzle locks at least one item")
        if len(self.t) != len(self.b):
            raise ValueError(f"{len(self.t)} delays for {len(self.b)} masks")
        return self

    @property
    def m(self) -> int:
        return len(self.t)

    def item(self, index: int) -> TimeLockPuzzle:
        """The single-item view (x, t_i, b_i, a)."""
        return TimeLockPuzzle(
            scheme=self.scheme,
            x=self.x,
            t=self.t[index],
            b=self.b[index],
            a=self.a,
            kappa=self.kappa,
        )

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "scheme": self.scheme.value,
            "kappa": self.kappa,
            "x": Base64.encode_int(self.x),
            "t_vec": list(self.t),
            "b_vec": [Base64.encode_int(b) for b in self.b],
            "a": Base64.encode_int(self.a),
            "note": self.note,
        }

    @classmethod
    def from_json_dict(cls, payload: dict[str, Any]) -> "TimeLinePuzzle":
        return cls(
            scheme=payload.get("scheme", PuzzleScheme.SQUARE),
            kappa=payload.get("kappa"),
            x=_int_field(payload, "x"),
            t=tuple(payload.get("t_vec", ())),
            b=tuple(Base64.decode_int(b) for b in payload.get("b_vec", ())),
            a=_int_field(payload, "a"),
            note=payload.get("note"),
        )


class HidingView(BaseModel):
    """What the hiding challenger hands the adversary."""

    model_config = ConfigDict(frozen=True)

    scheme: PuzzleScheme
    x: int
    a: int
    t: tuple[int, ...]
    b: tuple[int, ...] | None = None
    d0: tuple[int, ...]
    d1: tuple[int, ...]


class HidingReport(BaseModel):
    variant: HidingVariant
    trials: int
    wins: int
    steps: int = Field(description="Chain steps spent by the adversary across all trials.")

    @property
    def rate(self) -> float:
        return self.wins / self.trials if self.trials else 0.0

from enum import Enum
from itertools import permutations
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from datashare.config import config
from datashare.errors import SizeLimitError, UnsupportedVariantError

Weight = Annotated[float, Field(ge=0, allow_inf_nan=False)]
Score = Annotated[float, Field(allow_inf_nan=False)]


class LearningCharge(str, Enum):
    """
    How much learning the feasibility inequality charges for.

    FULL sums the learning bound of every position, as in the closed-form
    condition. TIGHT skips the last position, which is exactly what the
    per-step worst-case conditions add up to.
    """

    FULL = "full"
    TIGHT = "tight"


class NDimBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["ndim"] = "ndim"
    mu: tuple[Weight, ...] = Field(
        description="How much any later publisher can learn from player j's publication."
    )

    @property
    def n(self) -> int:
        return len(self.mu)


class NSquaredBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["nsq"] = "nsq"
    mu: tuple[tuple[Weight, ...], ...] = Field(
        description="mu[i][j]: how much player i can learn from player j's publication. Diagonal ignored."
    )

    @property
    def n(self) -> int:
        return len(self.mu)

    @model_validator(mode="after")
    def _square(self):
        if any(len(row) != len(self.mu) for row in self.mu):
            raise ValueError("nsq learning bounds must be a square matrix")
        return self


class GeneralBounds(BaseModel):
    """Explicit learning bound per (ordering, player); only tiny n is representable."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["general"] = "general"
    size: Annotated[int, Field(ge=1)]
    entries: dict[tuple[tuple[int, ...], int], Weight]

    @property
    def n(self) -> int:
        return self.size

    @model_validator(mode="after")
    def _keys_in_range(self):
        if self.size > config.mechanism.general_bounds_max_n:
            raise SizeLimitError(
                f"General learning bounds are limited to n <= {config.mechanism.general_bounds_max_n}"
            )
        players = set(range(self.size))
        for pi, player in self.entries:
            if set(pi) != players or len(pi) != self.size or player not in players:
                raise ValueError(f"Invalid general bounds key {(pi, player)}")
        return self

    @classmethod
    def from_function(cls, size: int, fn) -> "GeneralBounds":
        """Tabulate fn(pi, player) over every ordering."""
        entries = {
            (pi, player): float(fn(pi, player))
            for pi in permutations(range(size))
            for player in range(size)
        }
        return cls(size=size, entries=entries)


LearningBounds = Annotated[
    NDimBounds | NSquaredBounds | GeneralBounds, Field(discriminator="kind")
]


class Instance(BaseModel):
    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "n": 2,
                "alpha": [0.1, 0.2],
                "beta": 0.9,
                "bounds": {"ndim": [0.0, 0.05]},
                "s0": 0.0,
                "smax": 1.0,
                "epsilon": 0.0,
            }
        },
    )

    n: Annotated[int, Field(ge=1)]
    alpha: tuple[Weight, ...] = Field(
        description="Outside option of each player: the score gain reachable alone."
    )
    beta: Annotated[float, Field(gt=0, le=1, description="Discount factor.")]
    bounds: LearningBounds
    s0: Score = Field(description="Prior score, before anyone publishes.")
    smax: Score = Field(description="Best achievable score using every player's data.")
    epsilon: Weight = Field(
        default=0.0,
        description="Minimum improvement between consecutive publications.",
    )

    @field_validator("bounds", mode="before")
    @classmethod
    def _compact_bounds(cls, value: Any) -> Any:
        # {"ndim": [...]} and {"nsq": [[...]]} are the file format
        if isinstance(value, dict) and "kind" not in value and len(value) == 1:
            ((kind, mu),) = value.items()
            if kind in ("ndim", "nsq"):
                return {"kind": kind, "mu": mu}
        return value

    @model_validator(mode="after")
    def _consistent(self):
        if len(self.alpha) != self.n:
            raise ValueError(f"alpha has {len(self.alpha)} entries, expected {self.n}")
        if self.bounds.n != self.n:
            raise ValueError(
                f"learning bounds have dimension {self.bounds.n}, expected {self.n}"
            )
        if self.s0 > self.smax:
            raise ValueError("s0 must not exceed smax")
        return self

    @property
    def budget(self) -> float:
        """Score range left for outside options and learning once the strictness slack is paid."""
        return self.smax - self.s0 - self.n * self.epsilon

    def to_json_dict(self) -> dict[str, Any]:
        if isinstance(self.bounds, GeneralBounds):
            raise UnsupportedVariantError(
                "General learning bounds have no file representation"
            )
        mu: Any = (
            list(self.bounds.mu)
            if isinstance(self.bounds, NDimBounds)
            else [list(row) for row in self.bounds.mu]
        )
        return {
            "n": self.n,
            "alpha": list(self.alpha),
            "beta": self.beta,
            "bounds": {self.bounds.kind: mu},
            "s0": self.s0,
            "smax": self.smax,
            "epsilon": self.epsilon,
        }


class ProposedOutcome(BaseModel):
    """
    An ordering and one proposed-output score per player.

    pi[t - 1] is the player publishing at time t; delta is indexed by player.
    """

    model_config = ConfigDict(frozen=True)

    pi: tuple[int, ...]
    delta: tuple[Score, ...]

    @model_validator(mode="after")
    def _permutation(self):
        if sorted(self.pi) != list(range(len(self.pi))):
            raise ValueError(f"pi {self.pi} is not a permutation of 0..{len(self.pi) - 1}")
        if len(self.delta) != len(self.pi):
            raise ValueError("delta must hold one score per player")
        return self

    @property
    def n(self) -> int:
        return len(self.pi)

    def position_of(self, player: int) -> int:
        """1-based publication time of a player."""
        return self.pi.index(player) + 1

    def scores_in_order(self) -> tuple[float, ...]:
        return tuple(self.delta[player] for player in self.pi)

    def to_json_dict(self) -> dict[str, Any]:
        return {"pi": list(self.pi), "delta": list(self.delta)}


class ScoreInterval(BaseModel):
    model_config = ConfigDict(frozen=True)

    low: float
    high: float

    def contains(self, value: float, tolerance: float = 0.0) -> bool:
        return self.low - tolerance <= value <= self.high + tolerance


class EquilibriumCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    holds: bool
    violated_at: int | None = Field(
        default=None, description="First 1-based time index whose condition fails."
    )
    slacks: tuple[float, ...] = Field(
        description="beta^t * (gap - learning) - alpha per time index."
    )


class SuperadditivityCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    holds: bool
    witness: tuple[frozenset[int], frozenset[int]] | None = None

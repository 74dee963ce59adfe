from fractions import Fraction
from typing import Annotated, Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from datashare.ordered.models import LeakageRecord
from datashare.simnet.models import Transcript


class DelaySchedule(BaseModel):
    """Geometric puzzle delays: t_1 = 1 and each next delay is (B * G + 1) times the last."""

    model_config = ConfigDict(frozen=True)

    n: Annotated[int, Field(ge=1)]
    B: Annotated[int, Field(ge=1, description="Bound on the solver speed ratio.")]
    G: Annotated[int, Field(ge=1, description="Clock evaluations required between outputs.")]
    t: tuple[int, ...]

    @model_validator(mode="after")
    def _geometric(self):
        ratio = self.B * self.G + 1
        if len(self.t) != self.n or not self.t or self.t[0] != 1:
            raise ValueError(f"Expected {self.n} delays starting at 1")
        if any(b != ratio * a for a, b in zip(self.t, self.t[1:])):
            raise ValueError(f"Consecutive delays must differ by a factor of {ratio}")
        return self

    def delay_at(self, position: int) -> int:
        """Delay of the puzzle for the party served at 1-based position."""
        return self.t[position - 1]


class SolverProfile(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    speeds: tuple[Fraction, ...] = Field(description="Chain steps per tick, per party.")

    @field_validator("speeds", mode="before")
    @classmethod
    def _as_fractions(cls, value: Any) -> Any:
        return tuple(
            speed if isinstance(speed, Fraction) else Fraction(str(speed)) for speed in value
        )

    @model_validator(mode="after")
    def _positive(self):
        if not self.speeds:
            raise ValueError("A profile needs at least one speed")
        if any(speed <= 0 for speed in self.speeds):
            raise ValueError("Speeds must be positive")
        return self

    @property
    def ratio(self) -> Fraction:
        return max(self.speeds) / min(self.speeds)

    def compliant(self, B: int) -> bool:
        return self.ratio <= B


class DelayVerdict(BaseModel):
    order_ok: bool
    gaps_ok: bool
    unlock_ticks: dict[int, int] = Field(description="Party to the tick it learned its output.")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "order_ok": self.order_ok,
            "gaps_ok": self.gaps_ok,
            "unlock_ticks": {str(party): tick for party, tick in sorted(self.unlock_ticks.items())},
        }


class DelayRun(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    transcript: Transcript
    pi: tuple[int, ...]
    y: tuple[int, ...]
    received: dict[int, int]
    schedule: DelaySchedule
    profile: SolverProfile
    solve_start: int | None = Field(
        default=None, description="Tick at which every party held its puzzle and began solving."
    )
    line: bool = False
    leakage: tuple[LeakageRecord, ...] = ()
    verdict: DelayVerdict

from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from datashare.model.models import ProposedOutcome, Weight


class AssignmentProblem(BaseModel):
    """Square cost matrix; rows are players, columns are publication times."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: np.ndarray

    @field_validator("weights", mode="before")
    @classmethod
    def _as_matrix(cls, value: Any) -> np.ndarray:
        matrix = np.array(value, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.size == 0:
            raise ValueError("Assignment weights must be a non-empty square matrix")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("Assignment weights must be finite")
        matrix.setflags(write=False)
        return matrix

    @property
    def n(self) -> int:
        return self.weights.shape[0]


class AssignmentResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    matching: tuple[int, ...] = Field(
        description="matching[t - 1] is the row assigned to column t."
    )
    total_weight: float


class FasInstance(BaseModel):
    """Directed weighted graph plus the feedback-arc-set threshold gamma."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0], [2, 0, 1.0]]}
        },
    )

    n: Annotated[int, Field(ge=1)]
    edges: tuple[tuple[int, int, Weight], ...]
    gamma: Weight = 0.0

    @model_validator(mode="after")
    def _edges_in_range(self):
        for u, v, _ in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"Edge ({u}, {v}) leaves the vertex range 0..{self.n - 1}")
            if u == v:
                raise ValueError(f"Self-loop on vertex {u}")
        return self

    def back_edge_weight(self, ordering: tuple[int, ...]) -> float:
        """Weight of the edges pointing backwards in the ordering."""
        position = {vertex: index for index, vertex in enumerate(ordering)}
        return float(sum(w for u, v, w in self.edges if position[u] > position[v]))


class NsqDecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    feasible: bool
    witness: tuple[int, ...] | None = None
    cost: float | None = Field(
        default=None, description="Feasibility-inequality cost of the witness."
    )


class MechanismVerdict(BaseModel):
    """What the mechanism commands report."""

    model_config = ConfigDict(frozen=True)

    feasible: bool
    outcome: ProposedOutcome | None = None
    cost: float | None = None

    def to_json_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"feasible": self.feasible}
        if self.outcome is not None:
            data.update(self.outcome.to_json_dict())
        if self.cost is not None:
            data["cost"] = self.cost
        return data

"""
Named end-to-end scenarios: a score model from a shipped fixture, the
mechanism run on its instance, and the resulting schedule released through
the ordered protocol.
"""

import json
import logging
from importlib import resources
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from datashare.errors import InvalidInputError
from datashare.mechanism.service import solve
from datashare.model.models import Instance, LearningCharge, NDimBounds
from datashare.model.scores import (
    RealizedOutput,
    ScoreModel,
    gaussian_mean_model,
    gene_loci_model,
    path_flow_model,
    xor_secret_model,
)
from datashare.model.service import is_collaborative_equilibrium, reward
from datashare.ordered.models import FunctionSpec, OrderedSpec, OrderingSpec
from datashare.ordered.service import ordered_verdict, run_ordered
from datashare.simnet.models import SimConfig, Transcript
from datashare.utils.randomness import substream

logger = logging.getLogger(__name__)

SCENARIOS = ("xor_secret", "path_flow_diamond", "gene_loci", "gaussian_mean")


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: Literal["xor_secret", "path_flow_diamond", "gene_loci", "gaussian_mean"]
    model: Literal["xor_secret", "path_flow", "gene_loci", "gaussian_mean"]
    params: dict[str, Any] = Field(default_factory=dict)
    beta: float = 1.0
    epsilon: float = 0.0
    mu: float | list[float] = 0.0
    expected_feasible: bool | None = None


class ScenarioReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    instance: dict[str, Any]
    verdict: dict[str, Any]
    expected_feasible: bool | None = None
    equilibrium: bool | None = None
    rewards: list[float] | None = None
    protocol: dict[str, Any] | None = None
    received_scores: dict[int, float] | None = None
    transcript: Transcript | None = Field(default=None, exclude=True)

    @property
    def feasible(self) -> bool:
        return bool(self.verdict["feasible"])

    def to_json_dict(self) -> dict[str, Any]:
        data = self.model_dump(exclude_none=True)
        if self.received_scores is not None:
            data["received_scores"] = {
                str(party): score for party, score in sorted(self.received_scores.items())
            }
        return data


def load_scenario(name: str, overrides: dict[str, Any] | None = None) -> Scenario:
    if name not in SCENARIOS:
        raise InvalidInputError(f"Unknown scenario '{name}'; pick one of {', '.join(SCENARIOS)}")
    text = resources.files("datashare.cli").joinpath("fixtures", f"{name}.json").read_text()
    data = json.loads(text)
    for key, value in (overrides or {}).items():
        if key in ("beta", "epsilon", "mu"):
            data[key] = value
        else:
            data["params"][key] = value
    return Scenario.model_validate(data)


def build_model(scenario: Scenario, seed: int) -> ScoreModel:
    params = scenario.params
    try:
        if scenario.model == "xor_secret":
            return xor_secret_model(
                int(params["n"]),
                params.get("bit_length"),
                rng=substream(seed, "scenario/xor_secret"),
            )
        if scenario.model == "path_flow":
            return path_flow_model(
                [tuple(edge) for edge in params["edges"]],
                params["source"],
                params["sink"],
                params["partition"],
            )
        if scenario.model == "gene_loci":
            return gene_loci_model(params["loci"], params["true_set"], params["evidence"])
        return gaussian_mean_model(float(params["sigma"]), params["counts"])
    except KeyError as e:
        raise InvalidInputError(f"Scenario '{scenario.name}' is missing parameter {e}") from e


def _instance(scenario: Scenario, model: ScoreModel) -> Instance:
    mu = scenario.mu if isinstance(scenario.mu, list) else [scenario.mu] * model.n
    return model.instance(
        beta=scenario.beta, bounds=NDimBounds(mu=tuple(mu)), epsilon=scenario.epsilon
    )


def _encode(realized: RealizedOutput) -> int:
    return int.from_bytes(realized.to_bytes(), "big")


def _decode(value: int, model: ScoreModel, target: float) -> float:
    data = value.to_bytes((value.bit_length() + 7) // 8, "big")
    payload = json.loads(data)
    realized = RealizedOutput(model=payload["model"], target=target, payload=payload["payload"])
    return model.score(realized)


def scenario_run(
    name: str,
    params: dict[str, Any] | None = None,
    seed: int = 0,
    charge: LearningCharge = LearningCharge.FULL,
) -> ScenarioReport:
    """
    Solve the scenario's instance and, when an equilibrium exists, deliver
    each player's realized output through the ordered protocol in the
    mechanism's order.
    """
    scenario = load_scenario(name, params)
    model = build_model(scenario, seed)
    instance = _instance(scenario, model)
    verdict = solve(instance, charge)
    report = ScenarioReport(
        name=scenario.name,
        instance=instance.to_json_dict(),
        verdict=verdict.to_json_dict(),
        expected_feasible=scenario.expected_feasible,
    )
    if verdict.outcome is None:
        logger.info("Scenario %s has no collaborative equilibrium", name)
        return report

    outcome = verdict.outcome
    report.equilibrium = is_collaborative_equilibrium(instance, outcome).holds
    report.rewards = [
        reward(t, outcome.pi, outcome.delta, instance) for t in range(1, instance.n + 1)
    ]
    outputs = tuple(_encode(model.realize(outcome.delta[j])) for j in range(instance.n))
    spec = OrderedSpec(
        n=instance.n,
        output_length=max(value.bit_length() for value in outputs),
        f=FunctionSpec(kind="constant", values=outputs),
        p=OrderingSpec(kind="constant", pi=outcome.pi),
    )
    result = run_ordered(spec, (0,) * instance.n, SimConfig(n=instance.n, seed=seed))
    report.protocol = ordered_verdict(result)
    report.received_scores = {
        party: _decode(value, model, outcome.delta[party])
        for party, value in result.received.items()
    }
    report.transcript = result.transcript
    logger.info("Scenario %s delivered in order %s", name, outcome.pi)
    return report

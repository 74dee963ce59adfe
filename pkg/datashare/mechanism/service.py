import logging
from collections.abc import Sequence
from itertools import permutations

import numpy as np

from datashare.config import config
from datashare.errors import SizeLimitError, UnsupportedVariantError
from datashare.mechanism.assignment import min_cost_assignment
from datashare.mechanism.models import (
    AssignmentProblem,
    FasInstance,
    MechanismVerdict,
    NsqDecision,
)
from datashare.model.models import (
    Instance,
    LearningCharge,
    NDimBounds,
    NSquaredBounds,
    ProposedOutcome,
)
from datashare.model.service import (
    equilibrium_cost,
    is_collaborative_equilibrium,
    lambda_of,
)

logger = logging.getLogger(__name__)


def _check_size(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise SizeLimitError(f"{what} is limited to n <= {limit}, got {n}")


def assignment_problem(
    instance: Instance, charge: LearningCharge = LearningCharge.FULL
) -> AssignmentProblem:
    """w(i, t): cost of placing player i at time t in the feasibility inequality."""
    if not isinstance(instance.bounds, NDimBounds):
        raise UnsupportedVariantError(
            "The matching mechanism needs n-dimensional learning bounds; "
            "use decide_nsq or brute_force_equilibrium instead"
        )
    n = instance.n
    times = np.arange(1, n + 1)
    later = n - times if charge is LearningCharge.FULL else np.maximum(n - times - 1, 0)
    alpha = np.asarray(instance.alpha)
    mu = np.asarray(instance.bounds.mu)
    weights = alpha[:, None] / instance.beta ** times[None, :] + mu[:, None] * later[None, :]
    return AssignmentProblem(weights=weights)


def schedule_from_order(instance: Instance, pi: Sequence[int]) -> ProposedOutcome:
    """
    Backward recursion from the top score: the last publisher gets smax and
    every earlier score sits exactly low enough that the next player is
    paid its outside option plus its learning allowance and epsilon.
    """
    n = instance.n
    delta = [0.0] * n
    current = instance.smax
    delta[pi[n - 1]] = current
    for t in range(n, 1, -1):
        current = (
            current
            - instance.alpha[pi[t - 1]] / instance.beta**t
            - lambda_of(instance.bounds, pi, t - 1)
            - instance.epsilon
        )
        delta[pi[t - 2]] = current
    return ProposedOutcome(pi=tuple(pi), delta=tuple(delta))


def schedule_surplus(instance: Instance, outcome: ProposedOutcome) -> float:
    """Score range the schedule leaves unspent after every step is paid for."""
    check = is_collaborative_equilibrium(instance, outcome)
    return float(
        sum(
            slack / instance.beta**t - instance.epsilon
            for t, slack in enumerate(check.slacks, start=1)
        )
    )


def share_data(
    instance: Instance, charge: LearningCharge = LearningCharge.FULL
) -> ProposedOutcome | None:
    """
    Find an ordering and a score schedule forming a collaborative
    equilibrium, or None when no ordering can pay for itself.
    """
    result = min_cost_assignment(assignment_problem(instance, charge))
    budget = instance.budget
    if result.total_weight > budget + config.mechanism.tolerance:
        logger.info(
            "No equilibrium: cheapest ordering costs %s, budget is %s",
            result.total_weight,
            budget,
        )
        return None
    outcome = schedule_from_order(instance, result.matching)
    logger.info(
        "Equilibrium ordering %s at cost %s within budget %s",
        result.matching,
        result.total_weight,
        budget,
    )
    return outcome


def brute_force_equilibrium(
    instance: Instance, charge: LearningCharge = LearningCharge.FULL
) -> ProposedOutcome | None:
    _check_size(instance.n, config.mechanism.brute_force_max_n, "Brute-force search")
    budget = instance.budget + config.mechanism.tolerance
    for pi in permutations(range(instance.n)):
        if equilibrium_cost(instance, pi, charge) <= budget:
            return schedule_from_order(instance, pi)
    return None


def decide_nsq(
    instance: Instance, charge: LearningCharge = LearningCharge.FULL
) -> NsqDecision:
    """
    Exact decision for pairwise learning bounds: depth-first over ordering
    prefixes in lexicographic order, dropping a prefix as soon as its
    accrued cost exceeds the budget.
    """
    if not isinstance(instance.bounds, NSquaredBounds):
        raise UnsupportedVariantError("decide_nsq needs pairwise (nsq) learning bounds")
    n = instance.n
    _check_size(n, config.mechanism.nsq_max_n, "Pairwise decision")
    mu = np.asarray(instance.bounds.mu, dtype=float)
    np.fill_diagonal(mu, 0.0)
    alpha = instance.alpha
    beta = instance.beta
    budget = instance.budget + config.mechanism.tolerance
    charge_last = charge is LearningCharge.FULL

    prefix: list[int] = []
    placed = np.zeros(n, dtype=bool)

    def extend(cost: float) -> float | None:
        t = len(prefix) + 1
        if t > n:
            return cost
        for player in range(n):
            if placed[player]:
                continue
            step = alpha[player] / beta**t
            if t < n or charge_last:
                step += float(mu[player, placed].sum())
            if cost + step > budget:
                continue
            prefix.append(player)
            placed[player] = True
            found = extend(cost + step)
            if found is not None:
                return found
            prefix.pop()
            placed[player] = False
        return None

    cost = extend(0.0)
    if cost is None:
        logger.info("Pairwise instance of size %d is infeasible", n)
        return NsqDecision(feasible=False)
    return NsqDecision(feasible=True, witness=tuple(prefix), cost=cost)


def solve(
    instance: Instance, charge: LearningCharge = LearningCharge.FULL
) -> MechanismVerdict:
    """Dispatch on the learning-bound variant."""
    if isinstance(instance.bounds, NDimBounds):
        outcome = share_data(instance, charge)
    elif isinstance(instance.bounds, NSquaredBounds):
        decision = decide_nsq(instance, charge)
        outcome = (
            schedule_from_order(instance, decision.witness)
            if decision.witness is not None
            else None
        )
    else:
        outcome = brute_force_equilibrium(instance, charge)
    if outcome is None:
        return MechanismVerdict(feasible=False)
    return MechanismVerdict(
        feasible=True, outcome=outcome, cost=equilibrium_cost(instance, outcome.pi, charge)
    )


def fas_to_instance(fas: FasInstance) -> Instance:
    """Pairwise instance whose feasibility is a feedback arc set of weight at most gamma."""
    mu = [[0.0] * fas.n for _ in range(fas.n)]
    for u, v, w in fas.edges:
        mu[u][v] += w
    return Instance(
        n=fas.n,
        alpha=(0.0,) * fas.n,
        beta=1.0,
        bounds=NSquaredBounds(mu=tuple(tuple(row) for row in mu)),
        s0=0.0,
        smax=fas.gamma,
        epsilon=0.0,
    )


def min_feedback_arc_weight(fas: FasInstance) -> tuple[float, tuple[int, ...]]:
    """Cheapest set of back edges over every vertex ordering."""
    _check_size(fas.n, config.mechanism.brute_force_max_n, "Feedback arc enumeration")
    best: tuple[float, tuple[int, ...]] | None = None
    for ordering in permutations(range(fas.n)):
        weight = fas.back_edge_weight(ordering)
        if best is None or weight < best[0]:
            best = (weight, ordering)
    assert best is not None
    return best

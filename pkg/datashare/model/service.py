import logging
from collections.abc import Mapping, Sequence

from datashare.config import config
from datashare.errors import (
    ConfigurationError,
    DomainError,
    InvalidInputError,
    SizeLimitError,
    UnsupportedVariantError,
)
from datashare.model.models import (
    EquilibriumCheck,
    GeneralBounds,
    Instance,
    LearningBounds,
    LearningCharge,
    NDimBounds,
    NSquaredBounds,
    ProposedOutcome,
    ScoreInterval,
    SuperadditivityCheck,
)

logger = logging.getLogger(__name__)


def _check_time(t: int, n: int) -> None:
    if not 1 <= t <= n:
        raise DomainError(f"Time index {t} is outside 1..{n}")


def _check_order(pi: Sequence[int], n: int) -> None:
    if sorted(pi) != list(range(n)):
        raise InvalidInputError(f"{tuple(pi)} is not an ordering of {n} players")


def reward(
    t: int, pi: Sequence[int], z_scores: Sequence[float], instance: Instance
) -> float:
    """Discounted improvement of the player publishing at time t over the previous publisher."""
    _check_time(t, instance.n)
    _check_order(pi, instance.n)
    if len(z_scores) != instance.n:
        raise InvalidInputError("z_scores must hold one score per player")
    previous = z_scores[pi[t - 2]] if t > 1 else instance.s0
    return instance.beta**t * (z_scores[pi[t - 1]] - previous)


def lambda_of(bounds: LearningBounds, pi: Sequence[int], t: int) -> float:
    """How much the player publishing at time t can learn from the publications before her."""
    _check_time(t, bounds.n)
    _check_order(pi, bounds.n)
    if isinstance(bounds, NDimBounds):
        return float(sum(bounds.mu[pi[tau]] for tau in range(t - 1)))
    if isinstance(bounds, NSquaredBounds):
        learner = pi[t - 1]
        return float(sum(bounds.mu[learner][pi[tau]] for tau in range(t - 1)))
    key = (tuple(pi), pi[t - 1])
    if key not in bounds.entries:
        raise ConfigurationError(f"General learning bounds have no entry for {key}")
    return bounds.entries[key]


def check_outcome(instance: Instance, outcome: ProposedOutcome) -> None:
    """Raise unless the schedule climbs from s0 to at most smax in steps of at least epsilon."""
    tolerance = config.mechanism.tolerance
    if outcome.n != instance.n:
        raise InvalidInputError(
            f"Outcome is for {outcome.n} players, instance has {instance.n}"
        )
    previous = instance.s0
    for t, score in enumerate(outcome.scores_in_order(), start=1):
        if score - previous < instance.epsilon - tolerance:
            raise InvalidInputError(
                f"Schedule is not monotone at time {t}: {score} after {previous}"
                + (f" (minimum step {instance.epsilon})" if instance.epsilon else "")
            )
        previous = score
    if previous > instance.smax + tolerance:
        raise InvalidInputError(f"Final score {previous} exceeds smax {instance.smax}")


def inferred_envelope(
    outcome: ProposedOutcome, bounds: LearningBounds, instance: Instance
) -> tuple[ScoreInterval, ...]:
    """Per player, the scores its actual publication may reach: [delta, delta + learning]."""
    check_outcome(instance, outcome)
    intervals: list[ScoreInterval | None] = [None] * instance.n
    for t, player in enumerate(outcome.pi, start=1):
        low = outcome.delta[player]
        intervals[player] = ScoreInterval(
            low=low, high=low + lambda_of(bounds, outcome.pi, t)
        )
    return tuple(interval for interval in intervals if interval is not None)


def is_collaborative_equilibrium(
    instance: Instance, outcome: ProposedOutcome
) -> EquilibriumCheck:
    """
    Check every publication time against its worst case: the predecessor
    published at the top of its envelope and this player at the bottom.
    """
    check_outcome(instance, outcome)
    tolerance = config.mechanism.tolerance
    slacks = []
    violated_at = None
    for t in range(1, instance.n + 1):
        player = outcome.pi[t - 1]
        if t == 1:
            previous, learned = instance.s0, 0.0
        else:
            previous = outcome.delta[outcome.pi[t - 2]]
            learned = lambda_of(instance.bounds, outcome.pi, t - 1)
        slack = (
            instance.beta**t * (outcome.delta[player] - previous - learned)
            - instance.alpha[player]
        )
        slacks.append(slack)
        if violated_at is None and slack < -tolerance:
            violated_at = t
    return EquilibriumCheck(
        holds=violated_at is None, violated_at=violated_at, slacks=tuple(slacks)
    )


def equilibrium_cost(
    instance: Instance,
    pi: Sequence[int],
    charge: LearningCharge = LearningCharge.FULL,
) -> float:
    """Outside options discounted to their slot plus the learning the ordering has to pay for."""
    _check_order(pi, instance.n)
    n = instance.n
    charged = n if charge is LearningCharge.FULL else n - 1
    cost = sum(instance.alpha[pi[t - 1]] / instance.beta**t for t in range(1, n + 1))
    cost += sum(lambda_of(instance.bounds, pi, t) for t in range(1, charged + 1))
    return cost


def supports_equilibrium(
    instance: Instance,
    pi: Sequence[int],
    charge: LearningCharge = LearningCharge.FULL,
) -> bool:
    if not isinstance(instance.bounds, NDimBounds):
        raise UnsupportedVariantError(
            "The closed-form condition needs n-dimensional learning bounds; "
            "use the exhaustive mechanism search instead"
        )
    _check_order(pi, instance.n)
    n = instance.n
    mu = instance.bounds.mu
    discounted = sum(
        instance.alpha[pi[t - 1]] / instance.beta**t for t in range(1, n + 1)
    )
    if charge is LearningCharge.FULL:
        learning = sum((n - t) * mu[pi[t - 1]] for t in range(1, n + 1))
    else:
        learning = sum(max(n - t - 1, 0) * mu[pi[t - 1]] for t in range(1, n + 1))
    return discounted + learning <= instance.budget + config.mechanism.tolerance


def auxiliary_score_is_superadditive(
    table: Mapping[frozenset[int], float], n: int | None = None
) -> SuperadditivityCheck:
    """
    Exhaustive check of f(A) + f(B) <= f(A | B) over disjoint non-empty A, B.
    Players are 0-based; the witness is the first violation in subset order.
    """
    if n is None:
        n = 1 + max((max(subset) for subset in table if subset), default=-1)
    if n > config.mechanism.superadditive_max_n:
        raise SizeLimitError(
            f"Superadditivity check is limited to n <= {config.mechanism.superadditive_max_n}"
        )
    tolerance = config.mechanism.tolerance

    def members(mask: int) -> frozenset[int]:
        return frozenset(i for i in range(n) if mask >> i & 1)

    values = [0.0] * (1 << n)
    for mask in range(1, 1 << n):
        subset = members(mask)
        if subset not in table:
            raise ConfigurationError(
                f"Auxiliary score table has no entry for {sorted(subset)}"
            )
        values[mask] = table[subset]

    for union in range(1, 1 << n):
        lowest = union & -union
        rest = union ^ lowest
        # A always holds the lowest member so each unordered pair is seen once
        sub = rest
        while True:
            a = lowest | sub
            b = union ^ a
            if b and values[a] + values[b] > values[union] + tolerance:
                logger.debug("Superadditivity fails for %s and %s", a, b)
                return SuperadditivityCheck(
                    holds=False, witness=(members(a), members(b))
                )
            if sub == 0:
                break
            sub = (sub - 1) & rest
    return SuperadditivityCheck(holds=True)


def general_bounds_from(bounds: LearningBounds) -> GeneralBounds:
    """Tabulate structured bounds as an explicit (ordering, player) map."""
    if isinstance(bounds, GeneralBounds):
        return bounds

    def entry(pi, player):
        return lambda_of(bounds, pi, pi.index(player) + 1)

    return GeneralBounds.from_function(bounds.n, entry)

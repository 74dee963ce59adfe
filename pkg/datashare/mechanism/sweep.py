"""Seeded random instances and the matching-versus-enumeration agreement sweep."""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from pydantic import BaseModel, ConfigDict

from datashare.mechanism.service import brute_force_equilibrium, share_data
from datashare.model.models import Instance, LearningCharge, NDimBounds
from datashare.utils.randomness import substream

logger = logging.getLogger(__name__)

BETAS = (0.5, 0.9, 1.0)


def random_instance(rng: np.random.Generator, n: int) -> Instance:
    """
    An n-dimensional instance with alpha and mu drawn from [0, 1] and beta
    from BETAS; smax is set near the cost of a typical schedule so that
    feasibility is close to a coin flip.
    """
    alpha = rng.uniform(0, 1, n)
    mu = rng.uniform(0, 1, n)
    beta = float(rng.choice(BETAS))
    times = np.arange(1, n + 1)
    typical = float(alpha.mean() * (1 / beta**times).sum() + mu.mean() * n * (n - 1) / 2)
    s0 = float(rng.uniform(0, 1))
    return Instance(
        n=n,
        alpha=tuple(float(a) for a in alpha),
        beta=beta,
        bounds=NDimBounds(mu=tuple(float(m) for m in mu)),
        s0=s0,
        smax=s0 + typical * float(rng.uniform(0.6, 1.4)),
        epsilon=float(rng.choice([0.0, 0.01])),
    )


class SweepReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    instances: int
    feasible: int
    disagreements: tuple[int, ...]


def _agrees(seed: int, index: int, max_n: int, charge: LearningCharge) -> tuple[bool, bool]:
    rng = substream(seed, f"sweep/{index}")
    instance = random_instance(rng, int(rng.integers(1, max_n + 1)))
    matched = share_data(instance, charge) is not None
    enumerated = brute_force_equilibrium(instance, charge) is not None
    return matched == enumerated, enumerated


def agreement_sweep(
    count: int,
    seed: int,
    max_n: int = 7,
    charge: LearningCharge = LearningCharge.FULL,
    workers: int | None = None,
) -> SweepReport:
    """Compare the matching mechanism with exhaustive search on count random instances."""
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(
            executor.map(lambda index: _agrees(seed, index, max_n, charge), range(count))
        )
    disagreements = tuple(index for index, (same, _) in enumerate(results) if not same)
    if disagreements:
        logger.warning("Mechanism disagrees with enumeration on %s", disagreements)
    return SweepReport(
        instances=count,
        feasible=sum(1 for _, feasible in results if feasible),
        disagreements=disagreements,
    )

"""
Score models: concrete collaboration problems that can turn any target
score into an actual output with exactly that score.

Each model folds the prior over the data and the function being computed
into its own parameters, and exposes the numbers the mechanism needs:
prior score, best score, outside options.
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Collection, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from datashare.config import config
from datashare.errors import DomainError, InvalidInputError, SizeLimitError
from datashare.model.models import Instance, LearningBounds, NDimBounds
from datashare.utils.randomness import random_bits

logger = logging.getLogger(__name__)

BISECTION_STEPS = 200


class RealizedOutput(BaseModel):
    """An output built for a target score; payload meaning depends on the model."""

    model_config = ConfigDict(frozen=True)

    model: str
    target: float
    payload: tuple[float, ...]

    def to_bytes(self) -> bytes:
        return json.dumps(
            {"model": self.model, "payload": list(self.payload)},
            separators=(",", ":"),
            sort_keys=True,
        ).encode()


def bisect_increasing(
    fn: Callable[[float], float], target: float, low: float, high: float
) -> float:
    """Argument in [low, high] where the non-decreasing fn reaches target."""
    for _ in range(BISECTION_STEPS):
        middle = (low + high) / 2
        if middle in (low, high):
            break
        if fn(middle) < target:
            low = middle
        else:
            high = middle
    return high if abs(fn(high) - target) <= abs(fn(low) - target) else low


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


class ScoreModel(ABC):
    name: str
    n: int

    @abstractmethod
    def prior_score(self) -> float: ...

    @abstractmethod
    def max_score(self) -> float: ...

    @abstractmethod
    def alpha_of(self, player: int) -> float: ...

    @abstractmethod
    def realize(self, delta: float) -> RealizedOutput: ...

    @abstractmethod
    def score(self, realized: RealizedOutput) -> float: ...

    def instance(
        self,
        beta: float = 1.0,
        bounds: LearningBounds | None = None,
        epsilon: float = 0.0,
    ) -> Instance:
        return Instance(
            n=self.n,
            alpha=tuple(self.alpha_of(i) for i in range(self.n)),
            beta=beta,
            bounds=bounds if bounds is not None else NDimBounds(mu=(0.0,) * self.n),
            s0=self.prior_score(),
            smax=self.max_score(),
            epsilon=epsilon,
        )

    def _check_player(self, player: int) -> None:
        if not 0 <= player < self.n:
            raise DomainError(f"Player {player} is outside 0..{self.n - 1}")

    def _check_target(self, delta: float) -> float:
        tolerance = config.mechanism.tolerance
        low, high = self.prior_score(), self.max_score()
        if not low - tolerance <= delta <= high + tolerance:
            raise DomainError(f"Target score {delta} is outside [{low}, {high}]")
        return min(max(delta, low), high)


class XorSecret(ScoreModel):
    """
    The answer is the XOR of every player's bit-string, so nobody learns a
    single bit alone. Score is the entropy removed from a uniform prior.
    """

    name = "xor_secret"

    def __init__(
        self,
        n: int,
        bit_length: int | None = None,
        secret: int | None = None,
        rng: np.random.Generator | None = None,
    ):
        if n < 1:
            raise InvalidInputError("xor_secret needs at least one player")
        self.n = n
        self.bit_length = bit_length if bit_length is not None else n
        if self.bit_length < 1:
            raise InvalidInputError("bit_length must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.inputs = tuple(random_bits(rng, self.bit_length) for _ in range(n))
        if secret is not None:
            # last player's share absorbs the difference
            rest = 0
            for value in self.inputs[:-1]:
                rest ^= value
            self.inputs = (*self.inputs[:-1], secret ^ rest)
        self.secret = 0
        for value in self.inputs:
            self.secret ^= value

    def secret_bit(self, index: int) -> int:
        """index 0 is the most significant bit."""
        return self.secret >> (self.bit_length - 1 - index) & 1

    def prior_score(self) -> float:
        return 0.0

    def max_score(self) -> float:
        return float(self.bit_length)

    def alpha_of(self, player: int) -> float:
        self._check_player(player)
        return 0.0

    def realize(self, delta: float) -> RealizedOutput:
        delta = self._check_target(delta)
        tolerance = config.mechanism.tolerance
        revealed = min(int(math.floor(delta + tolerance)), self.bit_length)
        gain = delta - revealed
        probabilities = []
        for index in range(self.bit_length):
            bit = self.secret_bit(index)
            if index < revealed:
                probabilities.append(float(bit))
            elif index == revealed and gain > tolerance:
                q = bisect_increasing(lambda p: 1 - binary_entropy(p), gain, 0.5, 1.0)
                probabilities.append(q if bit else 1 - q)
            else:
                probabilities.append(0.5)
        return RealizedOutput(model=self.name, target=delta, payload=tuple(probabilities))

    def score(self, realized: RealizedOutput) -> float:
        return float(sum(1 - binary_entropy(p) for p in realized.payload))


class PathFlow(ScoreModel):
    """
    Players each own some edges of a graph; the answer is the set of
    source-to-sink paths. A publication is a distribution over path sets and
    scores the expected number of true paths it contains, which is the
    number of paths known with certainty when the output is deterministic.
    """

    name = "path_flow"

    def __init__(
        self,
        edges: Sequence[tuple[int, int]],
        source: int,
        sink: int,
        partition: Sequence[Collection[int]],
    ):
        if len(edges) > config.mechanism.path_flow_max_edges:
            raise SizeLimitError(
                f"Path-flow graphs are limited to {config.mechanism.path_flow_max_edges} edges"
            )
        owned = [edge for part in partition for edge in part]
        if len(owned) != len(set(owned)) or not set(owned) <= set(range(len(edges))):
            raise InvalidInputError("Edge partition must hold distinct edge indices")
        self.n = len(partition)
        self.edges = tuple((int(u), int(v)) for u, v in edges)
        self.source = source
        self.sink = sink
        self.partition = tuple(frozenset(part) for part in partition)
        self.paths = self.enumerate_paths(self.edges, source, sink)

    @staticmethod
    def enumerate_paths(
        edges: Sequence[tuple[int, int]], source: int, sink: int
    ) -> tuple[tuple[int, ...], ...]:
        """Simple source-to-sink paths as edge-index tuples, in sorted order."""
        outgoing: dict[int, list[int]] = {}
        for index, (u, _) in enumerate(edges):
            outgoing.setdefault(u, []).append(index)
        found: list[tuple[int, ...]] = []
        stack: list[tuple[int, tuple[int, ...], frozenset[int]]] = [
            (source, (), frozenset({source}))
        ]
        while stack:
            vertex, path, visited = stack.pop()
            if vertex == sink and path:
                found.append(path)
                continue
            for index in outgoing.get(vertex, []):
                head = edges[index][1]
                if head in visited:
                    continue
                stack.append((head, (*path, index), visited | {head}))
        return tuple(sorted(found))

    def prior_score(self) -> float:
        return 0.0

    def max_score(self) -> float:
        return float(len(self.paths))

    def alpha_of(self, player: int) -> float:
        self._check_player(player)
        mine = self.partition[player]
        return float(sum(1 for path in self.paths if set(path) <= mine))

    def realize(self, delta: float) -> RealizedOutput:
        delta = self._check_target(delta)
        tolerance = config.mechanism.tolerance
        certain = min(int(math.floor(delta + tolerance)), len(self.paths))
        fraction = delta - certain
        payload = [
            1.0 if index < certain else (fraction if index == certain else 0.0)
            for index in range(len(self.paths))
        ]
        if fraction <= tolerance and certain < len(self.paths):
            payload[certain] = 0.0
        return RealizedOutput(model=self.name, target=delta, payload=tuple(payload))

    def score(self, realized: RealizedOutput) -> float:
        return float(sum(realized.payload))

    def certain_paths(self, realized: RealizedOutput) -> tuple[tuple[int, ...], ...]:
        return tuple(
            path
            for path, probability in zip(self.paths, realized.payload, strict=True)
            if probability >= 1.0
        )


class GeneLoci(ScoreModel):
    """
    Find which loci belong to the answer set. A publication assigns each
    locus an inclusion probability and scores the probability mass on true
    loci minus the mass on false ones. Evidence is each player's own
    posterior inclusion probability per locus; pooling adds log-odds.
    """

    name = "gene_loci"
    THRESHOLD = 0.5

    def __init__(
        self,
        loci: Sequence[str],
        true_set: Collection[str],
        evidence: Sequence[Sequence[float]],
    ):
        if not set(true_set) <= set(loci):
            raise InvalidInputError("true_set must be drawn from loci")
        matrix = np.asarray(evidence, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != len(loci):
            raise InvalidInputError("evidence needs one probability per player and locus")
        if np.any((matrix <= 0.0) | (matrix >= 1.0)):
            raise InvalidInputError("evidence probabilities must lie strictly in (0, 1)")
        self.n = matrix.shape[0]
        self.loci = tuple(loci)
        self.truth = np.array([locus in set(true_set) for locus in loci], dtype=float)
        self.evidence = matrix
        pooled = np.log(matrix / (1 - matrix)).sum(axis=0)
        self.pooled_choice = (pooled > 0).astype(float)
        self._prior = self.score_of(np.full(len(loci), 0.5))
        self._best = max(self._prior, self.score_of(self.pooled_choice))

    def score_of(self, inclusion: np.ndarray) -> float:
        signs = 2 * self.truth - 1
        return float(np.dot(signs, inclusion))

    def prior_score(self) -> float:
        return self._prior

    def max_score(self) -> float:
        return self._best

    def alpha_of(self, player: int) -> float:
        self._check_player(player)
        own = (self.evidence[player] > self.THRESHOLD).astype(float)
        # publishing the prior is always available
        return max(0.0, self.score_of(own) - self._prior)

    def _inclusion(self, theta: float) -> np.ndarray:
        return 0.5 + theta * (self.pooled_choice - 0.5)

    def realize(self, delta: float) -> RealizedOutput:
        delta = self._check_target(delta)
        if self._best - self._prior <= config.mechanism.tolerance:
            theta = 0.0
        else:
            theta = bisect_increasing(
                lambda value: self.score_of(self._inclusion(value)), delta, 0.0, 1.0
            )
        return RealizedOutput(
            model=self.name,
            target=delta,
            payload=tuple(float(p) for p in self._inclusion(theta)),
        )

    def score(self, realized: RealizedOutput) -> float:
        return self.score_of(np.asarray(realized.payload, dtype=float))


class GaussianMean(ScoreModel):
    """
    Estimate a mean from Gaussian samples with known variance. The score of
    an estimator is how far it brings the squared error below sigma^2, so N
    pooled samples are worth sigma^2 (1 - 1/N).
    """

    name = "gaussian_mean"

    def __init__(self, sigma: float, counts: Sequence[int]):
        if sigma <= 0 or not math.isfinite(sigma):
            raise InvalidInputError("sigma must be positive")
        if not counts or any(k < 1 for k in counts):
            raise InvalidInputError("every player needs at least one sample")
        self.sigma = float(sigma)
        self.counts = tuple(int(k) for k in counts)
        self.n = len(self.counts)

    def pooled_reward(self, samples: int) -> float:
        return self.sigma**2 * (1 - 1 / samples)

    def prior_score(self) -> float:
        return 0.0

    def max_score(self) -> float:
        return self.pooled_reward(sum(self.counts))

    def alpha_of(self, player: int) -> float:
        self._check_player(player)
        return self.pooled_reward(self.counts[player])

    def realize(self, delta: float) -> RealizedOutput:
        delta = self._check_target(delta)
        total = sum(self.counts)
        # pooled mean plus independent noise topping the error up to sigma^2 - delta
        noise = max(0.0, self.sigma**2 - delta - self.sigma**2 / total)
        return RealizedOutput(
            model=self.name, target=delta, payload=(float(total), noise)
        )

    def score(self, realized: RealizedOutput) -> float:
        total, noise = realized.payload
        return self.sigma**2 - (self.sigma**2 / total + noise)


def xor_secret_model(
    n: int, bit_length: int | None = None, rng: np.random.Generator | None = None
) -> XorSecret:
    return XorSecret(n, bit_length, rng=rng)


def path_flow_model(
    graph: Sequence[tuple[int, int]],
    source: int,
    sink: int,
    partition: Sequence[Collection[int]],
) -> PathFlow:
    return PathFlow(graph, source, sink, partition)


def gene_loci_model(
    loci: Sequence[str],
    true_set: Collection[str],
    evidence: Sequence[Sequence[float]],
) -> GeneLoci:
    return GeneLoci(loci, true_set, evidence)


def gaussian_mean_model(sigma: float, counts: Sequence[int]) -> GaussianMean:
    return GaussianMean(sigma, counts)

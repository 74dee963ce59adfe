import math
from itertools import combinations, permutations

import numpy as np
import pytest

from datashare.errors import (
    ConfigurationError,
    DomainError,
    InvalidInputError,
    SizeLimitError,
    UnsupportedVariantError,
)
from datashare.model.models import (
    GeneralBounds,
    Instance,
    LearningCharge,
    NDimBounds,
    NSquaredBounds,
    ProposedOutcome,
)
from datashare.model.service import (
    auxiliary_score_is_superadditive,
    check_outcome,
    equilibrium_cost,
    general_bounds_from,
    inferred_envelope,
    is_collaborative_equilibrium,
    lambda_of,
    reward,
    supports_equilibrium,
)


def ndim_instance(alpha, mu, beta=1.0, s0=0.0, smax=10.0, epsilon=0.0):
    return Instance(
        n=len(alpha),
        alpha=tuple(alpha),
        beta=beta,
        bounds=NDimBounds(mu=tuple(mu)),
        s0=s0,
        smax=smax,
        epsilon=epsilon,
    )


def all_subsets_table(n, fn):
    return {
        frozenset(subset): fn(frozenset(subset))
        for size in range(1, n + 1)
        for subset in combinations(range(n), size)
    }


class TestReward:
    def test_unit_steps_reward_one(self):
        instance = ndim_instance([0, 0, 0], [0, 0, 0], smax=3)
        scores = (1.0, 2.0, 3.0)
        for t in range(1, 4):
            assert reward(t, (0, 1, 2), scores, instance) == pytest.approx(1.0)

    def test_equal_scores_reward_zero(self):
        instance = ndim_instance([0, 0], [0, 0])
        assert reward(2, (0, 1), (2.0, 2.0), instance) == 0.0

    def test_discount(self):
        instance = ndim_instance([0, 0], [0, 0], beta=0.5)
        assert reward(2, (1, 0), (5.0, 1.0), instance) == pytest.approx(1.0)

    @pytest.mark.parametrize("t", [0, 3])
    def test_time_out_of_range(self, t):
        instance = ndim_instance([0, 0], [0, 0])
        with pytest.raises(DomainError):
            reward(t, (0, 1), (1.0, 2.0), instance)

    def test_rewards_telescope(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(1, 7))
            beta = float(rng.choice([0.5, 0.9, 1.0]))
            instance = ndim_instance([0] * n, [0] * n, beta=beta, smax=100)
            pi = tuple(int(p) for p in rng.permutation(n))
            scores = [0.0] * n
            for t, score in enumerate(np.sort(rng.uniform(0, 100, n)), start=1):
                scores[pi[t - 1]] = float(score)
            total = sum(
                reward(t, pi, scores, instance) / beta**t for t in range(1, n + 1)
            )
            assert total == pytest.approx(scores[pi[-1]] - instance.s0, abs=1e-9)


class TestLambdaOf:
    def test_zero_vector(self):
        bounds = NDimBounds(mu=(0, 0, 0))
        for pi in permutations(range(3)):
            for t in range(1, 4):
                assert lambda_of(bounds, pi, t) == 0.0

    def test_ndim_sums_predecessors(self):
        assert lambda_of(NDimBounds(mu=(1, 2, 3)), (0, 1, 2), 3) == 3.0

    def test_nsq_unit_matrix(self):
        mu = tuple(tuple(0.0 if i == j else 1.0 for j in range(4)) for i in range(4))
        assert lambda_of(NSquaredBounds(mu=mu), (3, 1, 0, 2), 4) == 3.0

    def test_nsq_ignores_diagonal(self):
        bounds = NSquaredBounds(mu=((9, 1), (2, 9)))
        assert lambda_of(bounds, (0, 1), 1) == 0.0
        assert lambda_of(bounds, (0, 1), 2) == 2.0

    def test_first_position_learns_nothing(self):
        assert lambda_of(NDimBounds(mu=(5, 5)), (1, 0), 1) == 0.0

    def test_general_lookup(self):
        bounds = GeneralBounds.from_function(2, lambda pi, player: 1.5 if player == pi[1] else 0)
        assert lambda_of(bounds, (1, 0), 2) == 1.5

    def test_general_missing_entry(self):
        bounds = GeneralBounds(size=2, entries={((0, 1), 0): 0.0})
        with pytest.raises(ConfigurationError):
            lambda_of(bounds, (0, 1), 2)

    def test_ndim_monotone_in_time(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            n = int(rng.integers(1, 6))
            pi = tuple(int(p) for p in rng.permutation(n))
            bounds = NDimBounds(mu=tuple(rng.uniform(0, 1, n)))
            for candidate in (bounds, general_bounds_from(bounds)):
                values = [lambda_of(candidate, pi, t) for t in range(1, n + 1)]
                assert values == sorted(values)

    def test_general_tabulation_matches_structured(self):
        bounds = NDimBounds(mu=(0.3, 0.1, 0.7))
        general = general_bounds_from(bounds)
        for pi in permutations(range(3)):
            for t in range(1, 4):
                assert lambda_of(general, pi, t) == pytest.approx(lambda_of(bounds, pi, t))


class TestInferredEnvelope:
    def test_zero_learning_is_degenerate(self):
        instance = ndim_instance([0, 0], [0, 0])
        outcome = ProposedOutcome(pi=(0, 1), delta=(1.0, 2.0))
        for interval in inferred_envelope(outcome, instance.bounds, instance):
            assert interval.low == interval.high

    def test_second_player_learns_first(self):
        instance = ndim_instance([0, 0], [1, 1])
        outcome = ProposedOutcome(pi=(0, 1), delta=(2.0, 3.0))
        first, second = inferred_envelope(outcome, instance.bounds, instance)
        assert (first.low, first.high) == (2.0, 2.0)
        assert (second.low, second.high) == (3.0, 4.0)

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            n = int(rng.integers(1, 7))
            mu = rng.uniform(0, 1, n)
            instance = ndim_instance([0] * n, mu, smax=100)
            pi = tuple(int(p) for p in rng.permutation(n))
            delta = [0.0] * n
            for t, score in enumerate(np.sort(rng.uniform(0, 100, n))):
                delta[pi[t]] = float(score)
            outcome = ProposedOutcome(pi=pi, delta=tuple(delta))
            intervals = inferred_envelope(outcome, instance.bounds, instance)
            for t, player in enumerate(pi):
                learned = sum(mu[pi[tau]] for tau in range(t))
                assert intervals[player].low == delta[player]
                assert intervals[player].high == pytest.approx(delta[player] + learned)


class TestCheckOutcome:
    def test_non_monotone_schedule(self):
        instance = ndim_instance([0, 0], [0, 0])
        with pytest.raises(InvalidInputError) as exc_info:
            check_outcome(instance, ProposedOutcome(pi=(0, 1), delta=(2.0, 1.0)))
        assert "not monotone" in exc_info.value.detail

    def test_epsilon_gap_required(self):
        instance = ndim_instance([0, 0], [0, 0], epsilon=0.5)
        with pytest.raises(InvalidInputError):
            check_outcome(instance, ProposedOutcome(pi=(0, 1), delta=(1.0, 1.2)))

    def test_equal_scores_allowed_without_epsilon(self):
        instance = ndim_instance([0, 0], [0, 0])
        check_outcome(instance, ProposedOutcome(pi=(0, 1), delta=(1.0, 1.0)))

    def test_above_smax(self):
        instance = ndim_instance([0, 0], [0, 0], smax=1.0)
        with pytest.raises(InvalidInputError):
            check_outcome(instance, ProposedOutcome(pi=(0, 1), delta=(1.0, 2.0)))


class TestIsCollaborativeEquilibrium:
    def test_increasing_schedule_with_zero_alpha(self):
        instance = ndim_instance([0, 0, 0], [0, 0, 0])
        check = is_collaborative_equilibrium(
            instance, ProposedOutcome(pi=(2, 0, 1), delta=(2.0, 3.0, 1.0))
        )
        assert check.holds
        assert check.violated_at is None

    def test_small_gap_fails_at_second_step(self):
        instance = ndim_instance([0, 3], [0, 0], smax=2)
        check = is_collaborative_equilibrium(
            instance, ProposedOutcome(pi=(0, 1), delta=(1.0, 2.0))
        )
        assert not check.holds
        assert check.violated_at == 2
        assert check.slacks[1] == pytest.approx(-2.0)

    def test_predecessor_learning_is_charged(self):
        instance = ndim_instance([0, 0, 1], [1, 0, 0], smax=5)
        outcome = ProposedOutcome(pi=(0, 1, 2), delta=(1.0, 2.0, 3.5))
        check = is_collaborative_equilibrium(instance, outcome)
        assert check.violated_at == 3
        outcome = ProposedOutcome(pi=(0, 1, 2), delta=(1.0, 2.0, 4.0))
        assert is_collaborative_equilibrium(instance, outcome).holds

    def test_non_monotone_is_an_error_not_false(self):
        instance = ndim_instance([0, 0], [0, 0])
        with pytest.raises(InvalidInputError):
            is_collaborative_equilibrium(
                instance, ProposedOutcome(pi=(0, 1), delta=(3.0, 1.0))
            )


class TestSupportsEquilibrium:
    def test_zero_alpha_and_mu(self):
        instance = ndim_instance([0, 0, 0], [0, 0, 0], smax=0.0)
        assert all(supports_equilibrium(instance, pi) for pi in permutations(range(3)))

    def test_outside_options_exceed_budget(self):
        instance = ndim_instance([3, 3], [0, 0], smax=5)
        assert not supports_equilibrium(instance, (0, 1))

    def test_matches_direct_arithmetic(self):
        alpha, mu, beta = (0.1, 0.2, 0.3), (0.05, 0.05, 0.05), 0.9
        instance = ndim_instance(alpha, mu, beta=beta, smax=0.9)
        for pi in permutations(range(3)):
            left = sum(alpha[pi[t - 1]] / beta**t for t in range(1, 4))
            left += sum((3 - t) * mu[pi[t - 1]] for t in range(1, 4))
            assert supports_equilibrium(instance, pi) == (left <= 0.9 + 1e-9)

    def test_closed_form_matches_general_cost(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = int(rng.integers(1, 7))
            instance = ndim_instance(
                rng.uniform(0, 1, n), rng.uniform(0, 1, n), beta=0.9, smax=float(n)
            )
            pi = tuple(int(p) for p in rng.permutation(n))
            for charge in LearningCharge:
                cost = equilibrium_cost(instance, pi, charge)
                assert supports_equilibrium(instance, pi, charge) == (
                    cost <= instance.budget + 1e-9
                )

    def test_tight_charge_is_never_stricter(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            instance = ndim_instance(
                rng.uniform(0, 1, n), rng.uniform(0, 1, n), smax=float(rng.uniform(0, n))
            )
            pi = tuple(int(p) for p in rng.permutation(n))
            if supports_equilibrium(instance, pi, LearningCharge.FULL):
                assert supports_equilibrium(instance, pi, LearningCharge.TIGHT)

    def test_epsilon_reduces_budget(self):
        instance = ndim_instance([0.5, 0.5], [0, 0], smax=1.0, epsilon=0.1)
        assert not supports_equilibrium(instance, (0, 1))

    def test_rejects_nsq_bounds(self):
        instance = Instance(
            n=2,
            alpha=(0, 0),
            beta=1,
            bounds=NSquaredBounds(mu=((0, 1), (1, 0))),
            s0=0,
            smax=1,
        )
        with pytest.raises(UnsupportedVariantError):
            supports_equilibrium(instance, (0, 1))

    def test_superadditive_tables_always_supported(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            n = int(rng.integers(1, 7))
            weights = rng.uniform(0, 1, n)
            power = float(rng.uniform(1, 2))
            table = all_subsets_table(
                n, lambda subset: float(sum(weights[i] for i in subset)) ** power
            )
            assert auxiliary_score_is_superadditive(table, n).holds
            everyone = frozenset(range(n))
            instance = ndim_instance(
                [table[frozenset({i})] for i in range(n)],
                [0] * n,
                beta=1.0,
                smax=table[everyone],
            )
            assert all(
                supports_equilibrium(instance, pi) for pi in permutations(range(n))
            )


class TestSuperadditivity:
    def test_squares(self):
        table = all_subsets_table(4, lambda subset: float(len(subset) ** 2))
        assert auxiliary_score_is_superadditive(table).holds

    def test_square_roots(self):
        table = all_subsets_table(4, lambda subset: math.sqrt(len(subset)))
        check = auxiliary_score_is_superadditive(table)
        assert not check.holds
        assert check.witness == (frozenset({0}), frozenset({1}))

    def test_missing_subset(self):
        table = all_subsets_table(3, lambda subset: float(len(subset)))
        del table[frozenset({0, 2})]
        with pytest.raises(ConfigurationError):
            auxiliary_score_is_superadditive(table, 3)

    def test_size_cap(self):
        with pytest.raises(SizeLimitError):
            auxiliary_score_is_superadditive({}, 13)

    def test_matches_pair_enumeration(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            n = int(rng.integers(1, 6))
            table = all_subsets_table(
                n, lambda subset: len(subset) + float(rng.uniform(-0.4, 0.4))
            )
            expected = True
            keys = list(table)
            for a in keys:
                for b in keys:
                    if not a & b and table[a] + table[b] > table[a | b] + 1e-9:
                        expected = False
            assert auxiliary_score_is_superadditive(table, n).holds == expected


from itertools import combinations, permutations

import numpy as np
import pytest

from datashare.errors import InvalidInputError, SizeLimitError, UnsupportedVariantError
from datashare.mechanism.models import FasInstance
from datashare.mechanism.service import (
    brute_force_equilibrium,
    decide_nsq,
    fas_to_instance,
    min_feedback_arc_weight,
    schedule_from_order,
    schedule_surplus,
    share_data,
    solve,
)
from datashare.mechanism.sweep import random_instance
from datashare.model.models import Instance, LearningCharge, NDimBounds, NSquaredBounds
from datashare.model.scores import gaussian_mean_model
from datashare.model.service import equilibrium_cost, is_collaborative_equilibrium

UNIT_CYCLE = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]


def is_acyclic(n, edges):
    indegree = [0] * n
    for _, v, _ in edges:
        indegree[v] += 1
    ready = [v for v in range(n) if indegree[v] == 0]
    seen = 0
    while ready:
        u = ready.pop()
        seen += 1
        for tail, head, _ in edges:
            if tail == u:
                indegree[head] -= 1
                if indegree[head] == 0:
                    ready.append(head)
    return seen == n


def min_fas_by_subsets(fas):
    """Lightest edge subset whose removal leaves an acyclic graph."""
    edges = list(fas.edges)
    best = float("inf")
    for size in range(len(edges) + 1):
        for removed in combinations(range(len(edges)), size):
            kept = [edge for index, edge in enumerate(edges) if index not in removed]
            if is_acyclic(fas.n, kept):
                best = min(best, sum(edges[index][2] for index in removed))
    return best


def random_graph(rng):
    n = int(rng.integers(2, 8))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    rng.shuffle(pairs)
    count = int(rng.integers(1, min(12, len(pairs)) + 1))
    return FasInstance(
        n=n,
        edges=tuple(
            (int(u), int(v), float(rng.integers(1, 4))) for u, v in pairs[:count]
        ),
    )


def holds_for(instance, outcome):
    try:
        return is_collaborative_equilibrium(instance, outcome).holds
    except InvalidInputError:
        return False


class TestShareData:
    def test_free_collaboration_publishes_the_top_score(self):
        instance = Instance(
            n=3, alpha=(0, 0, 0), beta=0.8, bounds={"ndim": [0, 0, 0]}, s0=0, smax=2
        )
        outcome = share_data(instance)
        assert outcome is not None
        assert outcome.delta == (2.0, 2.0, 2.0)
        assert is_collaborative_equilibrium(instance, outcome).holds

    def test_gaussian_mean_has_no_equilibrium(self):
        instance = gaussian_mean_model(1.0, [2, 2]).instance(beta=1.0)
        assert share_data(instance) is None
        assert brute_force_equilibrium(instance) is None

    def test_rejects_pairwise_bounds(self):
        instance = fas_to_instance(FasInstance(n=3, edges=UNIT_CYCLE, gamma=1.0))
        with pytest.raises(UnsupportedVariantError):
            share_data(instance)

    @pytest.mark.parametrize("charge", list(LearningCharge))
    def test_agrees_with_enumeration(self, charge):
        rng = np.random.default_rng(2024)
        feasible = 0
        for _ in range(500):
            instance = random_instance(rng, int(rng.integers(1, 8)))
            matched = share_data(instance, charge)
            enumerated = brute_force_equilibrium(instance, charge)
            assert (matched is None) == (enumerated is None)
            if matched is not None:
                feasible += 1
                assert is_collaborative_equilibrium(instance, matched).holds
        assert 0 < feasible < 500

    def test_recursion_is_tight_after_the_first_step(self):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 100:
            instance = random_instance(rng, int(rng.integers(2, 7)))
            outcome = share_data(instance)
            if outcome is None:
                continue
            checked += 1
            slacks = is_collaborative_equilibrium(instance, outcome).slacks
            for t, slack in enumerate(slacks[1:], start=2):
                assert slack == pytest.approx(instance.beta**t * instance.epsilon, abs=1e-9)
            assert slacks[0] >= -1e-9

    def test_surplus_lands_in_the_first_step(self):
        rng = np.random.default_rng(6)
        checked = 0
        while checked < 50:
            instance = random_instance(rng, int(rng.integers(1, 7)))
            outcome = share_data(instance)
            if outcome is None:
                continue
            checked += 1
            expected = instance.budget - equilibrium_cost(
                instance, outcome.pi, LearningCharge.TIGHT
            )
            assert schedule_surplus(instance, outcome) == pytest.approx(expected, abs=1e-9)

    def test_harder_instances_never_become_feasible(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            instance = random_instance(rng, int(rng.integers(1, 7)))
            if share_data(instance) is not None:
                continue
            i = int(rng.integers(instance.n))
            alpha = list(instance.alpha)
            alpha[i] += float(rng.uniform(0, 1))
            mu = list(instance.bounds.mu)
            mu[i] += float(rng.uniform(0, 1))
            harder = [
                instance.model_copy(update={"alpha": tuple(alpha)}),
                instance.model_copy(update={"bounds": NDimBounds(mu=tuple(mu))}),
                instance.model_copy(update={"beta": instance.beta * 0.9}),
                instance.model_copy(update={"smax": instance.smax - 0.1}),
            ]
            for variant in harder:
                if variant.smax >= variant.s0:
                    assert share_data(variant) is None

    def test_tight_charge_is_exact_without_epsilon(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            instance = random_instance(rng, int(rng.integers(1, 6))).model_copy(
                update={"epsilon": 0.0}
            )
            budget = instance.budget
            for pi in permutations(range(instance.n)):
                cost = equilibrium_cost(instance, pi, LearningCharge.TIGHT)
                if abs(cost - budget) < 1e-6:
                    continue
                outcome = schedule_from_order(instance, pi)
                assert holds_for(instance, outcome) == (cost <= budget)


class TestBruteForce:
    def test_single_player(self):
        instance = Instance(
            n=1, alpha=(0,), beta=1, bounds={"ndim": [0]}, s0=1.0, smax=2.0
        )
        outcome = brute_force_equilibrium(instance)
        assert outcome.pi == (0,)
        assert outcome.delta == (2.0,)

    def test_unit_cycle_below_its_feedback_arc(self):
        instance = fas_to_instance(FasInstance(n=3, edges=UNIT_CYCLE, gamma=0.5))
        assert brute_force_equilibrium(instance) is None

    def test_size_cap(self):
        instance = Instance(
            n=9, alpha=(0,) * 9, beta=1, bounds={"ndim": [0] * 9}, s0=0, smax=1
        )
        with pytest.raises(SizeLimitError):
            brute_force_equilibrium(instance)


class TestDecideNsq:
    def test_zero_learning_matches_ndim(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            base = random_instance(rng, int(rng.integers(1, 6)))
            n = base.n
            ndim = base.model_copy(update={"bounds": NDimBounds(mu=(0.0,) * n)})
            nsq = ndim.model_copy(
                update={"bounds": NSquaredBounds(mu=((0.0,) * n,) * n)}
            )
            assert decide_nsq(nsq).feasible == (share_data(ndim) is not None)

    def test_unit_cycle_with_unit_budget(self):
        instance = fas_to_instance(FasInstance(n=3, edges=UNIT_CYCLE, gamma=1.0))
        decision = decide_nsq(instance)
        assert decision.feasible
        assert decision.witness == (0, 1, 2)
        assert decision.cost == 1.0

    def test_agrees_with_enumeration(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            n = int(rng.integers(1, 8))
            mu = rng.uniform(0, 0.4, (n, n)) * (rng.random((n, n)) < 0.6)
            base = random_instance(rng, n)
            instance = base.model_copy(
                update={"bounds": NSquaredBounds(mu=tuple(map(tuple, mu.tolist())))}
            )
            decision = decide_nsq(instance)
            assert decision.feasible == (brute_force_equilibrium(instance) is not None)
            if decision.feasible:
                assert equilibrium_cost(instance, decision.witness) <= instance.budget + 1e-9

    def test_rejects_ndim(self):
        instance = Instance(n=1, alpha=(0,), beta=1, bounds={"ndim": [0]}, s0=0, smax=1)
        with pytest.raises(UnsupportedVariantError):
            decide_nsq(instance)


class TestFeedbackArcReduction:
    def test_acyclic_graph_needs_no_budget(self):
        fas = FasInstance(n=4, edges=[(0, 1, 1.0), (1, 2, 2.0), (0, 3, 1.0)], gamma=0.0)
        assert decide_nsq(fas_to_instance(fas)).feasible

    @pytest.mark.parametrize("gamma,feasible", [(1.0, True), (0.99, False)])
    def test_unit_cycle_threshold(self, gamma, feasible):
        fas = FasInstance(n=3, edges=UNIT_CYCLE, gamma=gamma)
        assert decide_nsq(fas_to_instance(fas)).feasible is feasible

    def test_parallel_edges_add_up(self):
        fas = FasInstance(n=2, edges=[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 0.5)])
        assert fas_to_instance(fas).bounds.mu[0][1] == 3.0
        assert min_feedback_arc_weight(fas) == (0.5, (0, 1))

    def test_self_loops_are_rejected(self):
        with pytest.raises(ValueError):
            FasInstance(n=2, edges=[(1, 1, 1.0)])

    def test_random_graphs_match_subset_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            graph = random_graph(rng)
            exact = min_fas_by_subsets(graph)
            weight, ordering = min_feedback_arc_weight(graph)
            assert weight == exact
            assert graph.back_edge_weight(ordering) == weight
            for gamma in (0.0, exact - 0.5, exact, exact + 0.5, exact + 2.0):
                if gamma < 0:
                    continue
                fas = graph.model_copy(update={"gamma": gamma})
                assert decide_nsq(fas_to_instance(fas)).feasible == (exact <= gamma)


class TestSolve:
    def test_reports_cost_and_schedule(self):
        instance = Instance(
            n=2, alpha=(0.1, 0.2), beta=0.9, bounds={"ndim": [0.0, 0.05]}, s0=0, smax=1
        )
        verdict = solve(instance)
        assert verdict.feasible
        data = verdict.to_json_dict()
        assert set(data) == {"feasible", "pi", "delta", "cost"}
        assert data["cost"] == pytest.approx(equilibrium_cost(instance, verdict.outcome.pi))

    def test_pairwise_infeasible(self):
        instance = fas_to_instance(FasInstance(n=3, edges=UNIT_CYCLE, gamma=0.5))
        assert solve(instance).to_json_dict() == {"feasible": False}

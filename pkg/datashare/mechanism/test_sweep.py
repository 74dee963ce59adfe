import numpy as np

from datashare.mechanism import sweep
from datashare.mechanism.sweep import agreement_sweep, random_instance


def test_random_instance_is_valid():
    rng = np.random.default_rng(3)
    for n in range(1, 8):
        instance = random_instance(rng, n)
        assert instance.n == n
        assert instance.s0 <= instance.smax


def test_sweep_is_reproducible():
    first = agreement_sweep(40, seed=17, max_n=5, workers=4)
    second = agreement_sweep(40, seed=17, max_n=5, workers=1)
    assert first == second
    assert first.instances == 40
    assert first.disagreements == ()


def test_sweep_reports_disagreements(mocker):
    mocker.patch.object(sweep, "brute_force_equilibrium", return_value=None)
    mocker.patch.object(sweep, "share_data", return_value=object())
    report = agreement_sweep(3, seed=0, max_n=3)
    assert report.disagreements == (0, 1, 2)
    assert report.feasible == 0


def test_random_instances_cover_the_sampled_ranges():
    rng = np.random.default_rng(8)
    instances = [random_instance(rng, 4) for _ in range(200)]
    assert {instance.beta for instance in instances} == set(sweep.BETAS)
    for instance in instances:
        assert all(0 <= a <= 1 for a in instance.alpha)
        assert all(0 <= m <= 1 for m in instance.bounds.mu)
    assert max(m for instance in instances for m in instance.bounds.mu) > 0.5

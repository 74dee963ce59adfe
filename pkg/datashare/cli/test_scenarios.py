import pytest

from datashare.cli.scenarios import SCENARIOS, load_scenario, scenario_run
from datashare.errors import InvalidInputError


class TestLoadScenario:
    @pytest.mark.parametrize("name", SCENARIOS)
    def test_every_fixture_loads(self, name):
        assert load_scenario(name).name == name

    def test_overrides(self):
        scenario = load_scenario("gaussian_mean", {"counts": [1, 1], "beta": 0.5})
        assert scenario.params["counts"] == [1, 1]
        assert scenario.beta == 0.5

    def test_unknown_name(self):
        with pytest.raises(InvalidInputError):
            load_scenario("coin_flip")


class TestScenarioRun:
    @pytest.mark.parametrize("name", SCENARIOS)
    def test_matches_expected_feasibility(self, name):
        report = scenario_run(name)
        assert report.feasible == report.expected_feasible

    def test_infeasible_scenario_skips_the_protocol(self):
        report = scenario_run("gaussian_mean")
        assert report.protocol is None
        assert report.transcript is None
        assert "transcript" not in report.to_json_dict()

    def test_xor_secret_delivers_each_score(self):
        report = scenario_run("xor_secret", seed=3)
        assert report.equilibrium
        assert report.protocol["ordered_delivery"] and report.protocol["prefix_fair"]
        delta = report.verdict["delta"]
        assert report.received_scores == {
            party: pytest.approx(delta[party], abs=1e-6) for party in range(4)
        }

    def test_rewards_cover_every_position(self):
        report = scenario_run("path_flow_diamond")
        assert report.equilibrium
        assert len(report.rewards) == 4
        assert all(r >= 0 for r in report.rewards)

    def test_gene_loci_scores(self):
        report = scenario_run("gene_loci")
        delta = report.verdict["delta"]
        for party, score in report.received_scores.items():
            assert score == pytest.approx(delta[party], abs=1e-6)

    def test_same_seed_same_report(self):
        assert scenario_run("xor_secret", seed=9).to_json_dict() == scenario_run(
            "xor_secret", seed=9
        ).to_json_dict()

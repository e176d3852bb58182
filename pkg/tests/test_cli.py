import json
import subprocess
import sys
from pathlib import Path

import pytest

from rankrobust import ScenarioError
from rankrobust.cli import main, parse_panel, parse_scenario

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestParseScenario:
    def test_two_state_fixture(self):
        v = parse_scenario(str(FIXTURES / "two_state.json"))
        assert v.n_states == 2
        assert v.state_ids == ("calm", "storm")

    def test_probability_sum_violation_names_state(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"states": {"windy": {"probs": [0.5, 0.49], "payoffs": [0, 1]}}}))
        with pytest.raises(ScenarioError) as err:
            parse_scenario(str(bad))
        assert "windy" in str(err.value)

    def test_ragged_outcomes_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"states": {
            "a": {"probs": [1.0], "payoffs": [0]},
            "b": {"probs": [0.5, 0.5], "payoffs": [0, 1]},
        }}))
        with pytest.raises(ScenarioError) as err:
            parse_scenario(str(bad))
        assert "'b'" in str(err.value)

    def test_ellsberg_fixture_dimensions(self):
        v = parse_scenario(str(FIXTURES / "ellsberg_urn_a.json"))
        assert v.n_states == 546  # 26 urn-A compositions x 21 urn-C compositions
        assert v.n_outcomes == 25

    def test_missing_file(self):
        with pytest.raises(ScenarioError):
            parse_scenario("no/such/file.json")


class TestParsePanel:
    def test_hedge_fixture(self):
        panel = parse_panel(str(FIXTURES / "panel_hedge.csv"))
        assert panel.assets == ("asset_1", "asset_2")
        assert panel.returns.shape == (1, 2, 2)

    def test_bad_header(self, tmp_path):
        bad = tmp_path / "p.csv"
        bad.write_text("who,prob,outcome,a\nw,1.0,x,0.1\n")
        with pytest.raises(ScenarioError):
            parse_panel(str(bad))

    def test_per_state_probability_sums(self, tmp_path):
        bad = tmp_path / "p.csv"
        bad.write_text("state,prob,outcome,a\nw,0.6,x,0.1\nw,0.6,y,0.2\n")
        with pytest.raises(ScenarioError) as err:
            parse_panel(str(bad))
        assert "'w'" in str(err.value)


class TestCommands:
    def test_demo_prints_values_and_passes(self, capsys):
        code, out, _ = run_cli(capsys, "demo", "ellsberg")
        assert code == 0
        assert "U(urn_a) = 0" in out
        assert "U(urn_c) = 20" in out
        assert "U(urn_a + urn_b) = 100" in out
        assert "U(urn_c + urn_b) = 20" in out
        assert "PASS" in out

    def test_evaluate_single_state_square_distortion(self, capsys):
        code, out, _ = run_cli(
            capsys, "evaluate",
            "--scenario", str(FIXTURES / "single_state.json"),
            "--distortion", "power:2",
            "--penalty", "maxmin:vertices",
            "--output", "json",
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["value_utils"] == pytest.approx(9.0, abs=1e-9)
        # the resolved triple is echoed so the run is self-describing
        assert report["preference"]["distortion"] == "power:2"

    def test_ce_command(self, capsys):
        code, out, _ = run_cli(
            capsys, "ce",
            "--scenario", str(FIXTURES / "single_state.json"),
            "--penalty", "maxmin:vertices",
            "--output", "json",
        )
        assert code == 0
        assert json.loads(out)["result"]["certainty_equivalent"] == pytest.approx(30.0)

    def test_compare_self_is_indifferent(self, capsys):
        code, out, _ = run_cli(
            capsys, "compare",
            "--scenario", str(FIXTURES / "two_state.json"),
            "--scenario2", str(FIXTURES / "two_state.json"),
            "--penalty", "entropic:1@uniform",
            "--output", "json",
        )
        assert code == 0
        assert json.loads(out)["result"]["relation"] == "~"

    def test_dominance_command(self, capsys):
        code, out, _ = run_cli(
            capsys, "dominance",
            "--scenario", str(FIXTURES / "single_state.json"),
            "--scenario2", str(FIXTURES / "single_state_spread.json"),
            "--order", "ssd",
            "--output", "json",
        )
        assert code == 0
        assert json.loads(out)["result"]["order"] == "ssd"

    def test_dominance_phissd_uses_utility(self, capsys):
        code, out, _ = run_cli(
            capsys, "dominance",
            "--scenario", str(FIXTURES / "single_state.json"),
            "--scenario2", str(FIXTURES / "single_state.json"),
            "--order", "phissd",
            "--utility", "pwl:0,0;50,10;100,12",
            "--output", "json",
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["relation"] == "equal"
        assert report["utility"].startswith("pwl:")

    def test_battery_violations_exit_three(self, capsys, monkeypatch):
        import rankrobust.cli as cli_mod

        def fake_reductions(pref, spec):
            return {
                "expectation_reduction": {"max_error": 1.0, "violations": [0]},
                "affine_equivariance": {"max_error": 0.0, "violations": []},
                "maxmin_reduction": {"max_error": 0.0, "violations": []},
                "single_state_rdu": {"max_error": 0.0, "violations": []},
                "passed": False,
                "seed": spec.seed,
            }

        monkeypatch.setattr(cli_mod, "reduction_suite", fake_reductions)
        code, out, _ = run_cli(
            capsys, "battery",
            "--penalty", "entropic:1@w0=0.5,w1=0.5",
            "--cases", "5",
            "--output", "json",
        )
        assert code == 3
        assert json.loads(out)["result"]["total_violations"] == 1

    def test_cmin_command(self, capsys):
        code, out, _ = run_cli(
            capsys, "cmin",
            "--penalty", "entropic:1@a=0.5,b=0.5",
            "--prior", "a=0.7,b=0.3",
            "--grid=-4,4,0.05",
            "--output", "json",
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["dual_lower_bound"] <= report["result"]["direct_penalty"] + 1e-12
        assert report["result"]["gap"] < 5e-3

    def test_battery_command_green(self, capsys):
        code, out, _ = run_cli(
            capsys, "battery",
            "--penalty", "entropic:1@w0=0.5,w1=0.5",
            "--cases", "25",
            "--seed", "7",
            "--output", "json",
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["total_violations"] == 0

    def test_portfolio_command(self, capsys):
        code, out, _ = run_cli(
            capsys, "portfolio",
            "--scenario", str(FIXTURES / "panel_hedge.csv"),
            "--penalty", "maxmin:w0=1",
            "--distortion", "es:0.5",
            "--mean-prior", "uniform",
            "--budget", "500",
            "--output", "json",
        )
        assert code == 0
        report = json.loads(out)
        assert report["result"]["weights"] == pytest.approx([0.5, 0.5], abs=1e-4)

    def test_validation_failure_exit_code(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"states": {"w": {"probs": [0.9, 0.2], "payoffs": [0, 1]}}}))
        code, _, err = run_cli(
            capsys, "evaluate", "--scenario", str(bad), "--penalty", "maxmin:vertices"
        )
        assert code == 2
        assert "error" in err

    def test_non_numeric_payload_exit_code(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"states": {"w": {"probs": [1.0], "payoffs": ["plenty"]}}}))
        code, _, err = run_cli(
            capsys, "evaluate", "--scenario", str(bad), "--penalty", "maxmin:vertices"
        )
        assert code == 2
        assert "error" in err

    def test_bad_spec_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "evaluate",
            "--scenario", str(FIXTURES / "single_state.json"),
            "--penalty", "nonsense:1",
        )
        assert code == 2
        assert "nonsense" in err


class TestDeterminism:
    def test_json_reports_round_trip(self, capsys):
        _, out, _ = run_cli(
            capsys, "evaluate",
            "--scenario", str(FIXTURES / "two_state.json"),
            "--penalty", "gini:0.5@uniform",
            "--output", "json",
        )
        report = json.loads(out)
        assert json.loads(json.dumps(report)) == report

    def test_repeated_in_process_runs_identical(self, capsys):
        argv = [
            "evaluate",
            "--scenario", str(FIXTURES / "two_state.json"),
            "--penalty", "entropic:1@uniform",
            "--distortion", "tk:0.61",
            "--seed", "42",
            "--output", "json",
        ]
        _, first, _ = run_cli(capsys, *argv)
        _, second, _ = run_cli(capsys, *argv)
        assert first == second

    def test_subprocess_runs_byte_identical(self):
        argv = [
            sys.executable, "-m", "rankrobust", "battery",
            "--penalty", "entropic:1@w0=0.5,w1=0.5",
            "--cases", "10",
            "--seed", "3",
            "--output", "json",
        ]
        first = subprocess.run(argv, capture_output=True, check=True)
        second = subprocess.run(argv, capture_output=True, check=True)
        assert first.stdout == second.stdout
        assert first.stdout.strip()

"""Strict scenario parsing, validation diagnostics, and the CLI surface."""

import json

import pytest

from rdvsim.cli import main
from rdvsim.config import (
    BUILTIN_SCENARIOS,
    ScenarioConfig,
    config_from_dict,
    load_scenario,
    validate,
)
from rdvsim.errors import ConfigurationError


class TestConfig:
    def test_defaults_validate(self):
        assert validate(ScenarioConfig()) == []

    def test_unknown_section_rejected_by_name(self):
        with pytest.raises(ConfigurationError, match="bogus: unknown section"):
            config_from_dict({"bogus": {}})

    def test_unknown_field_rejected_with_path(self):
        with pytest.raises(ConfigurationError, match=r"mission\.warp: unknown field"):
            config_from_dict({"mission": {"warp": 9}})

    def test_range_violation_names_the_field(self):
        with pytest.raises(ConfigurationError, match=r"mission\.t_c: must be > 0"):
            config_from_dict({"mission": {"t_c": -1.0}})

    def test_all_errors_reported_at_once(self):
        with pytest.raises(ConfigurationError) as err:
            config_from_dict(
                {"mission": {"t_c": -1.0}, "energy": {"mass": 0.0}}
            )
        message = str(err.value)
        assert "mission.t_c" in message and "energy.mass" in message

    def test_builtin_scenarios_all_load(self):
        for name in BUILTIN_SCENARIOS:
            config = load_scenario(name)
            assert validate(config) == []

    def test_unknown_builtin_name(self):
        with pytest.raises(ConfigurationError, match="unknown scenario"):
            load_scenario("no_such_scenario")

    def test_missing_file(self):
        with pytest.raises(ConfigurationError, match="not found"):
            load_scenario("does/not/exist.yaml")

    def test_load_from_yaml_file(self, tmp_path):
        f = tmp_path / "custom.yaml"
        f.write_text("driver:\n  gain: 1.25\nrun:\n  seed: 9\n")
        config = load_scenario(f)
        assert config.driver.gain == 1.25
        assert config.run.seed == 9
        # untouched sections keep their defaults
        assert config.mission.t_max == ScenarioConfig().mission.t_max

    def test_derived_position_sigma(self):
        config = config_from_dict({"sensors": {"velocity_sigma": 4.0}})
        assert config.position_sigma == pytest.approx(0.4)
        explicit = config_from_dict({"sensors": {"position_sigma": 0.05}})
        assert explicit.position_sigma == 0.05

    def test_regression_noise_defaults_to_sensor_sigma(self):
        config = config_from_dict({"sensors": {"velocity_sigma": 3.0}})
        assert config.regression_noise_var == pytest.approx(9.0)
        override = config_from_dict({"learner": {"noise_sigma": 0.5}})
        assert override.regression_noise_var == pytest.approx(0.25)

    def test_risk_budget_modes(self):
        const = config_from_dict({"risk": {"e_risk_max": 150.0}})
        assert const.risk_budget(1e4) == 150.0
        frac = config_from_dict(
            {"risk": {"e_risk_mode": "fraction", "e_risk_fraction": 0.1}}
        )
        assert frac.risk_budget(1e4) == pytest.approx(1000.0)

    def test_speed_fraction_bounds(self):
        with pytest.raises(ConfigurationError, match="speed_fraction"):
            config_from_dict({"mission": {"speed_fraction": 1.5}})


class TestCli:
    def test_validate_builtin(self, capsys):
        assert main(["validate", "--scenario", "low_risk"]) == 0
        assert "valid" in capsys.readouterr().out

    def test_validate_bad_file_exits_1(self, tmp_path, capsys):
        f = tmp_path / "bad.yaml"
        f.write_text("mission:\n  t_c: -3\n")
        assert main(["validate", "--scenario", str(f)]) == 1
        assert "error: config:" in capsys.readouterr().err

    def test_run_writes_trace_and_summary(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(
            [
                "run",
                "--scenario",
                "exact_model",
                "--seed",
                "0",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert (out / "trace_seed0.csv").exists()
        assert (out / "trace_seed0.timings.csv").exists()
        summary = json.loads((out / "trace_seed0.summary.json").read_text())
        assert summary["summary"]["phase"] == "COMPLETED_SUCCESS"
        assert "COMPLETED_SUCCESS" in capsys.readouterr().out

    def test_run_jsonl_format(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            [
                "run",
                "--scenario",
                "exact_model",
                "--out",
                str(out),
                "--log-format",
                "jsonl",
            ]
        )
        assert code == 0
        lines = (out / "trace_seed0.jsonl").read_text().splitlines()
        kinds = [json.loads(line)["type"] for line in lines]
        assert kinds[0] == "header" and kinds[-1] == "summary"
        assert kinds.count("row") == len(lines) - 2

    def test_batch_aggregates(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(
            [
                "batch",
                "--scenario",
                "exact_model",
                "--seeds",
                "0..1",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        table = (out / "batch_summary.csv").read_text().splitlines()
        assert table[0].startswith("seed,phase")
        assert len(table) == 3
        assert "COMPLETED_SUCCESS=2" in capsys.readouterr().out

    def test_plotdata_panels(self, tmp_path):
        out = tmp_path / "out"
        assert (
            main(["run", "--scenario", "exact_model", "--out", str(out)]) == 0
        )
        panels = tmp_path / "panels"
        code = main(
            [
                "plotdata",
                "--trace",
                str(out / "trace_seed0.csv"),
                "--out",
                str(panels),
            ]
        )
        assert code == 0
        for name in (
            "energy_segments.csv",
            "energy_reserve.csv",
            "risk.csv",
            "distance.csv",
        ):
            assert (panels / name).exists()

    def test_unknown_scenario_exits_1(self, capsys):
        assert main(["run", "--scenario", "nope"]) == 1
        assert "error: config:" in capsys.readouterr().err

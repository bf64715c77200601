"""
Tests for the command line front end.
"""

import json
import os
import textwrap

import pytest
from click.testing import CliRunner

from src.cli import EXIT_ACCEPTANCE, EXIT_OK, EXIT_USAGE, cli, run, validate

COUNT_ARGS = ["count", "--r-max", "128", "--two-squares-max", "1000", "--parity-r-max", "50", "--delta-grid", "2", "--max-exponent", "1.0"]


@pytest.fixture
def runner():
    return CliRunner()


def _report_dir(base):
    (name,) = os.listdir(base)
    return os.path.join(base, name)


class TestCommands:
    """Experiment commands end to end on small truncations."""

    def test_count(self, runner, tmp_path):
        result = runner.invoke(cli, ["--output", str(tmp_path)] + COUNT_ARGS)
        assert result.exit_code == EXIT_OK, result.output
        report_dir = _report_dir(tmp_path)
        assert os.path.basename(report_dir).startswith("count-")
        assert sorted(os.listdir(report_dir)) == ["counts.csv", "summary.json"]
        with open(os.path.join(report_dir, "summary.json"), encoding="utf-8") as f:
            summary = json.load(f)
        assert summary["two_squares_mismatches"] == 0
        assert summary["parity_failures"] == 0
        assert summary["dyadic_failures"] == 0

    def test_outputs_are_reproducible(self, runner, tmp_path):
        for name in ("a", "b"):
            result = runner.invoke(cli, ["--output", str(tmp_path / name), "--threads", "1"] + COUNT_ARGS)
            assert result.exit_code == EXIT_OK
        first, second = _report_dir(tmp_path / "a"), _report_dir(tmp_path / "b")
        assert os.path.basename(first) == os.path.basename(second)
        for file_name in ("counts.csv", "summary.json"):
            with open(os.path.join(first, file_name), "rb") as f, open(os.path.join(second, file_name), "rb") as g:
                assert f.read() == g.read()

    def test_resonance(self, runner, tmp_path):
        args = ["--output", str(tmp_path), "resonance", "--alpha", "2,3.5", "--kmax", "4", "--etamax", "3",
                "--factorization-K", "2", "--factorization-M", "3"]
        result = runner.invoke(cli, args)
        assert result.exit_code == EXIT_OK, result.output
        assert os.path.exists(os.path.join(_report_dir(tmp_path), "resonance.csv"))

    def test_norms_with_weights(self, runner, tmp_path):
        args = ["--output", str(tmp_path), "norms", "--K", "2", "--M", "2", "--J", "2", "--dump-weights", "true"]
        result = runner.invoke(cli, args)
        assert result.exit_code == EXIT_OK, result.output
        assert "xsb" in result.output
        assert os.path.exists(os.path.join(_report_dir(tmp_path), "weights.csv"))

    def test_probe(self, make_config):
        config = make_config("probe", case="meps", budget=2, K=2, M=2, J=2)
        assert run(config) == EXIT_OK

    def test_sweep_in_falsification_mode_reports_only(self, make_config, tmp_path):
        config = make_config(
            "sweep", case="bil", sizes=[2, 3], budget=2, overrides={"s1": 0.2, "s2": 0.2}, falsification=True
        )
        assert run(config) == EXIT_OK
        with open(os.path.join(_report_dir(tmp_path / "reports"), "summary.json"), encoding="utf-8") as f:
            summary = json.load(f)
        assert summary["slope_gap"] == pytest.approx(summary["slope"] - summary["preset_slope"])

    def test_picard(self, make_config, capsys):
        config = make_config("picard", K=4, M=4, depth=3, T=0.02)
        assert run(config) == EXIT_OK
        assert "Picard ratios strictly decreasing" in capsys.readouterr().out

    def test_picard_divergence_is_an_acceptance_failure(self, make_config):
        config = make_config("picard", K=4, M=4, depth=3, T=0.5, amplitude=300.0)
        assert run(config) == EXIT_ACCEPTANCE

    def test_solve(self, make_config):
        config = make_config("solve", K=4, M=4, dt=1e-3, t_end=0.02, save_every=10)
        assert run(config) == EXIT_OK


class TestUsageErrors:
    """Invalid configurations exit with code 1."""

    def test_out_of_range_parameter(self, runner, tmp_path):
        result = runner.invoke(cli, ["--output", str(tmp_path), "count", "--r-max", "10"])
        assert result.exit_code == EXIT_USAGE
        assert "r_max" in result.output

    def test_violated_hypothesis_outside_falsification(self, runner, tmp_path):
        args = ["--output", str(tmp_path), "probe", "--case", "bil", "--override", "s1=0.2", "--override", "s2=0.2"]
        result = runner.invoke(cli, args)
        assert result.exit_code == EXIT_USAGE
        assert "requires s1 + s2 > 1" in result.output

    def test_unknown_case(self, make_config):
        assert run(make_config("probe", case="nope")) == EXIT_USAGE

    def test_bad_override_syntax(self, runner, tmp_path):
        result = runner.invoke(cli, ["--output", str(tmp_path), "probe", "--override", "s1"])
        assert result.exit_code != EXIT_OK

    def test_unstable_step(self, make_config):
        config = make_config("solve", K=8, M=8, dt=0.01, amplitude=100.0)
        assert run(config) == EXIT_USAGE


class TestConfigFiles:
    """Runs described by a YAML file."""

    def _write(self, tmp_path):
        path = tmp_path / "count.yaml"
        path.write_text(
            textwrap.dedent(
                f"""
                run:
                  command: count
                  output: '{tmp_path / "reports"}'

                parameters:
                  r_max: 128
                  two_squares_max: 1000
                  parity_r_max: 50
                  delta_grid: 2
                  max_exponent: 1.0
                """
            ),
            encoding="utf-8",
        )
        return str(path)

    def test_run_from_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["--config", self._write(tmp_path), "count"])
        assert result.exit_code == EXIT_OK, result.output
        assert _report_dir(tmp_path / "reports")

    def test_flags_override_the_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["--config", self._write(tmp_path), "count", "--r-max", "10"])
        assert result.exit_code == EXIT_USAGE

    def test_command_mismatch(self, runner, tmp_path):
        result = runner.invoke(cli, ["--config", self._write(tmp_path), "norms"])
        assert result.exit_code == EXIT_USAGE


class TestValidate:
    """Diagnostics without running."""

    def test_validate_lists_violations(self, runner):
        result = runner.invoke(cli, ["validate", "--case", "bil", "--override", "s1=0.2", "--override", "s2=0.2"])
        assert result.exit_code == EXIT_OK
        assert "requires s1 + s2 > 1" in result.output

    def test_valid_configuration(self, runner):
        result = runner.invoke(cli, ["validate", "--case", "meps"])
        assert result.exit_code == EXIT_OK
        assert "Configuration is valid" in result.output

    def test_validate_function(self, make_config):
        assert validate(make_config("count")) == []
        assert validate(make_config("count", r_max=1)) == ["r_max: Input should be greater than or equal to 100"]
        assert validate(make_config("sweep", case="nope")) == ["case: unknown probe case 'nope'"]

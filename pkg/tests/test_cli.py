"""Tests for ou_sector.cli."""

import json

import pytest
from click.testing import CliRunner

from ou_sector.cli import cli


@pytest.fixture
def invoke(tmp_path, monkeypatch):
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.chdir(tmp_path)
    for name in ("OU_SECTOR_SEED", "OU_SECTOR_SAMPLES", "OU_SECTOR_OUT"):
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    runner = CliRunner()

    def _invoke(*args):
        return runner.invoke(cli, list(args), catch_exceptions=False)

    return _invoke


class TestModelCommand:
    def test_json(self, invoke):
        result = invoke("-j", "model", "--alpha", "0.5", "--p", "2,4")
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["gamma"] == pytest.approx(0.5)
        assert data["sector"]["2"]["C_theta"] == pytest.approx(0.5)
        assert set(data["sector"]) == {"2", "4"}

    def test_human(self, invoke):
        result = invoke("model", "--model", "selfadjoint")
        assert result.exit_code == 0
        assert "Sector angles" in result.output

    def test_config_file(self, invoke, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text('[model]\nA = [[-1.0, 0.0], [0.0, -2.0]]\nQ = [[2.0, 0.0], [0.0, 4.0]]\n')
        result = invoke("-j", "model", "--config", str(path))
        assert result.exit_code == 0, result.output
        assert json.loads(result.stdout)["gamma"] == pytest.approx(0.0, abs=1e-12)


class TestErrors:
    def test_bad_p_in_config(self, invoke, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text('[model]\nbuiltin = "rotation"\n\n[run]\np = [1.0]\n')
        result = invoke("model", "--config", str(path))
        assert result.exit_code == 2
        assert "p must exceed 1" in result.output

    def test_bad_p_flag(self, invoke):
        result = invoke("model", "--p", "0.5")
        assert result.exit_code == 2
        assert "p must exceed 1" in result.output

    def test_format_needs_output_dir(self, invoke):
        result = invoke("model", "--format", "json")
        assert result.exit_code == 2
        assert "--out" in result.output

    def test_bad_environment(self, invoke, monkeypatch):
        monkeypatch.setenv("OU_SECTOR_SAMPLES", "many")
        result = invoke("model")
        assert result.exit_code == 2
        assert "OU_SECTOR_SAMPLES" in result.output


class TestOutputs:
    def test_out_and_format(self, invoke, tmp_path):
        out = tmp_path / "runs"
        result = invoke("-j", "model", "--out", str(out), "--format", "csv")
        assert result.exit_code == 0, result.output
        (index,) = out.glob("index.json")
        (run_file,) = out.glob("*/run-0001.json")
        assert json.loads(run_file.read_text())["schema_version"] == 1
        assert (run_file.with_suffix("") / "checks.csv").exists()
        assert json.loads(index.read_text())

    def test_out_from_environment(self, invoke, tmp_path, monkeypatch):
        monkeypatch.setenv("OU_SECTOR_OUT", str(tmp_path / "env-runs"))
        result = invoke("-p", "model", "--seed", "3")
        assert result.exit_code == 0
        assert list((tmp_path / "env-runs").glob("*/run-0001.json"))

    def test_sector_plain(self, invoke):
        result = invoke("-p", "sector", "--samples", "2000", "--p", "2")
        assert result.exit_code == 0, result.output
        header = result.stdout.split("\n")[0]
        assert header.split("\t") == ["suite", "name", "passed", "residual", "margin"]

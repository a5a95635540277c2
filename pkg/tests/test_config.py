"""Tests for ou_sector.config."""

import numpy as np
import pytest

from ou_sector.config import (
    ExperimentConfig,
    RunDefaults,
    default_config,
    load_config,
    load_defaults,
    parse_config,
)
from ou_sector.errors import ConfigError

MINIMAL = """
[model]
builtin = "rotation"
alpha = 0.25
"""


class TestParseConfig:
    def test_minimal(self):
        cfg = parse_config(MINIMAL)
        assert cfg.model.alpha == 0.25
        assert cfg.run.p == [2.0]
        assert cfg.run.suites == ["model", "forms", "sector", "wiener"]
        assert cfg.tolerances.sigmas == 3.0

    def test_explicit_matrices(self):
        cfg = parse_config(
            """
[model]
A = [[-1.0, 0.5], [-0.5, -1.0]]
Q = [[2.0, 0.0], [0.0, 2.0]]

[weight]
kind = "quadratic"
M = [[1.0, 0.0], [0.0, 1.0]]
"""
        )
        m = cfg.build_model()
        np.testing.assert_allclose(m.Q_inf, np.eye(2), atol=1e-12)
        assert cfg.build_weight(m).certificate == "quadratic"

    def test_wiener_modes(self):
        cfg = parse_config("[model]\nwiener_modes = 3\n")
        m = cfg.build_model()
        assert m.dim == 3
        assert np.trace(m.Q_inf) < 1.0 / 60.0

    def test_p_must_exceed_one(self):
        text = MINIMAL + "\n[run]\np = [1.0]\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        (message,) = exc.value.messages
        assert "p must exceed 1" in message
        assert message.startswith("run.p (line 7)")

    def test_unstable_drift(self):
        text = "[model]\nA = [[1.0, 0.0], [0.0, -1.0]]\nQ = [[1.0, 0.0], [0.0, 1.0]]\n"
        with pytest.raises(ConfigError, match="eigenvalue 1"):
            parse_config(text)

    def test_indefinite_q(self):
        text = "[model]\nA = [[-1.0, 0.0], [0.0, -1.0]]\nQ = [[1.0, 0.0], [0.0, -1.0]]\n"
        with pytest.raises(ConfigError, match="positive definite"):
            parse_config(text)

    def test_all_problems_reported(self):
        text = MINIMAL + "\nbogus = 1\n[run]\np = [0.5]\nsamples = 10\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert len(exc.value.messages) == 3

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="Extra inputs"):
            parse_config(MINIMAL + "colour = 'blue'\n")

    def test_one_model_source(self):
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config('[model]\nbuiltin = "rotation"\nwiener_modes = 4\n')
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config("[model]\n")

    def test_weight_dimension_mismatch(self):
        text = MINIMAL + '\n[weight]\nkind = "logcosh"\nb = [1.0, 2.0, 3.0]\n'
        with pytest.raises(ConfigError, match="dimension mismatch"):
            parse_config(text)

    def test_weight_needs_data(self):
        with pytest.raises(ConfigError, match="needs M"):
            parse_config(MINIMAL + '\n[weight]\nkind = "quadratic"\n')

    def test_syntax_error(self):
        with pytest.raises(ConfigError, match="syntax"):
            parse_config("[model\nbuiltin = 1")

    def test_defaults_fill_run(self):
        cfg = parse_config(MINIMAL, RunDefaults(seed=7, samples=5000))
        assert (cfg.run.seed, cfg.run.samples) == (7, 5000)

    def test_file_values_beat_defaults(self):
        cfg = parse_config(MINIMAL + "\n[run]\nseed = 2\n", RunDefaults(seed=7))
        assert cfg.run.seed == 2

    def test_load_config(self, tmp_path):
        path = tmp_path / "exp.toml"
        path.write_text(MINIMAL)
        assert load_config(path).model.builtin == "rotation"


class TestDefaultConfig:
    def test_builtin(self):
        cfg = default_config("diagonal", RunDefaults(seed=4))
        assert cfg.model.builtin == "diagonal"
        assert cfg.run.seed == 4
        assert isinstance(cfg, ExperimentConfig)

    def test_unknown_builtin(self):
        with pytest.raises(ConfigError):
            default_config("circle")


class TestLoadDefaults:
    @pytest.fixture(autouse=True)
    def isolated(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HOME", str(tmp_path))
        monkeypatch.chdir(tmp_path)
        for name in ("OU_SECTOR_SEED", "OU_SECTOR_SAMPLES", "OU_SECTOR_OUT"):
            # setenv first so teardown also drops values loaded from .env files
            monkeypatch.setenv(name, "")
            monkeypatch.delenv(name)

    def test_builtin_defaults(self):
        assert load_defaults() == RunDefaults()

    def test_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv("OU_SECTOR_SEED", "11")
        monkeypatch.setenv("OU_SECTOR_OUT", str(tmp_path / "runs"))
        d = load_defaults()
        assert d.seed == 11
        assert d.samples == 100_000
        assert d.out == tmp_path / "runs"

    def test_config_dir_env_file(self, tmp_path):
        env_dir = tmp_path / ".config" / "ou-sector"
        env_dir.mkdir(parents=True)
        (env_dir / ".env").write_text("OU_SECTOR_SAMPLES=2500\n")
        assert load_defaults().samples == 2500

    def test_bad_integer(self, monkeypatch):
        monkeypatch.setenv("OU_SECTOR_SEED", "seven")
        with pytest.raises(ConfigError, match="OU_SECTOR_SEED"):
            load_defaults()

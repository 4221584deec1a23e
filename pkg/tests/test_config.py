"""Tests for configuration loading."""

import json
from pathlib import Path

import pytest

from pianocover.config import (
    LossConfig,
    PostprocConfig,
    QmaxParams,
    Settings,
    ToyNetHyperParams,
    TrainConfig,
    load_config,
)
from pianocover.errors import ConfigError


class TestDefaults:
    def test_loss_defaults(self):
        config = LossConfig()
        assert (config.beta, config.theta_onset, config.theta_frame, config.theta_velocity) == (0.75, 0.07, 0.2, 0.01)

    def test_qmax_defaults(self):
        params = QmaxParams()
        assert (params.kappa, params.gamma_o, params.gamma_e, params.m_embed, params.tau_lag) == (0.095, 5.0, 0.5, 9, 1)

    def test_gate_width_defaults_to_z(self):
        assert ToyNetHyperParams(Z=16).gate_width == 16
        assert ToyNetHyperParams(Z=16, G=4).gate_width == 4

    def test_postproc_defaults(self):
        assert PostprocConfig().min_note_seconds == 0.08


class TestLoadConfig:
    def test_none_gives_defaults(self):
        assert load_config(None, TrainConfig) == TrainConfig()

    def test_partial_file(self, tmp_path: Path):
        path = tmp_path / "train.json"
        path.write_text(json.dumps({"lr": 0.01}))
        config = load_config(path, TrainConfig)

        assert config.lr == 0.01
        assert config.epochs == 300

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "nope.json", LossConfig)

    def test_invalid_json(self, tmp_path: Path):
        path = tmp_path / "bad.json"
        path.write_text("{beta: ")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path, LossConfig)

    def test_unknown_key_rejected(self, tmp_path: Path):
        path = tmp_path / "loss.json"
        path.write_text(json.dumps({"betta": 0.5}))
        with pytest.raises(ConfigError, match="betta"):
            load_config(path, LossConfig)

    def test_out_of_range(self, tmp_path: Path):
        path = tmp_path / "qmax.json"
        path.write_text(json.dumps({"kappa": 0.0}))
        with pytest.raises(ConfigError, match="kappa"):
            load_config(path, QmaxParams)


class TestSettings:
    def test_environment_override(self, monkeypatch):
        monkeypatch.setenv("PIANOCOVER_HOP_SECONDS", "0.02")
        monkeypatch.setenv("PIANOCOVER_FRAMES_PER_SEGMENT", "256")
        settings = Settings()

        assert settings.grid.hop_seconds == 0.02
        assert settings.grid.frames_per_segment == 256

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("PIANOCOVER_HOP_SECONDS", raising=False)
        settings = Settings(_env_file=None)
        assert settings.hop_seconds == 0.016
        assert settings.soft_onset_width == 3

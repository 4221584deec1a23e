"""Tests for checkpoint functionality."""

import json
from pathlib import Path

import numpy as np
import pytest

from pianocover.checkpoint import CheckpointManager, CheckpointManifest
from pianocover.config import ToyNetHyperParams
from pianocover.errors import ShapeError, TensorFormatError
from pianocover.toynet import ToyNetParams

SETTINGS = {"train": {"lr": 0.001, "epochs": 300}, "loss": {"beta": 0.75}}


@pytest.fixture
def params(tiny_hyper: ToyNetHyperParams) -> ToyNetParams:
    return ToyNetParams.init(tiny_hyper, seed=7)


class TestCheckpointManifest:
    """Tests for the manifest dataclass."""

    def test_to_dict_and_back(self):
        manifest = CheckpointManifest(
            version=1,
            hyper={"T": 8, "F": 2, "Z": 4, "G": 3, "F_in": 16},
            seed=7,
            use_style=True,
            config_hash="abc123",
            parameters=["enc1.W", "enc1.b"],
        )
        assert CheckpointManifest.from_dict(manifest.to_dict()) == manifest

    def test_parameters_default(self):
        data = {"version": 1, "hyper": {}, "seed": 0, "use_style": False, "config_hash": "x"}
        manifest = CheckpointManifest.from_dict(data)
        assert manifest.parameters == []
        assert manifest.settings == {}


class TestCheckpointManager:
    """Tests for saving and loading checkpoint directories."""

    def test_exists_false_initially(self, tmp_path: Path):
        assert not CheckpointManager(tmp_path / "ckpt").exists()

    def test_save_and_load(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path / "ckpt")
        manager.save(params, seed=7, settings=SETTINGS)
        loaded = manager.load()

        assert manager.exists()
        assert loaded.hyper == params.hyper
        assert loaded.use_style is True
        for name, array in params.arrays.items():
            assert np.allclose(loaded.arrays[name], array, atol=1e-6)
            assert loaded.arrays[name].dtype == np.float64

    def test_manifest_contents(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path / "ckpt")
        manager.save(params, seed=7, settings=SETTINGS)
        data = json.loads(manager.manifest_file.read_text())

        assert data["version"] == 1
        assert data["seed"] == 7
        assert data["hyper"]["Z"] == 4
        assert data["parameters"] == sorted(params.arrays)
        assert data["settings"] == SETTINGS
        assert (tmp_path / "ckpt" / "enc1.W.apct").exists()

    def test_bit_identical_saves(self, tmp_path: Path, params: ToyNetParams):
        """Saving the same weights twice writes identical bytes."""
        CheckpointManager(tmp_path / "a").save(params, seed=7, settings=SETTINGS)
        CheckpointManager(tmp_path / "b").save(params, seed=7, settings=SETTINGS)

        for path in sorted((tmp_path / "a").iterdir()):
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()

    def test_no_temp_files_left(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path / "ckpt")
        manager.save(params, seed=0)
        names = [p.name for p in (tmp_path / "ckpt").iterdir() if p.suffix == ".json"]
        assert names == ["manifest.json"]

    def test_settings_round_trip(self, tmp_path: Path, params: ToyNetParams):
        """Training and loss settings are readable back from the manifest."""
        manager = CheckpointManager(tmp_path / "ckpt")
        manager.save(params, seed=7, settings=SETTINGS)

        assert manager.load_manifest().settings == SETTINGS

    def test_load_missing(self, tmp_path: Path):
        with pytest.raises(FileNotFoundError):
            CheckpointManager(tmp_path).load()

    def test_load_corrupted_manifest(self, tmp_path: Path):
        (tmp_path / "manifest.json").write_text("not valid json {")
        with pytest.raises(ValueError, match="Corrupted"):
            CheckpointManager(tmp_path).load_manifest()

    def test_load_wrong_version(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path)
        manager.save(params, seed=0)
        data = json.loads(manager.manifest_file.read_text())
        data["version"] = 99
        manager.manifest_file.write_text(json.dumps(data))

        with pytest.raises(ValueError, match="Unsupported"):
            manager.load_manifest()

    def test_missing_parameter_file(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path)
        manager.save(params, seed=0)
        manager.param_path("dec2.vel_b").unlink()

        with pytest.raises(TensorFormatError):
            manager.load()

    def test_wrong_parameter_shape(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path)
        manager.save(params, seed=0)
        manifest = json.loads(manager.manifest_file.read_text())
        manifest["hyper"]["Z"] = 5
        manager.manifest_file.write_text(json.dumps(manifest))

        with pytest.raises(ShapeError):
            manager.load()

    def test_cleanup(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path / "ckpt")
        manager.save(params, seed=0)
        manager.cleanup()
        assert not (tmp_path / "ckpt").exists()


class TestVerify:
    """Tests for checkpoint verification."""

    def test_verify_no_checkpoint(self, tmp_path: Path):
        assert CheckpointManager(tmp_path).verify() == (False, "No checkpoint exists")

    def test_verify_valid(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path)
        manager.save(params, seed=0, settings=SETTINGS)
        assert manager.verify(SETTINGS) == (True, "Checkpoint is valid")

    def test_verify_settings_changed(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path)
        manager.save(params, seed=0, settings=SETTINGS)
        is_valid, message = manager.verify({"train": {"lr": 0.01}})

        assert not is_valid
        assert "changed" in message

    def test_verify_missing_files(self, tmp_path: Path, params: ToyNetParams):
        manager = CheckpointManager(tmp_path)
        manager.save(params, seed=0)
        manager.param_path("enc1.W").unlink()
        manager.param_path("enc1.b").unlink()

        assert manager.verify() == (False, "2 parameter file(s) missing")

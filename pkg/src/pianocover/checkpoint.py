"""Checkpoint directories for trained toy-network weights."""

import json
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ToyNetHyperParams
from .errors import ShapeError, TensorFormatError
from .tensor_io import load_tensor, save_tensor
from .toynet import ToyNetParams
from .utils import hash_settings


@dataclass
class CheckpointManifest:
    """Contents of manifest.json."""

    version: int
    hyper: dict
    seed: int
    use_style: bool
    config_hash: str
    parameters: list[str] = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "CheckpointManifest":
        """Create CheckpointManifest from a dictionary."""
        return cls(
            version=data["version"],
            hyper=data["hyper"],
            seed=data["seed"],
            use_style=data["use_style"],
            config_hash=data["config_hash"],
            parameters=data.get("parameters", []),
            settings=data.get("settings", {}),
        )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return asdict(self)


class CheckpointManager:
    """Reads and writes a checkpoint directory: one APCT file per parameter plus manifest.json."""

    VERSION = 1

    def __init__(self, checkpoint_dir: str | Path):
        """
        Initialize the checkpoint manager.

        Args:
            checkpoint_dir: Directory holding the checkpoint
        """
        self.checkpoint_dir = Path(checkpoint_dir)
        self.manifest_file = self.checkpoint_dir / "manifest.json"

    def exists(self) -> bool:
        """Check if a checkpoint manifest exists."""
        return self.manifest_file.exists()

    def param_path(self, name: str) -> Path:
        """Get the path for a parameter file, e.g. enc1.W.apct."""
        return self.checkpoint_dir / f"{name}.apct"

    def save(self, params: ToyNetParams, seed: int, settings: Optional[dict] = None) -> CheckpointManifest:
        """
        Write all parameters, then the manifest.

        Args:
            params: Network weights
            seed: Seed the weights were initialized/trained with
            settings: Training and loss settings, stored with their hash

        Returns:
            The manifest written
        """
        params.validate()
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)

        names = sorted(params.arrays)
        for name in names:
            save_tensor(self.param_path(name), params.arrays[name])

        manifest = CheckpointManifest(
            version=self.VERSION,
            hyper=params.hyper.model_dump(),
            seed=seed,
            use_style=params.use_style,
            config_hash=hash_settings(settings or {}),
            parameters=names,
            settings=settings or {},
        )
        self._write_manifest(manifest)
        return manifest

    def _write_manifest(self, manifest: CheckpointManifest) -> None:
        # Manifest last, so a complete manifest implies complete weights
        fd, temp_path = tempfile.mkstemp(dir=self.checkpoint_dir, suffix=".json")
        try:
            with os.fdopen(fd, "w") as f:
                json.dump(manifest.to_dict(), f, indent=2, sort_keys=True)
            os.replace(temp_path, self.manifest_file)
        except Exception:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
            raise

    def load_manifest(self) -> CheckpointManifest:
        """
        Load the manifest from disk.

        Raises:
            FileNotFoundError: If no checkpoint exists
            ValueError: If the manifest is invalid or corrupted
        """
        if not self.manifest_file.exists():
            raise FileNotFoundError(f"No checkpoint found at {self.checkpoint_dir}")

        try:
            with open(self.manifest_file, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Corrupted checkpoint manifest: {e}") from e

        if data.get("version") != self.VERSION:
            raise ValueError(
                f"Unsupported checkpoint version: {data.get('version')} (expected {self.VERSION})"
            )
        try:
            return CheckpointManifest.from_dict(data)
        except KeyError as e:
            raise ValueError(f"Checkpoint manifest missing key {e}") from e

    def load(self) -> ToyNetParams:
        """
        Load the weights named in the manifest.

        Raises:
            FileNotFoundError: If no checkpoint exists
            TensorFormatError: If a parameter file is missing or malformed
            ShapeError: If a parameter does not match the manifest hyperparameters
        """
        manifest = self.load_manifest()
        hyper = ToyNetHyperParams.model_validate(manifest.hyper)
        arrays = {}
        for name in manifest.parameters:
            path = self.param_path(name)
            if not path.exists():
                raise TensorFormatError(f"missing parameter file {path.name}")
            arrays[name] = load_tensor(path).astype(np.float64)

        params = ToyNetParams(hyper=hyper, arrays=arrays, use_style=manifest.use_style)
        params.validate()
        return params

    def verify(self, settings: Optional[dict] = None) -> tuple[bool, str]:
        """
        Check that the checkpoint is complete and was trained with `settings`.

        Returns:
            Tuple of (is_valid, message)
        """
        if not self.exists():
            return False, "No checkpoint exists"

        try:
            manifest = self.load_manifest()
        except (FileNotFoundError, ValueError) as e:
            return False, str(e)

        if settings is not None and hash_settings(settings) != manifest.config_hash:
            return False, "Training settings have changed"

        missing = [name for name in manifest.parameters if not self.param_path(name).exists()]
        if missing:
            return False, f"{len(missing)} parameter file(s) missing"

        try:
            self.load()
        except (TensorFormatError, ShapeError) as e:
            return False, str(e)
        return True, "Checkpoint is valid"

    def cleanup(self) -> None:
        """Remove the checkpoint directory and all its contents."""
        if self.checkpoint_dir.exists():
            shutil.rmtree(self.checkpoint_dir)

"""Configuration models and settings.

Numeric run configuration lives in JSON files validated by pydantic models, so
a run can be reproduced from its artifacts alone. Process-wide defaults come
from environment variables via pydantic-settings.
"""

import json
from functools import lru_cache
from pathlib import Path
from typing import Optional, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError
from .records import FrameGrid


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="PIANOCOVER_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str = "WARNING"

    # Piano-roll grid
    hop_seconds: float = 0.016  # 128 frames = 2.048 s
    frames_per_segment: int = 512
    soft_onset_width: int = 3

    @property
    def grid(self) -> FrameGrid:
        return FrameGrid(hop_seconds=self.hop_seconds, frames_per_segment=self.frames_per_segment)


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LossConfig(_StrictModel):
    """Hierarchy weighting and sparse-selection sampling rates."""

    beta: float = Field(default=0.75, ge=0.0, le=1.0)
    theta_onset: float = Field(default=0.07, ge=0.0, le=1.0)
    theta_frame: float = Field(default=0.2, ge=0.0, le=1.0)
    theta_velocity: float = Field(default=0.01, ge=0.0, le=1.0)
    rng_seed: int = 0


class TrainConfig(_StrictModel):
    """Optimizer settings for the toy network."""

    lr: float = Field(default=1e-2, ge=0.0)
    epochs: int = Field(default=300, ge=0)
    seed: int = 0
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    use_style: bool = True
    test_fraction: float = Field(default=0.0, ge=0.0, lt=1.0)  # held-out share of the dataset


class ToyNetHyperParams(_StrictModel):
    """Shapes of the toy two-hierarchy network."""

    T: int = Field(default=512, ge=1)
    F: int = Field(default=4, ge=1)
    Z: int = Field(default=32, ge=1)
    G: Optional[int] = Field(default=None, ge=1)  # defaults to Z
    F_in: int = Field(default=16, ge=1)

    @property
    def gate_width(self) -> int:
        return self.G if self.G is not None else self.Z


class PostprocConfig(_StrictModel):
    """Inference-time decoding and cleanup."""

    min_note_seconds: float = Field(default=0.08, ge=0.0)
    onset_threshold: float = Field(default=0.5, gt=0.0, lt=1.0)


class QmaxParams(_StrictModel):
    """Cross-recurrence and local-alignment parameters."""

    kappa: float = Field(default=0.095, gt=0.0, le=1.0)
    gamma_o: float = Field(default=5.0, ge=0.0)
    gamma_e: float = Field(default=0.5, ge=0.0)
    m_embed: int = Field(default=9, ge=1)
    tau_lag: int = Field(default=1, ge=1)


class SyntheticConfig(_StrictModel):
    """Shape of the synthetic original/cover generator."""

    min_notes: int = Field(default=6, ge=1)
    max_notes: int = Field(default=10, ge=1)
    min_note_frames: int = Field(default=16, ge=2)
    max_note_frames: int = Field(default=48, ge=2)
    lowest_pitch: int = Field(default=48, ge=21, le=96)
    highest_pitch: int = Field(default=72, ge=21, le=96)
    velocity_palette: list[int] = Field(default_factory=lambda: [60, 80, 100])
    doubling_levels: list[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0])
    velocity_scales: list[float] = Field(default_factory=lambda: [0.8, 1.0, 1.2])


ModelT = TypeVar("ModelT", bound=BaseModel)


def load_config(path: Optional[str | Path], model: type[ModelT]) -> ModelT:
    """
    Load a JSON config file into a pydantic model.

    Args:
        path: JSON file path, or None for the model defaults
        model: Config model class

    Returns:
        Validated config instance

    Raises:
        ConfigError: If the file is missing, not JSON, or fails validation
    """
    if path is None:
        return model()

    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")

    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return model.model_validate(data)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from e
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(f"{path}: {loc}: {first['msg']}") from e

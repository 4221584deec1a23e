"""WAV input for audio-side evaluation."""

import logging
from pathlib import Path

import numpy as np
import soundfile as sf

from ..errors import AudioError

logger = logging.getLogger(__name__)


def read_audio(path: str | Path) -> tuple[np.ndarray, int]:
    """
    Read a PCM WAV file as mono float64 samples.

    Stereo (or wider) files are averaged across channels.

    Returns:
        (samples, sample_rate)

    Raises:
        AudioError: If the file cannot be decoded
    """
    try:
        audio, sample_rate = sf.read(str(path), dtype="float64", always_2d=True)
    except RuntimeError as e:
        raise AudioError(f"cannot read {path}: {e}") from e

    if audio.shape[1] > 1:
        logger.debug("Averaging %d channels of %s", audio.shape[1], path)
    return audio.mean(axis=1), int(sample_rate)

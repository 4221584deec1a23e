"""Utility functions for the piano cover toolkit."""

import hashlib
import json
from pathlib import Path

import numpy as np
from scipy.special import expit
from scipy.special import softmax as _softmax


def hash_file(path: str | Path, chunk_size: int = 65536) -> str:
    """
    Compute SHA256 hash of file contents.

    Args:
        path: Path to the file to hash
        chunk_size: Size of chunks to read (default 64KB)

    Returns:
        Hexadecimal SHA256 hash string
    """
    sha256 = hashlib.sha256()
    with open(path, "rb") as f:
        while chunk := f.read(chunk_size):
            sha256.update(chunk)
    return sha256.hexdigest()


def hash_settings(settings: dict) -> str:
    """
    Hash a settings dictionary for comparison.

    Args:
        settings: Dictionary of settings to hash

    Returns:
        First 16 characters of SHA256 hash (sufficient for comparison)
    """
    settings_json = json.dumps(settings, sort_keys=True)
    return hashlib.sha256(settings_json.encode()).hexdigest()[:16]


def make_rng(seed: int, *streams: int) -> np.random.Generator:
    """Deterministic generator for `seed`, optionally split into sub-streams."""
    return np.random.default_rng(np.random.SeedSequence([seed, *streams]))


def format_time(seconds: float) -> str:
    """Format seconds as MM:SS.s for console tables."""
    minutes = int(seconds // 60)
    secs = seconds % 60
    return f"{minutes:02d}:{secs:04.1f}"


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    return expit(x)


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along `axis`."""
    return _softmax(x, axis=axis)

"""Synthetic original/cover pairs for desk-scale training."""

import json
import logging
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import SyntheticConfig
from .midi_io import parse_midi, write_midi
from .progress import ProgressCallback, ProgressUpdate
from .records import HIGHEST_PITCH, N_CHROMA, FrameGrid, MidiNote, StyleVector, SyntheticPair
from .roll import notes_to_tensors
from .style import extract_style_vector
from .tensor_io import load_roll, load_tensor, save_roll, save_tensor
from .utils import make_rng

logger = logging.getLogger(__name__)

PITCH_CLASS_WIDTH = 0.35
REGISTER_WIDTH = 0.5
ONSET_LEAK = 0.3  # share of a note's energy seen one frame before its onset


def _melody(rng: np.random.Generator, n_frames: int, config: SyntheticConfig, grid: FrameGrid) -> list[MidiNote]:
    """Monophonic note sequence quantized to the frame grid."""
    n_target = int(rng.integers(config.min_notes, config.max_notes + 1))
    cursor = int(rng.integers(1, 8))
    notes = []
    while len(notes) < n_target:
        length = int(rng.integers(config.min_note_frames, config.max_note_frames + 1))
        if cursor + length > n_frames:
            break
        pitch = int(rng.integers(config.lowest_pitch, config.highest_pitch + 1))
        velocity = int(rng.choice(config.velocity_palette))
        notes.append(
            MidiNote(grid.frame_time(cursor), grid.frame_time(cursor + length), pitch, velocity)
        )
        cursor += length + int(rng.integers(1, 9))
    return notes


def doubled_velocities(palette: Sequence[int], doubling: float) -> set[int]:
    """The loudest `doubling` share of the palette; notes at these velocities get an octave."""
    ranked = sorted(set(palette), reverse=True)
    return set(ranked[: math.floor(doubling * len(ranked) + 0.5)])


def arrange_cover(
    original: list[MidiNote],
    doubling: float,
    velocity_scale: float,
    palette: Optional[Sequence[int]] = None,
) -> list[MidiNote]:
    """
    Piano arrangement of a melody: scaled velocities plus octave doubling.

    Accents are doubled first: a note gets an octave when its velocity is in
    the loudest `doubling` share of `palette` (default: the melody's own
    velocities), so 0 doubles nothing and 1 doubles every note.
    """
    doubled = doubled_velocities(palette or [n.velocity for n in original], doubling)
    cover = []
    for note in original:
        velocity = int(np.clip(round(note.velocity * velocity_scale), 1, 127))
        cover.append(MidiNote(note.onset_time, note.offset_time, note.pitch, velocity))
        if note.velocity in doubled:
            octave = note.pitch + 12 if note.pitch + 12 <= HIGHEST_PITCH else note.pitch - 12
            cover.append(MidiNote(note.onset_time, note.offset_time, octave, velocity))
    cover.sort(key=lambda n: (n.onset_time, n.pitch))
    return cover


def render_features(
    notes: list[MidiNote],
    n_frames: int,
    n_features: int,
    grid: FrameGrid,
    soft_onset_width: int = 3,
) -> np.ndarray:
    """
    Pseudo-spectrogram of a note list.

    Channels: 12 pitch-class Gaussian bumps, (n_features - 13) register bumps
    and one broadband onset-transient channel. Energy scales with velocity and
    leaks into the frame preceding each onset. The transient has the shape of
    the soft onset target, max(0, 1 - d / soft_onset_width).
    """
    n_register = n_features - N_CHROMA - 1
    if n_register < 1:
        raise ValueError(f"n_features must be at least {N_CHROMA + 2}, got {n_features}")

    features = np.zeros((n_frames, n_features))
    classes = np.arange(N_CHROMA)
    registers = np.arange(n_register)
    rows = np.arange(n_frames)

    for note in notes:
        start = grid.frame_index(note.onset_time)
        end = max(start + 1, grid.end_frame(note.offset_time))

        circular = np.abs(classes - note.pitch % N_CHROMA)
        circular = np.minimum(circular, N_CHROMA - circular)
        chroma = np.exp(-0.5 * (circular / PITCH_CLASS_WIDTH) ** 2)
        position = (note.pitch - 21) / 87.0 * (n_register - 1)
        register = np.exp(-0.5 * ((registers - position) / REGISTER_WIDTH) ** 2)
        spectrum = np.concatenate([chroma, register]) * (note.velocity / 127.0)

        envelope = np.zeros(n_frames)
        envelope[max(start, 0) : min(end, n_frames)] = 1.0
        if 0 <= start - 1 < n_frames:
            envelope[start - 1] = max(envelope[start - 1], ONSET_LEAK)
        features[:, : N_CHROMA + n_register] += envelope[:, None] * spectrum

        transient = np.maximum(0.0, 1.0 - np.abs(rows - start) / soft_onset_width)
        features[:, -1] = np.maximum(features[:, -1], transient)

    return features


def gen_synthetic_dataset(
    n_pairs: int,
    seed: int,
    n_frames: int = 512,
    n_features: int = 16,
    grid: Optional[FrameGrid] = None,
    config: Optional[SyntheticConfig] = None,
    soft_onset_width: int = 3,
    progress_callback: Optional[ProgressCallback] = None,
) -> list[SyntheticPair]:
    """
    Generate deterministic (original features, cover target, style) pairs.

    Each pair draws one intensity level that sets both the share of notes
    doubled at the octave and the velocity scale of its cover; the style
    vector is extracted from the resulting cover notes.

    Args:
        n_pairs: Number of pairs (>= 1)
        seed: Dataset seed; pair i uses sub-stream i
        n_frames: Frames per example (T)
        n_features: Input feature width (F_in)
        grid: Frame grid (hop); its segment length is replaced by n_frames
        config: Generator settings
        soft_onset_width: Width of the soft onset targets
        progress_callback: Optional progress reporting

    Returns:
        List of SyntheticPair
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    config = config or SyntheticConfig()
    grid = FrameGrid(hop_seconds=(grid or FrameGrid()).hop_seconds, frames_per_segment=n_frames)
    n_levels = min(len(config.doubling_levels), len(config.velocity_scales))

    pairs = []
    for i in range(n_pairs):
        rng = make_rng(seed, i)
        level = int(rng.integers(n_levels))
        original = _melody(rng, n_frames, config, grid)
        if not original:
            raise ValueError("synthetic config leaves no room for a note; lower min_note_frames")
        cover = arrange_cover(
            original, config.doubling_levels[level], config.velocity_scales[level], config.velocity_palette
        )

        pairs.append(
            SyntheticPair(
                input_features=render_features(original, n_frames, n_features, grid, soft_onset_width),
                target=notes_to_tensors(cover, 0, grid, soft_onset_width),
                style=extract_style_vector(cover, grid),
                cover_notes=cover,
                original_notes=original,
                intensity=float(config.doubling_levels[level]),
            )
        )
        if progress_callback:
            progress_callback(
                ProgressUpdate(
                    stage="generating",
                    percent=100.0 * (i + 1) / n_pairs,
                    message=f"pair {i + 1}/{n_pairs}",
                )
            )
    logger.info("Generated %d synthetic pairs (seed %d)", n_pairs, seed)
    return pairs


def save_dataset(directory: str | Path, pairs: list[SyntheticPair], seed: Optional[int] = None) -> None:
    """
    Write pairs as pair_XXXX/ folders with features, target roll, style and MIDI.

    Args:
        directory: Output directory
        pairs: Pairs to write
        seed: Generation seed recorded in dataset.json
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for i, pair in enumerate(pairs):
        pair_dir = directory / f"pair_{i:04d}"
        pair_dir.mkdir(parents=True, exist_ok=True)
        save_tensor(pair_dir / "features.apct", pair.input_features)
        save_roll(pair_dir / "target", pair.target)
        (pair_dir / "style.json").write_text(pair.style.to_json(), encoding="utf-8")
        (pair_dir / "cover.mid").write_bytes(write_midi(pair.cover_notes))
        (pair_dir / "original.mid").write_bytes(write_midi(pair.original_notes))
        index.append({"name": pair_dir.name, "intensity": pair.intensity, "n_cover_notes": len(pair.cover_notes)})

    meta = {"version": 1, "seed": seed, "pairs": index}
    (directory / "dataset.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")


def load_dataset(directory: str | Path) -> list[SyntheticPair]:
    """Read pairs written by save_dataset, in index order."""
    directory = Path(directory)
    meta_path = directory / "dataset.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"No dataset.json in {directory}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    try:
        entries = [(entry["name"], entry.get("intensity")) for entry in meta["pairs"]]
    except (KeyError, TypeError, AttributeError) as e:
        raise ValueError(f"{meta_path}: expected a 'pairs' list of entries with a 'name' ({e!r})") from e

    pairs = []
    for name, intensity in entries:
        pair_dir = directory / name
        pairs.append(
            SyntheticPair(
                input_features=load_tensor(pair_dir / "features.apct").astype(np.float64),
                target=load_roll(pair_dir / "target", truth=True),
                style=StyleVector.from_json((pair_dir / "style.json").read_text(encoding="utf-8")),
                cover_notes=parse_midi((pair_dir / "cover.mid").read_bytes()),
                original_notes=parse_midi((pair_dir / "original.mid").read_bytes()),
                intensity=intensity,
            )
        )
    return pairs


def split_dataset(
    pairs: list[SyntheticPair], test_fraction: float, seed: int = 0
) -> tuple[list[SyntheticPair], list[SyntheticPair]]:
    """
    Seeded train/test split; both parts keep the dataset order.

    A positive fraction holds out at least one pair and always leaves one
    for training.
    """
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in [0, 1), got {test_fraction}")
    n_test = 0
    if test_fraction > 0 and len(pairs) > 1:
        n_test = min(len(pairs) - 1, max(1, math.floor(len(pairs) * test_fraction + 0.5)))

    held_out = set(make_rng(seed, 0x5E).permutation(len(pairs))[:n_test].tolist())
    train = [p for i, p in enumerate(pairs) if i not in held_out]
    test = [p for i, p in enumerate(pairs) if i in held_out]
    return train, test

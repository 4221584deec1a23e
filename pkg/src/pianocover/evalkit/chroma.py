"""Chroma (pitch-class energy) sequences from notes or audio."""

import logging

import numpy as np
from scipy.signal import stft

from ..errors import AudioError
from ..records import N_CHROMA, ChromaSequence, FrameGrid, MidiNote
from ..roll import note_span

logger = logging.getLogger(__name__)

WINDOW_SIZE = 4096
MIN_SAMPLE_RATE = 8000
LOWEST_FREQ = 27.5  # A0
HIGHEST_FREQ = 4186.0  # C8


def _unit_max(frames: np.ndarray) -> np.ndarray:
    """Scale each frame to max 1; all-zero frames stay zero."""
    peaks = frames.max(axis=1, keepdims=True)
    return np.divide(frames, peaks, out=np.zeros_like(frames), where=peaks > 0)


def chroma_from_notes(notes: list[MidiNote], hop: float) -> ChromaSequence:
    """
    Velocity-weighted pitch-class profile of sounding notes per frame.

    Class 0 is C (MIDI pitch mod 12).
    """
    if hop <= 0:
        raise ValueError("hop must be positive")
    grid = FrameGrid(hop_seconds=hop)
    spans = [(note_span(note, grid), note) for note in notes]
    n_frames = max((end for (_, end), _ in spans), default=0)

    frames = np.zeros((n_frames, N_CHROMA))
    for (start, end), note in spans:
        frames[start:end, note.pitch % N_CHROMA] += note.velocity
    return ChromaSequence(_unit_max(frames), hop)


def _bin_classes(freqs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of in-range bins and the pitch class of their nearest semitone (A4 = 440 Hz)."""
    in_range = np.flatnonzero((freqs >= LOWEST_FREQ) & (freqs <= HIGHEST_FREQ))
    midi = np.rint(69.0 + 12.0 * np.log2(freqs[in_range] / 440.0)).astype(np.int64)
    return in_range, midi % N_CHROMA


def chroma_from_audio(pcm: np.ndarray, sample_rate: int, hop: float) -> ChromaSequence:
    """
    Chroma from the magnitude STFT of mono audio (4096-sample Hann window).

    Each bin's power between 27.5 and 4186 Hz is added to the pitch class of
    its nearest equal-tempered semitone.

    Args:
        pcm: Mono samples
        sample_rate: Sampling rate in Hz
        hop: Frame hop in seconds

    Raises:
        AudioError: If the sample rate is below 8 kHz or the signal is empty
    """
    pcm = np.asarray(pcm, dtype=np.float64)
    if sample_rate < MIN_SAMPLE_RATE:
        raise AudioError(f"sample rate {sample_rate} Hz too low for a {WINDOW_SIZE}-sample window")
    if pcm.ndim != 1 or pcm.size == 0:
        raise AudioError("pcm must be a non-empty mono signal")

    hop_samples = int(round(hop * sample_rate))
    if not 1 <= hop_samples <= WINDOW_SIZE:
        raise AudioError(f"hop of {hop_samples} samples outside [1, {WINDOW_SIZE}]")

    freqs, _, spectrum = stft(
        pcm,
        fs=sample_rate,
        window="hann",
        nperseg=WINDOW_SIZE,
        noverlap=WINDOW_SIZE - hop_samples,
        boundary="zeros",
        padded=True,
    )
    power = np.abs(spectrum) ** 2  # (bins, frames)

    bins, classes = _bin_classes(freqs)
    assign = np.zeros((bins.size, N_CHROMA))
    assign[np.arange(bins.size), classes] = 1.0
    frames = power[bins].T @ assign

    logger.debug("Chroma: %d frames from %d samples at %d Hz", frames.shape[0], pcm.size, sample_rate)
    return ChromaSequence(_unit_max(frames), hop_samples / sample_rate)

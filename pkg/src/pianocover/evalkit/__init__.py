"""Evaluation: transcription F1, chroma features, DTW alignment and Q_max similarity."""

from .audio import read_audio
from .chroma import chroma_from_audio, chroma_from_notes
from .dtw import dtw_align
from .metrics import f1_scores
from .qmax import qmax, qmax_summary_csv

__all__ = [
    "read_audio",
    "chroma_from_audio",
    "chroma_from_notes",
    "dtw_align",
    "f1_scores",
    "qmax",
    "qmax_summary_csv",
]

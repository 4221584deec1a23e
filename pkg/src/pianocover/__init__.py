"""Piano cover toolkit: style-conditioned piano-roll transcription at desk scale."""

__version__ = "0.1.0"

from .checkpoint import CheckpointManager
from .config import (
    LossConfig,
    PostprocConfig,
    QmaxParams,
    Settings,
    SyntheticConfig,
    ToyNetHyperParams,
    TrainConfig,
    get_settings,
    load_config,
)
from .errors import (
    AudioError,
    ConfigError,
    EmptyCoverError,
    MidiParseError,
    PianoCoverError,
    ShapeError,
    TensorFormatError,
    TrainingDivergedError,
)
from .loss import build_mask, total_loss
from .midi_io import parse_midi, write_midi
from .postproc import clean_notes, decode_and_clean
from .progress import ProgressCallback, ProgressUpdate
from .records import (
    ChromaSequence,
    F1Scores,
    FrameGrid,
    MidiNote,
    PianoRollTensors,
    QmaxResult,
    StyleVector,
    SyntheticPair,
)
from .roll import notes_to_tensors, tensors_to_notes
from .style import average_style_vectors, extract_style_vector
from .synthetic import gen_synthetic_dataset, split_dataset
from .toynet import EvaluationReport, ToyNetParams, evaluate, forward_full, infer, train

__all__ = [
    # Representations
    "MidiNote",
    "FrameGrid",
    "PianoRollTensors",
    "StyleVector",
    "ChromaSequence",
    "QmaxResult",
    "F1Scores",
    "SyntheticPair",
    "parse_midi",
    "write_midi",
    "notes_to_tensors",
    "tensors_to_notes",
    # Style
    "extract_style_vector",
    "average_style_vectors",
    # Training
    "build_mask",
    "total_loss",
    "ToyNetParams",
    "forward_full",
    "infer",
    "train",
    "evaluate",
    "EvaluationReport",
    "gen_synthetic_dataset",
    "split_dataset",
    "CheckpointManager",
    # Post-processing
    "clean_notes",
    "decode_and_clean",
    # Configuration
    "Settings",
    "get_settings",
    "load_config",
    "LossConfig",
    "TrainConfig",
    "ToyNetHyperParams",
    "PostprocConfig",
    "QmaxParams",
    "SyntheticConfig",
    # Progress
    "ProgressUpdate",
    "ProgressCallback",
    # Errors
    "PianoCoverError",
    "MidiParseError",
    "TensorFormatError",
    "ShapeError",
    "EmptyCoverError",
    "TrainingDivergedError",
    "AudioError",
    "ConfigError",
]

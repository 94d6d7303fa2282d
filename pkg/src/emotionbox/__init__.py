"""Emotion-conditioned piano music generation.

Pipeline: parse piano MIDI into notes, encode them as a 240-symbol
performance-event stream, condition a three-layer GRU next-event model on
pitch-histogram and note-density features, train it on unlabeled MIDI, and
sample new pieces targeting one of four valence/arousal emotions.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .errors import (
    ChecksumMismatchError,
    CheckpointError,
    EmotionBoxError,
    EmptyCorpusError,
    MalformedFileError,
    UnsupportedFormatError,
    VersionMismatchError,
)
from .evaluation import AdherenceReport, adherence, compare, comparison_csv
from .events import (
    EventKind,
    PerformanceEvent,
    TIME_QUANTUM,
    VOCABULARY_SIZE,
    decode,
    encode,
    event_index,
    events_to_indices,
    format_events,
    index_to_event,
    indices_to_events,
    parse_events,
)
from .features import (
    CONDITIONING_DIM,
    Emotion,
    conditioning_row,
    conditioning_track,
    emotion_preset,
    mean_density,
    normalize,
    note_density,
    pitch_histogram,
)
from .generation import SamplerConfig, generate, generate_to_midi, sample_next
from .midi_io import Note, NoteList, parse_midi, write_midi
from .model import (
    AdamState,
    ModelConfig,
    ModelParams,
    adam_step,
    backward,
    cross_entropy,
    forward,
    forward_cached,
    gru_cell,
    init_adam,
    init_params,
    loss_and_gradients,
    parameter_count,
)
from .training import (
    TrainingConfig,
    TrainingExample,
    infer_emotion,
    label_conditioning,
    make_windows,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AdherenceReport",
    "Checkpoint",
    "CheckpointError",
    "ChecksumMismatchError",
    "CONDITIONING_DIM",
    "Emotion",
    "EmotionBoxError",
    "EmptyCorpusError",
    "EventKind",
    "MalformedFileError",
    "ModelConfig",
    "ModelParams",
    "Note",
    "NoteList",
    "PerformanceEvent",
    "SamplerConfig",
    "TIME_QUANTUM",
    "TrainingConfig",
    "TrainingExample",
    "UnsupportedFormatError",
    "VersionMismatchError",
    "VOCABULARY_SIZE",
    "adam_step",
    "adherence",
    "backward",
    "compare",
    "comparison_csv",
    "conditioning_row",
    "conditioning_track",
    "cross_entropy",
    "decode",
    "emotion_preset",
    "encode",
    "event_index",
    "events_to_indices",
    "format_events",
    "forward",
    "forward_cached",
    "generate",
    "generate_to_midi",
    "gru_cell",
    "index_to_event",
    "indices_to_events",
    "infer_emotion",
    "init_adam",
    "init_params",
    "label_conditioning",
    "load_checkpoint",
    "loss_and_gradients",
    "make_windows",
    "mean_density",
    "normalize",
    "note_density",
    "parameter_count",
    "parse_events",
    "parse_midi",
    "pitch_histogram",
    "sample_next",
    "save_checkpoint",
    "train",
    "write_midi",
]

"""Autoregressive sampling of new pieces under fixed emotion conditioning.

Each step flips a coin against the threshold: above it the next event is the
argmax of the logits, otherwise it is drawn from the temperature-scaled
softmax.  The conditioning row is chosen once from the requested emotion and
held constant for the whole piece, and the GRU hidden state runs uninterrupted
from the first event to the last.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .checkpoint import Checkpoint
from .events import (
    NUM_PITCHES,
    VOCABULARY_SIZE,
    PerformanceEvent,
    decode,
    indices_to_events,
)
from .features import CONDITIONING_DIM, Emotion, conditioning_row, emotion_preset
from .midi_io import write_midi
from .model import init_hidden, softmax, step
from .training import LABEL_CONDITIONING_DIM, label_conditioning
from .util import atomic_write_bytes


@dataclass(frozen=True)
class SamplerConfig:
    threshold: float = 0.9    # probability of sampling stochastically
    temperature: float = 1.0
    max_events: int = 600
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if self.max_events < 1:
            raise ValueError("max_events must be at least 1")


def sample_next(
    logits: np.ndarray, cfg: SamplerConfig, rng: np.random.Generator
) -> int:
    """Pick the next event index from one row of logits.

    Draws u uniform on [0, 1): greedy argmax (ties to the lowest index) when
    u exceeds the threshold, otherwise a draw from softmax(logits /
    temperature).  A threshold of 0 is always greedy, including at the
    measure-zero draw u == 0.
    """
    u = rng.random()
    if cfg.threshold <= 0.0 or u > cfg.threshold:
        return int(np.argmax(logits))
    p = softmax(np.asarray(logits, dtype=np.float64) / cfg.temperature)
    p /= p.sum()
    return int(rng.choice(len(p), p=p))


def emotion_conditioning(ckpt: Checkpoint, emotion: Emotion, tonic_pitch_class: int = 0) -> np.ndarray:
    """The constant conditioning row a checkpoint expects for an emotion."""
    dim = ckpt.config.conditioning_dim
    if dim == CONDITIONING_DIM:
        histogram, density = emotion_preset(emotion, tonic_pitch_class)
        return conditioning_row(histogram, density)
    if dim == LABEL_CONDITIONING_DIM:
        return label_conditioning(emotion, 1)[0]
    raise ValueError(f"checkpoint conditioning_dim {dim} has no emotion mapping")


def generate(
    ckpt: Checkpoint,
    emotion: Emotion,
    cfg: SamplerConfig,
    tonic_pitch_class: int = 0,
    step_hook: Callable[[int, np.ndarray], None] | None = None,
) -> list[PerformanceEvent]:
    """Sample a new event sequence of exactly cfg.max_events events.

    The first event is a uniformly random note-on; every later event comes
    from the model fed with the previous event and the fixed conditioning
    row.  Dropout is inactive.  ``step_hook``, when given, is called with
    (step index, conditioning row) each time the model is stepped, which lets
    callers verify the conditioning never drifts.
    """
    params = ckpt.params
    if params.config.vocab_size != VOCABULARY_SIZE:
        raise ValueError("generation needs a model over the 240-event vocabulary")
    row = emotion_conditioning(ckpt, emotion, tonic_pitch_class).astype(
        params.config.np_dtype
    )
    rng = np.random.default_rng(cfg.seed)
    sequence = [int(rng.integers(0, NUM_PITCHES))]  # note-on indices are 0..87
    hidden = init_hidden(params)
    while len(sequence) < cfg.max_events:
        if step_hook is not None:
            step_hook(len(sequence), row)
        logits, hidden = step(params, hidden, sequence[-1], row)
        sequence.append(sample_next(logits, cfg, rng))
    return indices_to_events(sequence)


def generate_to_midi(
    ckpt: Checkpoint,
    emotion: Emotion,
    cfg: SamplerConfig,
    out_path: str | Path,
    tonic_pitch_class: int = 0,
) -> Path:
    """Sample, decode, and write a MIDI file; returns the written path."""
    events = generate(ckpt, emotion, cfg, tonic_pitch_class)
    notes = decode(events, source_name=f"generated-{emotion.value}")
    out_path = Path(out_path)
    atomic_write_bytes(out_path, write_midi(notes))
    return out_path

"""Corpus windowing and the optimization loop.

Encoded pieces are cut into fixed-width windows (200 events, stride 10), each
yielding a next-event prediction example: the window minus its last event as
input, the window shifted by one as target, and a conditioning row per input
position.  Conditioning comes either from the piece's own features
("features" mode, 25 dims) or from a constant per-piece emotion one-hot
("labels" mode, 4 dims).  Training is plain shuffled mini-batch Adam and is
bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .checkpoint import Checkpoint, save_checkpoint
from .errors import EmotionBoxError, EmptyCorpusError
from .events import PerformanceEvent, encode, events_to_indices
from .features import (
    MAJOR_TEMPLATE,
    MINOR_TEMPLATE,
    Emotion,
    conditioning_track,
    mean_density,
    normalize,
    pitch_histogram,
)
from .midi_io import NoteList, parse_midi
from .model import (
    ModelConfig,
    init_adam,
    init_params,
    loss_and_gradients,
    adam_step,
)
from .util import atomic_write_text

logger = logging.getLogger(__name__)

WINDOW_LEN = 200
WINDOW_STRIDE = 10

FEATURES = "features"
LABELS = "labels"
LABEL_CONDITIONING_DIM = 4

# One-hot column per emotion in labels mode.
LABEL_ORDER = (Emotion.HAPPY, Emotion.TENSIONAL, Emotion.SAD, Emotion.PEACEFUL)


@dataclass(frozen=True)
class TrainingConfig:
    window_len: int = WINDOW_LEN
    stride: int = WINDOW_STRIDE
    batch_size: int = 64
    epochs: int = 100
    lr: float = 2e-4
    seed: int = 0
    conditioning_mode: str = FEATURES

    def __post_init__(self) -> None:
        if self.window_len <= 1:
            raise ValueError("window_len must exceed 1")
        if self.stride < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("bad training configuration")
        if self.conditioning_mode not in (FEATURES, LABELS):
            raise ValueError(f"unknown conditioning mode {self.conditioning_mode!r}")


@dataclass
class TrainingExample:
    """input_indices[i] predicts target_indices[i] = window event i + 1."""

    input_indices: np.ndarray   # (window_len - 1,)
    target_indices: np.ndarray  # (window_len - 1,)
    conditioning: np.ndarray    # (window_len - 1, conditioning_dim)


def make_windows(
    events: Sequence[PerformanceEvent] | Sequence[int] | np.ndarray,
    conditioning: np.ndarray,
    cfg: TrainingConfig,
) -> list[TrainingExample]:
    """Slice one piece into training windows.

    Windows start at offsets 0, stride, 2*stride, ... while a full window
    fits; pieces shorter than the window yield nothing.  Conditioning rows
    stay aligned with the input positions of each window.
    """
    seq = list(events)
    if seq and isinstance(seq[0], PerformanceEvent):
        indices = np.asarray(events_to_indices(seq), dtype=np.int64)
    else:
        indices = np.asarray(seq, dtype=np.int64)
    conditioning = np.asarray(conditioning)
    if len(conditioning) != len(indices):
        raise ValueError("conditioning length must equal event count")

    out: list[TrainingExample] = []
    offset = 0
    while offset + cfg.window_len <= len(indices):
        window = indices[offset : offset + cfg.window_len]
        rows = conditioning[offset : offset + cfg.window_len - 1]
        out.append(TrainingExample(window[:-1], window[1:], rows))
        offset += cfg.stride
    return out


def label_conditioning(emotion: Emotion, length: int) -> np.ndarray:
    """(length, 4) constant one-hot rows in HAPPY/TENSIONAL/SAD/PEACEFUL order."""
    row = np.zeros(LABEL_CONDITIONING_DIM)
    row[LABEL_ORDER.index(emotion)] = 1.0
    return np.tile(row, (length, 1))


def infer_emotion(notes: NoteList) -> Emotion:
    """Nearest-preset label for a piece, for corpora without annotations.

    Valence comes from whether the whole-piece pitch-class distribution is
    closer (L1) to the major or the minor template with tonic C; arousal from
    whether the mean 2-second note density is at least 3.  Meant for synthetic
    corpora built around C; real repertoire would need key detection first.
    """
    hist = normalize(pitch_histogram(notes, 0.0, max(notes.duration, 1.0)))
    major_gap = float(np.abs(hist - normalize(MAJOR_TEMPLATE)).sum())
    minor_gap = float(np.abs(hist - normalize(MINOR_TEMPLATE)).sum())
    major = major_gap <= minor_gap
    fast = mean_density(notes) >= 3.0
    if major:
        return Emotion.HAPPY if fast else Emotion.PEACEFUL
    return Emotion.TENSIONAL if fast else Emotion.SAD


def _corpus_files(corpus_dir: Path) -> list[Path]:
    return sorted(
        p for p in corpus_dir.iterdir()
        if p.is_file() and p.suffix.lower() in (".mid", ".midi")
    )


def load_windows(
    corpus_dir: str | Path, cfg: TrainingConfig
) -> list[TrainingExample]:
    """Parse, encode, and window every MIDI file in a directory.

    Unreadable files are skipped with a warning; the caller decides whether an
    empty result is an error.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise EmptyCorpusError(f"{corpus_dir} is not a directory")
    windows: list[TrainingExample] = []
    for path in _corpus_files(corpus_dir):
        try:
            notes = parse_midi(path.read_bytes(), source_name=path.name)
        except EmotionBoxError as exc:
            logger.warning("skipping %s: %s", path.name, exc)
            continue
        events = encode(notes)
        if cfg.conditioning_mode == FEATURES:
            conditioning = conditioning_track(notes, events)
        else:
            conditioning = label_conditioning(infer_emotion(notes), len(events))
        piece_windows = make_windows(events, conditioning, cfg)
        logger.info("%s: %d events, %d windows", path.name, len(events), len(piece_windows))
        windows.extend(piece_windows)
    return windows


def default_model_config(cfg: TrainingConfig) -> ModelConfig:
    dim = 25 if cfg.conditioning_mode == FEATURES else LABEL_CONDITIONING_DIM
    return ModelConfig(conditioning_dim=dim)


def train(
    corpus_dir: str | Path,
    cfg: TrainingConfig,
    checkpoint_out: str | Path,
    model_config: ModelConfig | None = None,
    loss_log_out: str | Path | None = None,
) -> tuple[Checkpoint, list[float]]:
    """Train on a directory of MIDI files and persist the result.

    Writes the checkpoint after initialization and again after every epoch,
    along with a ``epoch,mean_loss`` CSV.  Epoch loss is the window-weighted
    mean of batch losses.  Identical seeds give identical logs and
    checkpoints.
    """
    if model_config is None:
        model_config = default_model_config(cfg)
    expected_dim = 25 if cfg.conditioning_mode == FEATURES else LABEL_CONDITIONING_DIM
    if model_config.conditioning_dim != expected_dim:
        raise ValueError(
            f"model conditioning_dim {model_config.conditioning_dim} does not "
            f"match mode {cfg.conditioning_mode!r}"
        )

    windows = load_windows(corpus_dir, cfg)
    if not windows:
        raise EmptyCorpusError(f"no training windows found under {corpus_dir}")

    inputs = np.stack([w.input_indices for w in windows])
    targets = np.stack([w.target_indices for w in windows])
    conditioning = np.stack([w.conditioning for w in windows]).astype(
        model_config.np_dtype
    )

    init_seed, loop_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    params = init_params(model_config, np.random.default_rng(init_seed))
    adam = init_adam(params, lr=cfg.lr)
    ckpt = Checkpoint(params=params, adam=adam, seed=cfg.seed)
    loop_rng = np.random.default_rng(loop_seed)

    losses: list[float] = []

    def flush(epoch_done: int) -> None:
        save_checkpoint(checkpoint_out, ckpt)
        if loss_log_out is not None:
            rows = "".join(f"{e},{loss:.6f}\n" for e, loss in enumerate(losses))
            atomic_write_text(loss_log_out, "epoch,mean_loss\n" + rows)
        logger.info(
            "epoch %d/%d%s",
            epoch_done,
            cfg.epochs,
            f" mean loss {losses[-1]:.4f}" if losses else "",
        )

    flush(0)
    for _epoch in range(cfg.epochs):
        order = loop_rng.permutation(len(windows))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = loss_and_gradients(
                params,
                inputs[batch],
                conditioning[batch],
                targets[batch],
                dropout_active=True,
                rng=loop_rng,
            )
            adam_step(params, grads, adam)
            total += loss * len(batch)
        losses.append(total / len(windows))
        flush(_epoch + 1)
    return ckpt, losses

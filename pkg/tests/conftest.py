"""Shared fixtures and generators for the test suite."""

import struct

import numpy as np
import pytest

from emotionbox import (
    Checkpoint,
    ModelConfig,
    Note,
    NoteList,
    init_adam,
    init_params,
)

TIME_QUANTUM = 1.0 / 32.0


def random_notelist(
    rng: np.random.Generator,
    max_notes: int = 200,
    min_notes: int = 0,
    span: float = 60.0,
) -> NoteList:
    """Random valid NoteList with no same-pitch overlap and durations of at
    least 50 ms (comfortably above one codec quantum)."""
    n = int(rng.integers(min_notes, max_notes + 1))
    candidates = []
    for _ in range(n):
        pitch = int(rng.integers(21, 109))
        onset = float(rng.uniform(0.0, span))
        duration = float(rng.uniform(0.05, 2.0))
        velocity = int(rng.integers(1, 128))
        candidates.append(Note(pitch, onset, onset + duration, velocity))
    candidates.sort(key=lambda note: (note.onset, note.pitch))
    kept = []
    last_offset: dict[int, float] = {}
    for note in candidates:
        if note.onset < last_offset.get(note.pitch, -1.0):
            continue
        kept.append(note)
        last_offset[note.pitch] = note.offset
    return NoteList(kept, source_name="random")


def vlq(value: int) -> bytes:
    """Test-local variable-length quantity encoder (independent of the package)."""
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(chunks))


def build_smf(fmt: int, tracks: list[list[tuple[int, bytes]]], tpq: int = 480) -> bytes:
    """Assemble an SMF file from (delta, event bytes) lists, one per track."""
    out = b"MThd" + struct.pack(">IHHH", 6, fmt, len(tracks), tpq)
    for track in tracks:
        body = b"".join(vlq(delta) + event for delta, event in track)
        body += b"\x00\xff\x2f\x00"
        out += b"MTrk" + struct.pack(">I", len(body)) + body
    return out


@pytest.fixture(scope="session")
def tiny_features_ckpt() -> Checkpoint:
    """Untrained 240-vocab model with a small hidden size, features conditioning."""
    config = ModelConfig(hidden_size=16)
    params = init_params(config, 0)
    return Checkpoint(params=params, adam=init_adam(params), seed=0)


@pytest.fixture(scope="session")
def tiny_labels_ckpt() -> Checkpoint:
    config = ModelConfig(hidden_size=16, conditioning_dim=4)
    params = init_params(config, 1)
    return Checkpoint(params=params, adam=init_adam(params), seed=1)

"""Synthetic in-scale corpora for experiments and tests.

Pieces are drawn from a scale template: pitch classes sampled by template
weight (zero-weight classes never appear), onsets spaced to hit a target
2-second note density, octaves in the middle of the piano.  A directory of
major/fast and minor/slow pieces is enough to exercise the whole training
and evaluation pipeline without real repertoire.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .features import DENSITY_WINDOW, MAJOR_TEMPLATE, MINOR_TEMPLATE, normalize
from .midi_io import Note, NoteList, write_midi

FAST = 5
SLOW = 1


def synthesize_piece(
    histogram,
    density: int,
    n_notes: int = 70,
    rng: np.random.Generator | int = 0,
    base_velocity: int = 70,
) -> NoteList:
    """Random piece whose onsets average ``density`` notes per 2 seconds and
    whose pitch classes follow ``histogram``."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    weights = normalize(histogram)
    interval = DENSITY_WINDOW / density
    notes = []
    t = 0.0
    for _ in range(n_notes):
        pitch_class = int(rng.choice(12, p=weights))
        octave = int(rng.integers(3, 6))  # pitches 48..83, mid-piano
        pitch = 12 * (octave + 1) + pitch_class
        duration = float(rng.uniform(0.2, 1.2))
        velocity = int(np.clip(base_velocity + rng.integers(-12, 13), 1, 127))
        notes.append(Note(pitch, t, t + duration, velocity))
        t += interval * float(rng.uniform(0.75, 1.25))
    return NoteList(notes, source_name="synthetic")


def regular_piece(
    n_notes: int,
    pitches: tuple[int, ...] = (60, 62, 64, 65, 67, 69, 71, 72),
    velocity: int = 64,
) -> NoteList:
    """Deterministic piece that encodes to exactly 4 * n_notes events.

    Notes last 0.25 s on a 0.5 s grid with one shared velocity, so each note
    contributes shift/on/shift/off except the first, which spends its fourth
    slot on the single velocity event.  Both times are whole multiples of the
    codec quantum, which keeps the event cycle strictly periodic.
    """
    notes = [
        Note(pitches[i % len(pitches)], 0.5 * i, 0.5 * i + 0.25, velocity)
        for i in range(n_notes)
    ]
    return NoteList(notes, source_name="regular")


def build_toy_corpus(
    out_dir: str | Path,
    n_major: int = 10,
    n_minor: int = 10,
    n_notes: int = 70,
    seed: int = 0,
) -> list[Path]:
    """Write a labeled-by-construction corpus: major pieces at density 5,
    minor pieces at density 1.  Returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    specs = [("major", MAJOR_TEMPLATE, FAST, i) for i in range(n_major)]
    specs += [("minor", MINOR_TEMPLATE, SLOW, i) for i in range(n_minor)]
    for kind, template, density, index in specs:
        rng = np.random.default_rng([seed, density, index])
        piece = synthesize_piece(template, density, n_notes=n_notes, rng=rng)
        path = out_dir / f"{kind}_{index:02d}.mid"
        path.write_bytes(write_midi(piece))
        paths.append(path)
    return paths

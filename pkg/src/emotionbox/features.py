"""Pitch-class histograms, note density, and emotion conditioning.

A pitch histogram is a 12-vector of onset counts per pitch class (C=0 ... B=11);
normalized, it describes the scale content of a stretch of music and stands in
for valence.  Note density is the onset count inside a 2-second window and
stands in for tempo/arousal.  The two combine into a 25-dimensional
conditioning row: 12 normalized histogram weights, a 12-way density one-hot,
and a trailing always-zero stabilizer.
"""

from __future__ import annotations

from bisect import bisect_left
from enum import Enum
from typing import Sequence

import numpy as np

from .events import EventKind, PerformanceEvent, TIME_QUANTUM
from .midi_io import NoteList

DENSITY_WINDOW = 2.0  # seconds
CONDITIONING_DIM = 25
NUM_PITCH_CLASSES = 12

# Scale templates with tonic at index 0: weight 2 on tonic, subdominant, and
# dominant, weight 1 on the remaining scale degrees, 0 off-scale.
MAJOR_TEMPLATE = np.array([2, 0, 1, 0, 1, 2, 0, 2, 0, 1, 0, 1], dtype=float)
MINOR_TEMPLATE = np.array([2, 0, 1, 1, 0, 2, 0, 2, 1, 0, 1, 0], dtype=float)

FAST_DENSITY = 5
SLOW_DENSITY = 1


class Emotion(Enum):
    """The four quadrants of the valence/arousal plane."""

    HAPPY = "happy"          # positive valence, high arousal: major + fast
    TENSIONAL = "tensional"  # negative valence, high arousal: minor + fast
    SAD = "sad"              # negative valence, low arousal:  minor + slow
    PEACEFUL = "peaceful"    # positive valence, low arousal:  major + slow


def _onsets(notes: NoteList) -> list[float]:
    return [n.onset for n in notes]


def pitch_histogram(notes: NoteList, t: float, window: float) -> np.ndarray:
    """Raw onset counts per pitch class over [t, t + window)."""
    if window <= 0:
        raise ValueError("window must be positive")
    onsets = _onsets(notes)
    lo = bisect_left(onsets, t)
    hi = bisect_left(onsets, t + window)
    hist = np.zeros(NUM_PITCH_CLASSES)
    for i in range(lo, hi):
        hist[notes[i].pitch % 12] += 1
    return hist


def normalize(histogram: Sequence[float] | np.ndarray) -> np.ndarray:
    """Scale weights to sum to 1; an all-zero histogram passes through."""
    h = np.asarray(histogram, dtype=float)
    total = h.sum()
    if total == 0:
        return h.copy()
    return h / total


def note_density(notes: NoteList, t: float, window: float = DENSITY_WINDOW) -> int:
    """Number of note onsets in [t, t + window)."""
    if window <= 0:
        raise ValueError("window must be positive")
    onsets = _onsets(notes)
    return bisect_left(onsets, t + window) - bisect_left(onsets, t)


def mean_density(
    notes: NoteList, window: float = DENSITY_WINDOW, step: float = 0.5
) -> float:
    """Mean note density over windows stepped through the piece.

    Windows [t, t + window) start at t = 0, step, 2*step, ... while they fit
    inside the piece; a piece shorter than one window is measured with a
    single window from 0.
    """
    starts = [0.0]
    t = step
    while t + window <= notes.duration:
        starts.append(t)
        t += step
    return float(np.mean([note_density(notes, s, window) for s in starts]))


def emotion_preset(
    emotion: Emotion, tonic_pitch_class: int = 0
) -> tuple[np.ndarray, int]:
    """Scale template and target density for an emotion.

    The template is rotated so its tonic lands on tonic_pitch_class (default
    C, pitch class 0).
    """
    if not 0 <= tonic_pitch_class < 12:
        raise ValueError("tonic_pitch_class must be in [0, 11]")
    major = emotion in (Emotion.HAPPY, Emotion.PEACEFUL)
    fast = emotion in (Emotion.HAPPY, Emotion.TENSIONAL)
    template = MAJOR_TEMPLATE if major else MINOR_TEMPLATE
    histogram = np.roll(template, tonic_pitch_class)
    return histogram, FAST_DENSITY if fast else SLOW_DENSITY


def conditioning_row(
    histogram: Sequence[float] | np.ndarray, density: int
) -> np.ndarray:
    """25-vector: normalized histogram, density one-hot, trailing zero.

    Densities of 12 or more clamp onto the top one-hot slot.
    """
    if density < 0:
        raise ValueError("density must be non-negative")
    row = np.zeros(CONDITIONING_DIM)
    row[:12] = normalize(histogram)
    row[12 + min(density, 11)] = 1.0
    return row


def event_times(events: Sequence[PerformanceEvent]) -> list[float]:
    """Decoded clock time at which each event occurs (time shifts advance it)."""
    times = []
    clock = 0
    for e in events:
        times.append(clock * TIME_QUANTUM)
        if e.kind is EventKind.TIME_SHIFT:
            clock += e.value
    return times


def conditioning_track(
    notes: NoteList, events: Sequence[PerformanceEvent]
) -> np.ndarray:
    """One conditioning row per event, measured over [t, t + 2s) at the
    event's decoded clock time.  Shape (len(events), 25)."""
    rows = np.zeros((len(events), CONDITIONING_DIM))
    for i, t in enumerate(event_times(events)):
        hist = pitch_histogram(notes, t, DENSITY_WINDOW)
        rows[i] = conditioning_row(hist, note_density(notes, t, DENSITY_WINDOW))
    return rows

"""Feature extraction and emotion preset tests."""

import numpy as np
import pytest

from emotionbox import (
    CONDITIONING_DIM,
    Emotion,
    Note,
    NoteList,
    conditioning_row,
    conditioning_track,
    emotion_preset,
    encode,
    normalize,
    note_density,
    pitch_histogram,
)
from emotionbox.features import MAJOR_TEMPLATE, MINOR_TEMPLATE, event_times

from conftest import random_notelist

C_MAJOR = [2, 0, 1, 0, 1, 2, 0, 2, 0, 1, 0, 1]
C_MAJOR_DIST = [0.2, 0, 0.1, 0, 0.1, 0.2, 0, 0.2, 0, 0.1, 0, 0.1]
C_MINOR = [2, 0, 1, 1, 0, 2, 0, 2, 1, 0, 1, 0]


def test_pitch_histogram_example():
    notes = NoteList([Note(60, 0.1, 0.2, 64), Note(64, 0.5, 0.6, 64), Note(67, 1.0, 1.1, 64)])
    hist = pitch_histogram(notes, 0.0, 2.0)
    assert hist.tolist() == [1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0]


def test_pitch_histogram_empty_and_out_of_window():
    assert pitch_histogram(NoteList([]), 0.0, 2.0).tolist() == [0.0] * 12
    notes = NoteList([Note(60, 5.0, 5.5, 64)])
    assert pitch_histogram(notes, 0.0, 2.0).sum() == 0


def test_pitch_histogram_window_is_half_open():
    notes = NoteList([Note(60, 2.0, 2.5, 64)])
    assert pitch_histogram(notes, 0.0, 2.0).sum() == 0
    assert pitch_histogram(notes, 2.0, 2.0).sum() == 1


def test_normalize_major_distribution_exact():
    assert normalize(C_MAJOR).tolist() == C_MAJOR_DIST


def test_normalize_zeros_and_single_class():
    assert normalize(np.zeros(12)).tolist() == [0.0] * 12
    assert normalize([3] + [0] * 11).tolist() == [1.0] + [0.0] * 11


def test_normalize_idempotent():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h = rng.random(12) * rng.integers(1, 10)
        once = normalize(h)
        np.testing.assert_allclose(normalize(once), once, rtol=0, atol=1e-15)


def test_rotation_equivariance():
    rng = np.random.default_rng(1)
    base = random_notelist(rng, max_notes=50, min_notes=10)
    for k in (1, 3, 7):
        shifted = NoteList(
            [Note(min(n.pitch + k, 108), n.onset, n.offset, n.velocity)
             for n in base if n.pitch + k <= 108]
        )
        kept = NoteList([n for n in base if n.pitch + k <= 108])
        np.testing.assert_array_equal(
            pitch_histogram(shifted, 0.0, 100.0),
            np.roll(pitch_histogram(kept, 0.0, 100.0), k),
        )


def test_note_density_examples():
    notes = NoteList([Note(60, 0.1 * i, 0.1 * i + 0.05, 64) for i in range(5)])
    assert note_density(notes, 0.0, 2.0) == 5
    assert note_density(NoteList([]), 0.0) == 0


def test_note_density_brute_force():
    rng = np.random.default_rng(2)
    notes = random_notelist(rng, max_notes=20, min_notes=20, span=10.0)
    for t in rng.uniform(-1, 11, size=30):
        expected = sum(1 for n in notes if t <= n.onset < t + 2.0)
        assert note_density(notes, float(t)) == expected


def test_emotion_presets():
    happy_hist, happy_density = emotion_preset(Emotion.HAPPY)
    assert happy_hist.tolist() == C_MAJOR and happy_density == 5
    sad_hist, sad_density = emotion_preset(Emotion.SAD)
    assert sad_hist.tolist() == C_MINOR and sad_density == 1
    tension_hist, tension_density = emotion_preset(Emotion.TENSIONAL)
    assert tension_hist.tolist() == C_MINOR and tension_density == 5
    peace_hist, peace_density = emotion_preset(Emotion.PEACEFUL)
    assert peace_hist.tolist() == C_MAJOR and peace_density == 1


def test_preset_arousal_ordering():
    density = {e: emotion_preset(e)[1] for e in Emotion}
    assert density[Emotion.HAPPY] == density[Emotion.TENSIONAL]
    assert density[Emotion.SAD] == density[Emotion.PEACEFUL]
    assert density[Emotion.HAPPY] > density[Emotion.SAD]


def test_preset_rotation():
    hist, density = emotion_preset(Emotion.PEACEFUL, tonic_pitch_class=2)
    assert hist.tolist() == np.roll(MAJOR_TEMPLATE, 2).tolist()
    assert density == 1
    # D major has F# and C#: pitch classes 6 and 1 must carry weight
    assert hist[6] > 0 and hist[1] > 0 and hist[0] == 0


def test_minor_template_zero_positions():
    zeros = {i for i, w in enumerate(MINOR_TEMPLATE) if w == 0}
    assert zeros == {1, 4, 6, 9, 11}


def test_conditioning_row_example():
    row = conditioning_row(C_MAJOR, 5)
    assert row.tolist() == C_MAJOR_DIST + [0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0] + [0]


def test_conditioning_row_shape_and_clamp():
    for density, hot in ((0, 0), (11, 11), (40, 11)):
        row = conditioning_row([1] * 12, density)
        assert len(row) == CONDITIONING_DIM
        assert row[12:24].sum() == 1.0
        assert row[12 + hot] == 1.0
        assert row[24] == 0.0


def test_conditioning_track_empty():
    assert conditioning_track(NoteList([]), []).shape == (0, CONDITIONING_DIM)


def test_conditioning_track_single_chord():
    notes = NoteList([Note(60, 0.0, 1.0, 64), Note(64, 0.0, 1.0, 64)])
    events = encode(notes)
    rows = conditioning_track(notes, events)
    assert rows.shape == (len(events), CONDITIONING_DIM)
    # every event of this piece happens within 2 s of the chord, so all rows
    # see the same histogram and density 2
    for row in rows:
        assert row[12 + 2] == 1.0
        np.testing.assert_allclose(row[:12], normalize([1, 0, 0, 0, 1] + [0] * 7))


def test_conditioning_track_brute_force():
    rng = np.random.default_rng(3)
    notes = random_notelist(rng, max_notes=25, min_notes=15, span=8.0)
    events = encode(notes)
    rows = conditioning_track(notes, events)
    assert len(rows) == len(events)

    clock = 0
    for i, e in enumerate(events):
        t = clock * (1.0 / 32.0)
        onsets_in = [n for n in notes if t <= n.onset < t + 2.0]
        hist = [0.0] * 12
        for n in onsets_in:
            hist[n.pitch % 12] += 1
        total = sum(hist)
        expected_hist = [h / total for h in hist] if total else hist
        np.testing.assert_allclose(rows[i][:12], expected_hist, atol=1e-12)
        assert rows[i][12 + min(len(onsets_in), 11)] == 1.0
        assert rows[i][24] == 0.0
        if e.kind.name == "TIME_SHIFT":
            clock += e.value


def test_event_times():
    from emotionbox.events import EventKind, PerformanceEvent

    events = [
        PerformanceEvent(EventKind.VELOCITY, 10),
        PerformanceEvent(EventKind.NOTE_ON, 60),
        PerformanceEvent(EventKind.TIME_SHIFT, 32),
        PerformanceEvent(EventKind.TIME_SHIFT, 8),
        PerformanceEvent(EventKind.NOTE_OFF, 60),
    ]
    assert event_times(events) == [0.0, 0.0, 0.0, 1.0, 1.25]


def test_window_validation():
    with pytest.raises(ValueError):
        pitch_histogram(NoteList([]), 0.0, 0.0)
    with pytest.raises(ValueError):
        note_density(NoteList([]), 0.0, -1.0)
    with pytest.raises(ValueError):
        conditioning_row([1] * 12, -1)
    with pytest.raises(ValueError):
        emotion_preset(Emotion.HAPPY, tonic_pitch_class=12)

"""Codec tests: index layout, encode/decode, round trips, fuzz."""

import numpy as np
import pytest

from emotionbox import (
    EventKind,
    Note,
    NoteList,
    PerformanceEvent,
    TIME_QUANTUM,
    VOCABULARY_SIZE,
    decode,
    encode,
    event_index,
    format_events,
    index_to_event,
    indices_to_events,
    parse_events,
)

from conftest import random_notelist

ON = EventKind.NOTE_ON
OFF = EventKind.NOTE_OFF
SHIFT = EventKind.TIME_SHIFT
VEL = EventKind.VELOCITY


def ev(kind, value):
    return PerformanceEvent(kind, value)


@pytest.mark.parametrize(
    "event,index",
    [
        (ev(ON, 21), 0),
        (ev(ON, 108), 87),
        (ev(OFF, 21), 88),
        (ev(OFF, 108), 175),
        (ev(SHIFT, 1), 176),
        (ev(SHIFT, 32), 207),
        (ev(VEL, 0), 208),
        (ev(VEL, 31), 239),
    ],
)
def test_index_layout(event, index):
    assert event_index(event) == index
    assert index_to_event(index) == event


def test_index_bijection():
    seen = {event_index(index_to_event(i)) for i in range(VOCABULARY_SIZE)}
    assert seen == set(range(VOCABULARY_SIZE))
    assert VOCABULARY_SIZE == 240


def test_index_bounds():
    with pytest.raises(ValueError):
        index_to_event(240)
    with pytest.raises(ValueError):
        index_to_event(-1)


def test_event_validation():
    with pytest.raises(ValueError):
        ev(ON, 20)
    with pytest.raises(ValueError):
        ev(SHIFT, 0)
    with pytest.raises(ValueError):
        ev(SHIFT, 33)
    with pytest.raises(ValueError):
        ev(VEL, 32)


def test_encode_single_note():
    events = encode(NoteList([Note(60, 0.0, 0.5, 64)]))
    assert events == [ev(VEL, 16), ev(ON, 60), ev(SHIFT, 16), ev(OFF, 60)]


def test_encode_empty():
    assert encode(NoteList([])) == []


def test_encode_velocity_run_length():
    notes = NoteList([Note(60, 0.0, 0.25, 64), Note(62, 0.5, 0.75, 65)])
    events = encode(notes)
    # both velocities land in bin 16, so only the first note pays for it
    assert sum(1 for e in events if e.kind is VEL) == 1


def test_encode_velocity_change_emits_again():
    notes = NoteList([Note(60, 0.0, 0.25, 64), Note(62, 0.5, 0.75, 90)])
    vels = [e.value for e in encode(notes) if e.kind is VEL]
    assert vels == [16, 22]


def test_encode_simultaneous_onsets_sorted_by_pitch():
    notes = NoteList([Note(64, 0.0, 1.0, 64), Note(60, 0.0, 1.0, 64)])
    ons = [e.value for e in encode(notes) if e.kind is ON]
    assert ons == [60, 64]


def test_encode_long_gap_splits_shifts():
    # 1.5 s = 48 quanta: one full-second shift then a 16-quantum shift
    notes = NoteList([Note(60, 1.5, 2.0, 64)])
    events = encode(notes)
    assert events[:2] == [ev(SHIFT, 32), ev(SHIFT, 16)]


def test_encode_sub_half_quantum_gap_is_dropped():
    notes = NoteList([Note(60, 0.014, 0.514, 64)])
    events = encode(notes)
    assert events[0].kind is VEL  # 14 ms rounds to no shift at all


def test_decode_single_note():
    events = [ev(VEL, 16), ev(ON, 60), ev(SHIFT, 16), ev(OFF, 60)]
    notes = decode(events)
    assert len(notes) == 1
    n = notes[0]
    assert (n.pitch, n.onset, n.offset, n.velocity) == (60, 0.0, 0.5, 66)


def test_decode_empty():
    assert len(decode([])) == 0


def test_decode_orphan_note_off_ignored():
    assert len(decode([ev(OFF, 60)])) == 0


def test_decode_open_note_closed_one_quantum_after_end():
    notes = decode([ev(VEL, 10), ev(ON, 60), ev(SHIFT, 8)])
    assert len(notes) == 1
    assert notes[0].offset == pytest.approx(9 * TIME_QUANTUM)


def test_decode_restrike():
    notes = decode([ev(VEL, 10), ev(ON, 60), ev(SHIFT, 4), ev(ON, 60), ev(SHIFT, 4), ev(OFF, 60)])
    assert len(notes) == 2
    assert notes[0].offset == pytest.approx(4 * TIME_QUANTUM)
    assert notes[1].onset == pytest.approx(4 * TIME_QUANTUM)


def test_decode_zero_length_note_dropped():
    assert len(decode([ev(VEL, 10), ev(ON, 60), ev(OFF, 60)])) == 0


def _assert_roundtrip(original: NoteList):
    decoded = decode(encode(original))
    assert len(decoded) == len(original)
    key = lambda n: (int(n.onset / TIME_QUANTUM + 0.5), n.pitch)
    for before, after in zip(sorted(original, key=key), decoded):
        assert before.pitch == after.pitch
        assert abs(before.onset - after.onset) <= TIME_QUANTUM / 2 + 1e-9
        assert abs(before.offset - after.offset) <= TIME_QUANTUM / 2 + 1e-9
        assert abs(before.velocity - after.velocity) <= 2


def test_roundtrip_random():
    rng = np.random.default_rng(17)
    for _ in range(200):
        _assert_roundtrip(random_notelist(rng, max_notes=60))


def test_roundtrip_no_drift_on_long_pieces():
    # 0.37 s spacing never aligns with the quantum; absolute-clock
    # quantization must keep note 150 as accurate as note 0
    notes = NoteList([Note(60 + (i % 3), 0.37 * i, 0.37 * i + 0.2, 64) for i in range(150)])
    _assert_roundtrip(notes)


def test_decode_fuzz_total_over_index_soup():
    rng = np.random.default_rng(23)
    for _ in range(300):
        length = int(rng.integers(0, 50))
        events = indices_to_events(rng.integers(0, VOCABULARY_SIZE, size=length))
        decoded = decode(events)
        for n in decoded:
            assert 21 <= n.pitch <= 108 and n.offset > n.onset


def test_text_format_roundtrip():
    events = encode(NoteList([Note(60, 0.0, 0.5, 64), Note(72, 1.0, 2.0, 99)]))
    text = format_events(events)
    assert "ON 60" in text and "VEL 16" in text
    assert parse_events(text) == events


def test_text_format_rejects_garbage():
    with pytest.raises(ValueError):
        parse_events("ON 60\nWOBBLE 3\n")
    with pytest.raises(ValueError):
        parse_events("ON sixty\n")

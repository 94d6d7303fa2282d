"""Parser and writer tests against hand-built SMF byte layouts."""

import numpy as np
import pytest

from emotionbox import (
    MalformedFileError,
    Note,
    NoteList,
    UnsupportedFormatError,
    parse_midi,
    write_midi,
)

from conftest import build_smf, random_notelist, vlq

HALF_TICK = 0.5 / 960.0  # writer runs at 960 ticks per second


def note_on(pitch, velocity, channel=0):
    return bytes([0x90 | channel, pitch, velocity])


def note_off(pitch, channel=0):
    return bytes([0x80 | channel, pitch, 0])


def tempo_meta(us_per_quarter):
    return b"\xff\x51\x03" + us_per_quarter.to_bytes(3, "big")


def test_single_note_format0():
    # note-on pitch 60 vel 64 at tick 0, note-off at tick 480; 480 tpq at the
    # default 120 BPM puts the release exactly one quarter = 0.5 s later
    blob = build_smf(0, [[(0, note_on(60, 64)), (480, note_off(60))]])
    notes = parse_midi(blob)
    assert len(notes) == 1
    n = notes[0]
    assert (n.pitch, n.onset, n.offset, n.velocity) == (60, 0.0, 0.5, 64)


def test_empty_track():
    assert len(parse_midi(build_smf(0, [[]]))) == 0


def test_out_of_range_pitch_dropped():
    blob = build_smf(0, [[(0, note_on(10, 64)), (480, note_off(10)),
                          (0, note_on(60, 64)), (480, note_off(60))]])
    notes = parse_midi(blob)
    assert [n.pitch for n in notes] == [60]


def test_velocity_zero_note_on_is_release():
    blob = build_smf(0, [[(0, note_on(60, 80)), (240, note_on(60, 0))]])
    notes = parse_midi(blob)
    assert len(notes) == 1
    assert notes[0].offset == pytest.approx(0.25)


def test_running_status():
    track = [
        (0, note_on(60, 64)),
        (0, bytes([64, 64])),       # running status: second note-on
        (480, bytes([60, 0])),      # release via velocity 0
        (0, bytes([64, 0])),
    ]
    notes = parse_midi(build_smf(0, [track]))
    assert sorted(n.pitch for n in notes) == [60, 64]
    assert all(n.offset == pytest.approx(0.5) for n in notes)


def test_tempo_change_honored():
    # 480 ticks at 120 BPM (0.5 s), then tempo doubles to 240 BPM and the next
    # 480 ticks take 0.25 s
    track = [
        (0, note_on(60, 64)),
        (480, tempo_meta(250_000)),
        (480, note_off(60)),
    ]
    notes = parse_midi(build_smf(0, [track]))
    assert notes[0].offset == pytest.approx(0.75)


def test_tempo_before_first_note():
    track = [(0, tempo_meta(1_000_000)), (0, note_on(60, 64)), (480, note_off(60))]
    notes = parse_midi(build_smf(0, [track]))
    assert notes[0].offset == pytest.approx(1.0)


def test_unmatched_note_on_closed_at_end_of_track():
    blob = build_smf(0, [[(0, note_on(60, 64)), (960, bytes([0x90, 62, 1])), (0, bytes([0x80, 62, 0]))]])
    notes = parse_midi(blob)
    sixty = [n for n in notes if n.pitch == 60]
    assert len(sixty) == 1
    assert sixty[0].offset == pytest.approx(1.0)


def test_restrike_closes_earlier_note():
    track = [
        (0, note_on(60, 64)),
        (480, note_on(60, 80)),
        (480, note_off(60)),
    ]
    notes = parse_midi(build_smf(0, [track]))
    assert len(notes) == 2
    assert notes[0].offset == pytest.approx(0.5)   # closed by the re-strike
    assert notes[1].onset == pytest.approx(0.5)
    assert notes[1].offset == pytest.approx(1.0)


def test_format1_equals_merged_format0():
    t1 = [(0, note_on(60, 64)), (960, note_off(60))]
    t2 = [(480, note_on(64, 80)), (960, note_off(64))]
    merged = [
        (0, note_on(60, 64)),
        (480, note_on(64, 80)),
        (480, note_off(60)),
        (480, note_off(64)),
    ]
    fmt1 = parse_midi(build_smf(1, [t1, t2]))
    fmt0 = parse_midi(build_smf(0, [merged]))
    assert fmt1.notes == fmt0.notes


def test_format2_rejected():
    with pytest.raises(UnsupportedFormatError):
        parse_midi(build_smf(2, [[]]))


def test_smpte_division_rejected():
    blob = bytearray(build_smf(0, [[]]))
    blob[12] = 0xE8  # negative division high byte marks SMPTE
    with pytest.raises(UnsupportedFormatError):
        parse_midi(bytes(blob))


def test_alien_chunks_skipped():
    blob = build_smf(0, [[(0, note_on(60, 64)), (480, note_off(60))]])
    import struct
    alien = b"XFIH" + struct.pack(">I", 4) + b"\x00\x01\x02\x03"
    header, rest = blob[:14], blob[14:]
    assert len(parse_midi(header + alien + rest)) == 1


@pytest.mark.parametrize(
    "mutation",
    [
        b"",
        b"MThe" + bytes(20),
        b"MThd\x00\x00\x00\x06\x00\x00",  # truncated header fields
        build_smf(0, [[]])[:-2],  # truncated track chunk
    ],
)
def test_malformed_structures(mutation):
    with pytest.raises(MalformedFileError):
        parse_midi(mutation)


def test_vlq_overlong_rejected():
    track_body = b"\x81\x80\x80\x80\x80\x00" + note_on(60, 64)
    import struct
    blob = (
        b"MThd" + struct.pack(">IHHH", 6, 0, 1, 480)
        + b"MTrk" + struct.pack(">I", len(track_body)) + track_body
    )
    with pytest.raises(MalformedFileError):
        parse_midi(blob)


def test_missing_declared_track():
    import struct
    blob = b"MThd" + struct.pack(">IHHH", 6, 1, 2, 480)
    blob += b"MTrk" + struct.pack(">I", 4) + b"\x00\xff\x2f\x00"
    with pytest.raises(MalformedFileError):
        parse_midi(blob)


def test_write_empty():
    blob = write_midi(NoteList([]))
    assert blob[:4] == b"MThd"
    assert len(parse_midi(blob)) == 0


def _assert_roundtrip(original: NoteList):
    decoded = parse_midi(write_midi(original))
    assert len(decoded) == len(original)
    key = lambda n: (int(n.onset * 960 + 0.5), n.pitch)
    for before, after in zip(sorted(original, key=key), decoded):
        assert before.pitch == after.pitch
        assert before.velocity == after.velocity
        assert abs(before.onset - after.onset) <= HALF_TICK + 1e-9
        assert abs(before.offset - after.offset) <= HALF_TICK + 1e-9


def test_roundtrip_single_note():
    _assert_roundtrip(NoteList([Note(60, 0.0, 0.5, 64)]))


def test_roundtrip_random_notes():
    rng = np.random.default_rng(99)
    for _ in range(20):
        _assert_roundtrip(random_notelist(rng, max_notes=100))


def test_roundtrip_adjacent_same_pitch():
    notes = NoteList([Note(60, 0.0, 0.5, 64), Note(60, 0.5, 1.0, 80)])
    _assert_roundtrip(notes)


def test_fuzz_mutations_never_crash():
    rng = np.random.default_rng(7)
    base = bytearray(
        write_midi(random_notelist(np.random.default_rng(3), max_notes=30, min_notes=5))
    )
    for _ in range(400):
        mutated = bytearray(base)
        for _ in range(int(rng.integers(1, 6))):
            mutated[int(rng.integers(0, len(mutated)))] = int(rng.integers(0, 256))
        try:
            parse_midi(bytes(mutated))
        except (MalformedFileError, UnsupportedFormatError):
            pass


def test_fuzz_truncations_never_crash():
    base = write_midi(random_notelist(np.random.default_rng(4), max_notes=30, min_notes=5))
    for cut in range(len(base)):
        try:
            parse_midi(base[:cut])
        except (MalformedFileError, UnsupportedFormatError):
            pass


def test_notelist_sorted_invariant():
    notes = NoteList([Note(70, 1.0, 2.0, 10), Note(30, 0.5, 0.9, 10), Note(25, 0.5, 0.8, 10)])
    assert [(n.onset, n.pitch) for n in notes] == [(0.5, 25), (0.5, 30), (1.0, 70)]


def test_note_validation():
    with pytest.raises(ValueError):
        Note(20, 0.0, 1.0, 64)
    with pytest.raises(ValueError):
        Note(60, 1.0, 1.0, 64)
    with pytest.raises(ValueError):
        Note(60, 0.0, 1.0, 0)
    with pytest.raises(ValueError):
        Note(60, -0.5, 1.0, 64)

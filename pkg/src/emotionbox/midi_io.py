"""Standard MIDI File reading and writing for piano note lists.

Reads SMF formats 0 and 1, merges every track into a single stream of piano
notes with times in seconds, and writes note lists back as a single-track
format-0 file.  Only note-on/note-off and tempo meta events matter here;
controllers (including sustain pedal), program changes, and all other meta
events are skipped.  Chunk lengths are big-endian and delta times are
variable-length quantities, exactly as the MIDI 1.0 file spec lays them out.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import MalformedFileError, UnsupportedFormatError

PIANO_MIN_PITCH = 21
PIANO_MAX_PITCH = 108

# 120 BPM, the default until a set-tempo meta event says otherwise.
DEFAULT_TEMPO_US = 500_000
WRITE_TICKS_PER_QUARTER = 480

# Longest legal variable-length quantity is 4 bytes (0x0FFFFFFF).
_MAX_VLQ_BYTES = 4


@dataclass(frozen=True, slots=True)
class Note:
    """One sounded piano note with times in seconds."""

    pitch: int
    onset: float
    offset: float
    velocity: int

    def __post_init__(self) -> None:
        if not PIANO_MIN_PITCH <= self.pitch <= PIANO_MAX_PITCH:
            raise ValueError(f"pitch {self.pitch} outside piano range")
        if self.onset < 0.0:
            raise ValueError(f"negative onset {self.onset!r}")
        if self.offset <= self.onset:
            raise ValueError(f"offset {self.offset!r} not after onset {self.onset!r}")
        if not 1 <= self.velocity <= 127:
            raise ValueError(f"velocity {self.velocity} outside [1, 127]")


@dataclass
class NoteList:
    """Notes sorted by (onset, pitch) plus the source file's time resolution."""

    notes: list[Note] = field(default_factory=list)
    ticks_per_quarter: int = WRITE_TICKS_PER_QUARTER
    source_name: str = ""

    def __post_init__(self) -> None:
        if self.ticks_per_quarter <= 0:
            raise ValueError("ticks_per_quarter must be positive")
        self.notes = sorted(self.notes, key=lambda n: (n.onset, n.pitch))

    def __len__(self) -> int:
        return len(self.notes)

    def __iter__(self):
        return iter(self.notes)

    def __getitem__(self, i):
        return self.notes[i]

    @property
    def duration(self) -> float:
        """Time of the last note-off, 0.0 for an empty list."""
        return max((n.offset for n in self.notes), default=0.0)


class _Reader:
    """Bounded cursor over a byte window; every overrun is a MalformedFileError."""

    __slots__ = ("data", "pos", "end")

    def __init__(self, data: bytes, start: int, end: int):
        self.data = data
        self.pos = start
        self.end = end

    def at_end(self) -> bool:
        return self.pos >= self.end

    def u8(self) -> int:
        if self.pos >= self.end:
            raise MalformedFileError("truncated track data")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def peek(self) -> int:
        if self.pos >= self.end:
            raise MalformedFileError("truncated track data")
        return self.data[self.pos]

    def skip(self, n: int) -> None:
        if n < 0 or self.pos + n > self.end:
            raise MalformedFileError("truncated track data")
        self.pos += n

    def raw(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise MalformedFileError("truncated track data")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def vlq(self) -> int:
        """Variable-length quantity: 7 bits per byte, high bit = continuation."""
        value = 0
        for i in range(_MAX_VLQ_BYTES):
            b = self.u8()
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise MalformedFileError("variable-length quantity longer than 4 bytes")


def _parse_track(data: bytes, start: int, end: int):
    """Walk one MTrk chunk.

    Returns (note_events, tempo_events, end_tick) where note_events are
    (tick, seq, is_on, pitch, velocity) tuples in file order and tempo_events
    are (tick, us_per_quarter).
    """
    r = _Reader(data, start, end)
    tick = 0
    seq = 0
    running: int | None = None
    notes: list[tuple[int, int, bool, int, int]] = []
    tempos: list[tuple[int, int]] = []

    while not r.at_end():
        tick += r.vlq()
        first = r.peek()

        if first == 0xFF:  # meta event
            r.skip(1)
            meta_type = r.u8()
            length = r.vlq()
            payload = r.raw(length)
            running = None
            if meta_type == 0x51 and length == 3:
                tempos.append((tick, int.from_bytes(payload, "big")))
            elif meta_type == 0x2F:
                break  # end of track
            continue

        if first in (0xF0, 0xF7):  # sysex: length-prefixed payload, skip
            r.skip(1)
            r.skip(r.vlq())
            running = None
            continue

        if first & 0x80:
            status = r.u8()
            if status >= 0xF0:
                raise MalformedFileError(f"unexpected status byte 0x{status:02x}")
            running = status
        elif running is None:
            raise MalformedFileError("data byte with no running status")
        else:
            status = running

        kind = status & 0xF0
        n_data = 1 if kind in (0xC0, 0xD0) else 2
        d1 = r.u8()
        d2 = r.u8() if n_data == 2 else 0
        if d1 & 0x80 or d2 & 0x80:
            raise MalformedFileError("data byte with high bit set")

        if kind == 0x90 and d2 > 0:
            notes.append((tick, seq, True, d1, d2))
            seq += 1
        elif kind == 0x80 or (kind == 0x90 and d2 == 0):
            notes.append((tick, seq, False, d1, 0))
            seq += 1

    return notes, tempos, tick


class _TickClock:
    """Converts absolute ticks to seconds under a piecewise-constant tempo map."""

    def __init__(self, tempos: list[tuple[int, int]], ticks_per_quarter: int):
        segs: list[tuple[int, float, int]] = [(0, 0.0, DEFAULT_TEMPO_US)]
        for tick, uspq in sorted(tempos, key=lambda t: t[0]):
            prev_tick, prev_sec, prev_uspq = segs[-1]
            sec = prev_sec + (tick - prev_tick) * prev_uspq / (ticks_per_quarter * 1e6)
            if tick == prev_tick:
                segs[-1] = (tick, prev_sec, uspq)  # same-tick tempo change: last wins
            else:
                segs.append((tick, sec, uspq))
        self._segs = segs
        self._tpq = ticks_per_quarter

    def seconds(self, tick: int) -> float:
        lo, hi = 0, len(self._segs) - 1
        while lo < hi:  # last segment with start <= tick
            mid = (lo + hi + 1) // 2
            if self._segs[mid][0] <= tick:
                lo = mid
            else:
                hi = mid - 1
        seg_tick, seg_sec, uspq = self._segs[lo]
        return seg_sec + (tick - seg_tick) * uspq / (self._tpq * 1e6)


def parse_midi(data: bytes, source_name: str = "") -> NoteList:
    """Parse SMF bytes into a merged, seconds-based NoteList.

    All tracks are merged into one stream before note-on/note-off pairing, so
    a format-1 file and its flattened format-0 equivalent produce the same
    notes.  A note-on with velocity 0 releases; a repeated note-on for an
    already-sounding pitch releases the earlier note at the re-strike time;
    notes still open when the file ends are released at the end of the last
    track.  Pitches outside the piano range are dropped.

    Raises MalformedFileError for structural damage and UnsupportedFormatError
    for format-2 files and SMPTE time division.
    """
    if len(data) < 14 or data[:4] != b"MThd":
        raise MalformedFileError("missing MThd header")
    header_len = struct.unpack(">I", data[4:8])[0]
    if header_len < 6 or 8 + header_len > len(data):
        raise MalformedFileError("bad header chunk length")
    fmt, n_tracks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise UnsupportedFormatError(f"SMF format {fmt} is not supported")
    if division & 0x8000:
        raise UnsupportedFormatError("SMPTE time division is not supported")
    if division == 0:
        raise MalformedFileError("zero ticks per quarter note")

    # Chunk scan: collect MTrk windows, skip alien chunks.
    track_spans: list[tuple[int, int]] = []
    pos = 8 + header_len
    while pos + 8 <= len(data):
        chunk_type = data[pos : pos + 4]
        length = struct.unpack(">I", data[pos + 4 : pos + 8])[0]
        if pos + 8 + length > len(data):
            raise MalformedFileError("truncated chunk")
        if chunk_type == b"MTrk":
            track_spans.append((pos + 8, pos + 8 + length))
        pos += 8 + length
    if len(track_spans) < n_tracks:
        raise MalformedFileError(
            f"header declares {n_tracks} tracks, found {len(track_spans)}"
        )

    all_events: list[tuple[int, int, int, bool, int, int]] = []
    tempos: list[tuple[int, int]] = []
    end_tick = 0
    for track_idx, (start, end) in enumerate(track_spans):
        notes, track_tempos, track_end = _parse_track(data, start, end)
        tempos.extend(track_tempos)
        end_tick = max(end_tick, track_end)
        all_events.extend(
            (tick, track_idx, seq, is_on, pitch, vel)
            for tick, seq, is_on, pitch, vel in notes
        )
    all_events.sort(key=lambda e: (e[0], e[1], e[2]))

    clock = _TickClock(tempos, division)
    open_notes: dict[int, tuple[float, int]] = {}
    notes: list[Note] = []

    def close(pitch: int, offset: float) -> None:
        onset, velocity = open_notes.pop(pitch)
        if offset > onset:
            notes.append(Note(pitch, onset, offset, velocity))

    for tick, _track, _seq, is_on, pitch, velocity in all_events:
        if not PIANO_MIN_PITCH <= pitch <= PIANO_MAX_PITCH:
            continue
        t = clock.seconds(tick)
        if is_on:
            if pitch in open_notes:
                close(pitch, t)
            open_notes[pitch] = (t, velocity)
        elif pitch in open_notes:
            close(pitch, t)

    final = clock.seconds(end_tick)
    for pitch in sorted(open_notes):
        close(pitch, final)

    return NoteList(notes, ticks_per_quarter=division, source_name=source_name)


def _vlq_bytes(value: int) -> bytes:
    out = bytearray([value & 0x7F])
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def write_midi(notes: NoteList) -> bytes:
    """Serialize a NoteList as a single-track format-0 file at fixed 120 BPM.

    480 ticks per quarter at 120 BPM puts 960 ticks in a second, so times
    survive a write/parse round trip to within half a tick.
    """
    ticks_per_second = WRITE_TICKS_PER_QUARTER * 1e6 / DEFAULT_TEMPO_US
    events: list[tuple[int, int, int, int]] = []  # (tick, off=0/on=1, pitch, vel)
    for n in notes:
        events.append((int(n.onset * ticks_per_second + 0.5), 1, n.pitch, n.velocity))
        events.append((int(n.offset * ticks_per_second + 0.5), 0, n.pitch, 0))
    events.sort()

    track = bytearray()
    track += b"\x00\xff\x51\x03" + DEFAULT_TEMPO_US.to_bytes(3, "big")
    last_tick = 0
    for tick, is_on, pitch, velocity in events:
        track += _vlq_bytes(tick - last_tick)
        track += bytes([0x90 if is_on else 0x80, pitch, velocity])
        last_tick = tick
    track += b"\x00\xff\x2f\x00"

    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, WRITE_TICKS_PER_QUARTER)
    return header + b"MTrk" + struct.pack(">I", len(track)) + bytes(track)

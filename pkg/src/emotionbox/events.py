"""Performance-event vocabulary and the NoteList <-> event codec.

Music is represented as a stream drawn from 240 symbols: 88 note-ons and 88
note-offs covering the piano, 32 time shifts in 31.25 ms quanta (up to one
second per event), and 32 velocity bins that restyle every following note-on.
Index layout, in order: note-ons 0-87 (pitch - 21), note-offs 88-175,
time shifts 176-207 (1-32 quanta), velocity bins 208-239.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .midi_io import PIANO_MAX_PITCH, PIANO_MIN_PITCH, Note, NoteList

TIME_QUANTUM = 1.0 / 32.0  # seconds advanced per time-shift quantum
MAX_SHIFT_QUANTA = 32
NUM_PITCHES = PIANO_MAX_PITCH - PIANO_MIN_PITCH + 1  # 88
NUM_VELOCITY_BINS = 32
VOCABULARY_SIZE = 2 * NUM_PITCHES + MAX_SHIFT_QUANTA + NUM_VELOCITY_BINS  # 240

NOTE_ON_BASE = 0
NOTE_OFF_BASE = NUM_PITCHES
TIME_SHIFT_BASE = 2 * NUM_PITCHES
VELOCITY_BASE = 2 * NUM_PITCHES + MAX_SHIFT_QUANTA

# Fallback for ill-formed sequences that play a note before any velocity event.
DEFAULT_VELOCITY_BIN = 15


class EventKind(Enum):
    NOTE_ON = "ON"
    NOTE_OFF = "OFF"
    TIME_SHIFT = "SHIFT"
    VELOCITY = "VEL"


@dataclass(frozen=True, slots=True)
class PerformanceEvent:
    """One vocabulary symbol: kind plus its pitch, quantum count, or bin."""

    kind: EventKind
    value: int

    def __post_init__(self) -> None:
        if self.kind in (EventKind.NOTE_ON, EventKind.NOTE_OFF):
            if not PIANO_MIN_PITCH <= self.value <= PIANO_MAX_PITCH:
                raise ValueError(f"{self.kind.value} pitch {self.value} out of range")
        elif self.kind is EventKind.TIME_SHIFT:
            if not 1 <= self.value <= MAX_SHIFT_QUANTA:
                raise ValueError(f"time shift of {self.value} quanta out of range")
        elif not 0 <= self.value < NUM_VELOCITY_BINS:
            raise ValueError(f"velocity bin {self.value} out of range")

    def __str__(self) -> str:
        return f"{self.kind.value} {self.value}"


def event_index(event: PerformanceEvent) -> int:
    """Map an event to its integer index in [0, 239]."""
    if event.kind is EventKind.NOTE_ON:
        return NOTE_ON_BASE + event.value - PIANO_MIN_PITCH
    if event.kind is EventKind.NOTE_OFF:
        return NOTE_OFF_BASE + event.value - PIANO_MIN_PITCH
    if event.kind is EventKind.TIME_SHIFT:
        return TIME_SHIFT_BASE + event.value - 1
    return VELOCITY_BASE + event.value


def index_to_event(index: int) -> PerformanceEvent:
    """Inverse of event_index."""
    if not 0 <= index < VOCABULARY_SIZE:
        raise ValueError(f"event index {index} outside [0, {VOCABULARY_SIZE - 1}]")
    if index < NOTE_OFF_BASE:
        return PerformanceEvent(EventKind.NOTE_ON, index + PIANO_MIN_PITCH)
    if index < TIME_SHIFT_BASE:
        return PerformanceEvent(EventKind.NOTE_OFF, index - NOTE_OFF_BASE + PIANO_MIN_PITCH)
    if index < VELOCITY_BASE:
        return PerformanceEvent(EventKind.TIME_SHIFT, index - TIME_SHIFT_BASE + 1)
    return PerformanceEvent(EventKind.VELOCITY, index - VELOCITY_BASE)


def events_to_indices(events: Iterable[PerformanceEvent]) -> list[int]:
    return [event_index(e) for e in events]


def indices_to_events(indices: Iterable[int]) -> list[PerformanceEvent]:
    return [index_to_event(int(i)) for i in indices]


def _quantize(seconds: float) -> int:
    # Half-up rounding keeps the absolute clock within half a quantum of truth.
    return int(seconds / TIME_QUANTUM + 0.5)


def _shift_events(delta_quanta: int) -> list[PerformanceEvent]:
    out = [
        PerformanceEvent(EventKind.TIME_SHIFT, MAX_SHIFT_QUANTA)
        for _ in range(delta_quanta // MAX_SHIFT_QUANTA)
    ]
    remainder = delta_quanta % MAX_SHIFT_QUANTA
    if remainder:
        out.append(PerformanceEvent(EventKind.TIME_SHIFT, remainder))
    return out


def encode(notes: NoteList) -> list[PerformanceEvent]:
    """Encode notes as a performance-event sequence.

    Every onset and release is quantized against the absolute timeline so
    rounding never accumulates across a piece.  At one instant, releases come
    before onsets (both in ascending pitch order), which keeps back-to-back
    re-strikes of a pitch decodable.  A velocity event is emitted only when a
    note's bin differs from the bin already in force.
    """
    points: list[tuple[int, int, int, int]] = []  # (quanta, off=0/on=1, pitch, vel)
    for n in notes:
        points.append((_quantize(n.onset), 1, n.pitch, n.velocity))
        points.append((_quantize(n.offset), 0, n.pitch, 0))
    points.sort()

    out: list[PerformanceEvent] = []
    clock = 0
    active_bin: int | None = None
    for quanta, is_on, pitch, velocity in points:
        if quanta > clock:
            out.extend(_shift_events(quanta - clock))
            clock = quanta
        if is_on:
            velocity_bin = velocity // 4
            if velocity_bin != active_bin:
                out.append(PerformanceEvent(EventKind.VELOCITY, velocity_bin))
                active_bin = velocity_bin
            out.append(PerformanceEvent(EventKind.NOTE_ON, pitch))
        else:
            out.append(PerformanceEvent(EventKind.NOTE_OFF, pitch))
    return out


def decode(events: Sequence[PerformanceEvent], source_name: str = "decoded") -> NoteList:
    """Replay events into a NoteList.  Tolerant: never raises on event content.

    A note-off with nothing sounding is ignored, a repeated note-on releases
    the earlier note first, zero-length notes are dropped, and anything still
    sounding at the end is released one quantum after the final clock.
    Velocity bins map back to MIDI as 4 * bin + 2 (the bin midpoint).
    """
    clock = 0
    velocity_bin = DEFAULT_VELOCITY_BIN
    open_notes: dict[int, tuple[int, int]] = {}  # pitch -> (onset quanta, midi vel)
    notes: list[Note] = []

    def close(pitch: int, quanta: int) -> None:
        onset, velocity = open_notes.pop(pitch)
        if quanta > onset:
            notes.append(
                Note(pitch, onset * TIME_QUANTUM, quanta * TIME_QUANTUM, velocity)
            )

    for e in events:
        if e.kind is EventKind.TIME_SHIFT:
            clock += e.value
        elif e.kind is EventKind.VELOCITY:
            velocity_bin = e.value
        elif e.kind is EventKind.NOTE_ON:
            if e.value in open_notes:
                close(e.value, clock)
            velocity = min(127, max(1, 4 * velocity_bin + 2))
            open_notes[e.value] = (clock, velocity)
        elif e.value in open_notes:
            close(e.value, clock)

    for pitch in sorted(open_notes):
        close(pitch, clock + 1)

    return NoteList(notes, source_name=source_name)


def format_events(events: Iterable[PerformanceEvent]) -> str:
    """One event per line, e.g. ``ON 60`` / ``SHIFT 16`` / ``VEL 16``."""
    return "".join(f"{e}\n" for e in events)


def parse_events(text: str) -> list[PerformanceEvent]:
    """Inverse of format_events.  Raises ValueError on an unrecognized line."""
    kinds = {k.value: k for k in EventKind}
    out: list[PerformanceEvent] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in kinds:
            raise ValueError(f"line {lineno}: cannot parse event {line!r}")
        try:
            value = int(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: bad event value {parts[1]!r}") from None
        out.append(PerformanceEvent(kinds[parts[0]], value))
    return out

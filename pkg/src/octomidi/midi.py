"""Standard MIDI File reading and writing.

Parses SMF format 0/1 byte streams into a track-merged, note-level
:class:`Score` and writes Scores back out as single-track format 0 files.
Only the events the octuple encoding can represent are kept: notes, tempo
changes, and time signatures. Control changes, pitch bends, and pedal
events are discarded on read.

Irregular input policy (the common cleanups for real-world corpora):

* a note-on with velocity 0 is a note-off;
* a note-on arriving while the same (channel, pitch) is already sounding
  truncates the earlier note at the new onset;
* notes still open at end of track are closed there;
* zero-length notes are stretched to one tick.

All such repairs are counted in a :class:`ParseReport`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import MalformedFileError, UnsupportedFormatError

DEFAULT_TEMPO_BPM = 120.0
DEFAULT_TIMESIG = (4, 4)

_HEADER = struct.Struct(">4sIHHH")
_CHUNK = struct.Struct(">4sI")


@dataclass(frozen=True)
class NoteEvent:
    """One resolved note: onset/duration in ticks plus MIDI attributes."""

    onset_ticks: int
    duration_ticks: int
    pitch: int
    velocity: int
    channel: int = 0
    program: int = 0

    def __post_init__(self) -> None:
        if self.onset_ticks < 0:
            raise ValueError(f"negative onset {self.onset_ticks}")
        if self.duration_ticks < 1:
            raise ValueError(f"duration must be >= 1, got {self.duration_ticks}")
        for name, hi in (("pitch", 127), ("velocity", 127), ("channel", 15), ("program", 127)):
            v = getattr(self, name)
            if not 0 <= v <= hi:
                raise ValueError(f"{name} {v} out of range 0..{hi}")


@dataclass(frozen=True)
class TempoEvent:
    at_ticks: int
    bpm: float

    def __post_init__(self) -> None:
        if self.at_ticks < 0:
            raise ValueError("negative tick")
        if not 1.0 <= self.bpm <= 1000.0:
            raise ValueError(f"bpm {self.bpm} outside [1, 1000]")


@dataclass(frozen=True)
class TimeSigEvent:
    at_ticks: int
    numerator: int
    denominator: int

    def __post_init__(self) -> None:
        if self.at_ticks < 0:
            raise ValueError("negative tick")
        if self.numerator < 1:
            raise ValueError("numerator must be >= 1")
        d = self.denominator
        if d < 1 or d & (d - 1):
            raise ValueError(f"denominator {d} is not a power of two")


@dataclass(frozen=True)
class Score:
    """Quantized, track-merged view of one MIDI file.

    ``notes`` are sorted by (onset, pitch, channel, ...); ``tempos`` and
    ``timesigs`` are sorted by tick and always start at tick 0 (defaults are
    synthesized when the file has no event there).
    """

    ticks_per_quarter: int
    notes: tuple[NoteEvent, ...] = ()
    tempos: tuple[TempoEvent, ...] = (TempoEvent(0, DEFAULT_TEMPO_BPM),)
    timesigs: tuple[TimeSigEvent, ...] = (TimeSigEvent(0, *DEFAULT_TIMESIG),)

    def __post_init__(self) -> None:
        if self.ticks_per_quarter < 1:
            raise ValueError("ticks_per_quarter must be >= 1")
        object.__setattr__(self, "notes", tuple(sorted(self.notes, key=_note_key)))
        object.__setattr__(self, "tempos", tuple(self.tempos))
        object.__setattr__(self, "timesigs", tuple(self.timesigs))
        for name in ("tempos", "timesigs"):
            evs = getattr(self, name)
            if not evs or evs[0].at_ticks != 0:
                raise ValueError(f"{name} must begin with an event at tick 0")
            ticks = [e.at_ticks for e in evs]
            if ticks != sorted(ticks):
                raise ValueError(f"{name} not sorted by tick")


@dataclass
class ParseReport:
    """Counters for the repairs applied while parsing one file."""

    unpaired_closed: int = 0
    overlaps_truncated: int = 0
    notes_dropped: int = 0
    zero_durations_clamped: int = 0
    orphan_note_offs: int = 0


def _note_key(n: NoteEvent) -> tuple:
    return (n.onset_ticks, n.pitch, n.channel, n.duration_ticks, n.velocity, n.program)


def _read_varlen(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    for _ in range(4):
        if pos >= len(data):
            raise MalformedFileError("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MalformedFileError("variable-length quantity longer than 4 bytes")


def _iter_chunks(data: bytes):
    pos = 0
    while pos < len(data):
        if len(data) - pos < 8:
            # Trailing junk shorter than a chunk header: ignore.
            return
        tag, length = _CHUNK.unpack_from(data, pos)
        pos += 8
        if pos + length > len(data):
            raise MalformedFileError(f"chunk {tag!r} truncated")
        yield tag, data[pos : pos + length]
        pos += length


class _OpenNote:
    __slots__ = ("onset", "velocity", "program")

    def __init__(self, onset: int, velocity: int, program: int) -> None:
        self.onset = onset
        self.velocity = velocity
        self.program = program


def _close(notes: list, onset: int, end: int, pitch: int, velocity: int,
           channel: int, program: int, report: ParseReport) -> None:
    duration = end - onset
    if duration <= 0:
        duration = 1
        report.zero_durations_clamped += 1
    notes.append(NoteEvent(onset, duration, pitch, velocity, channel, program))


def _parse_track(data: bytes, notes: list, tempos: list, timesigs: list,
                 report: ParseReport) -> None:
    pos = 0
    tick = 0
    running = None
    open_notes: dict[tuple[int, int], _OpenNote] = {}
    programs = [0] * 16

    while pos < len(data):
        delta, pos = _read_varlen(data, pos)
        tick += delta
        if pos >= len(data):
            raise MalformedFileError("event truncated after delta time")
        status = data[pos]
        if status & 0x80:
            pos += 1
            if status < 0xF0:
                running = status
        else:
            if running is None:
                raise MalformedFileError("running status with no prior status byte")
            status = running

        if status == 0xFF:
            if pos >= len(data):
                raise MalformedFileError("truncated meta event")
            meta_type = data[pos]
            length, pos = _read_varlen(data, pos + 1)
            if pos + length > len(data):
                raise MalformedFileError("meta event data truncated")
            payload = data[pos : pos + length]
            pos += length
            if meta_type == 0x2F:  # end of track
                break
            if meta_type == 0x51 and length >= 3:
                mpq = int.from_bytes(payload[:3], "big")
                if mpq > 0:
                    tempos.append((tick, 60_000_000.0 / mpq))
            elif meta_type == 0x58 and length >= 2:
                numerator = payload[0]
                denominator = 1 << payload[1]
                if numerator >= 1:
                    timesigs.append((tick, numerator, denominator))
        elif status in (0xF0, 0xF7):
            length, pos = _read_varlen(data, pos)
            pos += length
            if pos > len(data):
                raise MalformedFileError("sysex data truncated")
        elif status >= 0xF1:
            raise MalformedFileError(f"unexpected system message 0x{status:02X} in track")
        else:
            kind = status & 0xF0
            channel = status & 0x0F
            n_data = 1 if kind in (0xC0, 0xD0) else 2
            if pos + n_data > len(data):
                raise MalformedFileError("channel event data truncated")
            d1 = data[pos] & 0x7F
            d2 = data[pos + 1] & 0x7F if n_data == 2 else 0
            pos += n_data
            if kind == 0xC0:
                programs[channel] = d1
            elif kind == 0x90 and d2 > 0:
                key = (channel, d1)
                prior = open_notes.get(key)
                if prior is not None:
                    if tick > prior.onset:
                        _close(notes, prior.onset, tick, d1, prior.velocity,
                               channel, prior.program, report)
                        report.overlaps_truncated += 1
                    else:
                        report.notes_dropped += 1
                open_notes[key] = _OpenNote(tick, d2, programs[channel])
            elif kind == 0x80 or kind == 0x90:  # explicit off, or on with velocity 0
                prior = open_notes.pop((channel, d1), None)
                if prior is None:
                    report.orphan_note_offs += 1
                else:
                    _close(notes, prior.onset, tick, d1, prior.velocity,
                           channel, prior.program, report)
            # Aftertouch, controllers, channel pressure, pitch bend: skipped.

    for (channel, pitch), prior in sorted(open_notes.items()):
        report.unpaired_closed += 1
        _close(notes, prior.onset, max(tick, prior.onset + 1), pitch, prior.velocity,
               channel, prior.program, report)


def _dedupe(events: list[tuple], default: tuple) -> list[tuple]:
    """Sort by tick keeping the last event at each tick; anchor tick 0."""
    out: dict[int, tuple] = {}
    for ev in sorted(events, key=lambda e: e[0]):
        out[ev[0]] = ev
    if 0 not in out:
        out[0] = default
    return [out[t] for t in sorted(out)]


def parse_midi_report(data: bytes) -> tuple[Score, ParseReport]:
    """Parse SMF bytes, returning the Score together with repair counters."""
    if len(data) < 14 or data[:4] != b"MThd":
        raise MalformedFileError("missing MThd header")
    _, hlen, fmt, _, division = _HEADER.unpack_from(data, 0)
    if hlen < 6:
        raise MalformedFileError("header chunk too short")
    if fmt == 2:
        raise UnsupportedFormatError("SMF format 2 has no common timeline")
    if fmt not in (0, 1):
        raise UnsupportedFormatError(f"unknown SMF format {fmt}")
    if division & 0x8000:
        raise UnsupportedFormatError("SMPTE time division not supported")
    if division == 0:
        raise MalformedFileError("zero ticks per quarter")

    report = ParseReport()
    notes: list[NoteEvent] = []
    tempos: list[tuple] = []
    timesigs: list[tuple] = []
    for tag, chunk in _iter_chunks(data[8 + hlen :]):
        if tag != b"MTrk":
            continue  # alien chunks are legal and skipped
        _parse_track(chunk, notes, tempos, timesigs, report)

    score = Score(
        ticks_per_quarter=division,
        notes=tuple(notes),
        tempos=tuple(TempoEvent(t, bpm) for t, bpm in
                     _dedupe(tempos, (0, DEFAULT_TEMPO_BPM))),
        timesigs=tuple(TimeSigEvent(t, n, d) for t, n, d in
                       _dedupe(timesigs, (0, *DEFAULT_TIMESIG))),
    )
    return score, report


def parse_midi(data: bytes) -> Score:
    """Parse SMF format 0/1 bytes into a Score."""
    return parse_midi_report(data)[0]


def _write_varlen(value: int) -> bytes:
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(chunks))


def write_midi(score: Score) -> bytes:
    """Serialize a Score as a single-track SMF format 0 file.

    Every event gets an explicit status byte (no running status), so the
    output is byte-reproducible. Program changes are injected immediately
    before any note-on whose program differs from the channel's current one.
    """
    # (tick, priority, sort key, payload); priority fixes same-tick ordering:
    # tempo < timesig < note-off < note-on.
    events: list[tuple[int, int, tuple, bytes]] = []
    for ev in score.tempos:
        mpq = round(60_000_000.0 / ev.bpm)
        events.append((ev.at_ticks, 0, (), b"\xff\x51\x03" + mpq.to_bytes(3, "big")))
    for ts in score.timesigs:
        dd = ts.denominator.bit_length() - 1
        events.append((ts.at_ticks, 1, (), bytes((0xFF, 0x58, 0x04, ts.numerator, dd, 24, 8))))
    for i, note in enumerate(score.notes):
        off = bytes((0x80 | note.channel, note.pitch, 0))
        events.append((note.onset_ticks + note.duration_ticks, 2, (note.channel, note.pitch), off))
        events.append((note.onset_ticks, 3, (note.channel, note.pitch, i), b""))

    events.sort(key=lambda e: (e[0], e[1], e[2]))
    track = bytearray()
    programs = [0] * 16
    last_tick = 0
    for tick, priority, key, payload in events:
        if priority == 3:
            note = score.notes[key[2]]
            if programs[note.channel] != note.program:
                track += _write_varlen(tick - last_tick)
                track += bytes((0xC0 | note.channel, note.program))
                programs[note.channel] = note.program
                last_tick = tick
            payload = bytes((0x90 | note.channel, note.pitch, note.velocity))
        track += _write_varlen(tick - last_tick)
        track += payload
        last_tick = tick
    track += _write_varlen(0) + b"\xff\x2f\x00"

    header = _HEADER.pack(b"MThd", 6, 0, 1, score.ticks_per_quarter)
    return header + _CHUNK.pack(b"MTrk", len(track)) + bytes(track)

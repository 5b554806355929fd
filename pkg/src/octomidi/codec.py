"""Encoding between :class:`~octomidi.midi.Score` objects and octuple tokens.

A token sequence is an ``(L, 8)`` int64 array, one row per note, columns
ordered as in :class:`~octomidi.vocab.Field`. Rows follow the score's note
order (onset, then pitch). Time is quantized to a 64th-note grid: a quarter
note spans 16 grid steps. Bar boundaries are computed exactly with
:mod:`fractions`, so irregular time-signature segments cannot drift.

``decode_tokens`` lays bars out from each bar's time signature (taken from
its first token, carried over empty bars), which makes
``encode(decode(encode(s)))`` reproduce ``encode(s)`` bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil

import numpy as np

from .errors import (
    BarOverflowError,
    MaskedTokenPresentError,
    OutOfVocabularyError,
    UnsupportedTimeSigError,
)
from .midi import NoteEvent, Score, TempoEvent, TimeSigEvent
from .vocab import (
    BOS,
    EOS,
    MASK,
    MAX_BARS,
    MAX_DURATION,
    MAX_POSITION,
    PAD,
    VALUE_OFFSET,
    VOCABS,
    Field,
    supported_timesig,
)

N_FIELDS = len(Field)

# One sixty-fourth note in quarters.
_STEP = Fraction(1, 16)
DECODE_TICKS_PER_QUARTER = 480
_TICKS_PER_STEP = DECODE_TICKS_PER_QUARTER // 16


@dataclass
class EncodeReport:
    """Counts of lossy clamps applied while encoding."""

    positions_clamped: int = 0
    durations_clamped: int = 0


def bar_length_64(numerator: int, denominator: int) -> int:
    """Length of one bar in 64th-note steps."""
    return numerator * 64 // denominator


def _empty_tokens() -> np.ndarray:
    return np.empty((0, N_FIELDS), dtype=np.int64)


def _timesig_segments(score: Score):
    """(start_tick, numerator, denominator, first_bar_index) per segment.

    A time-signature change always starts a new bar; a partial bar before
    the change still counts as one full bar index.
    """
    segments = []
    bars_before = 0
    events = score.timesigs
    for i, ev in enumerate(events):
        if not supported_timesig(ev.numerator, ev.denominator):
            raise UnsupportedTimeSigError(
                f"{ev.numerator}/{ev.denominator} at tick {ev.at_ticks} is outside "
                "the supported grid (denominator 2/4/8/16, numerator 1..16)"
            )
        segments.append((ev.at_ticks, ev.numerator, ev.denominator, bars_before))
        if i + 1 < len(events):
            seg_ticks = events[i + 1].at_ticks - ev.at_ticks
            bar_ticks = Fraction(ev.numerator * 4 * score.ticks_per_quarter, ev.denominator)
            bars_before += max(1, ceil(Fraction(seg_ticks) / bar_ticks))
    return segments


def encode_unbounded(score: Score) -> tuple[np.ndarray, EncodeReport]:
    """Encode without the bar cap: bar ids may run past the vocabulary.

    The bar column stores ``VALUE_OFFSET + absolute_bar`` for arbitrarily
    long scores. Window and rebase the rows (see the pipeline module)
    before treating them as a token sequence.
    """
    report = EncodeReport()
    if not score.notes:
        return _empty_tokens(), report

    tpq = score.ticks_per_quarter
    segments = _timesig_segments(score)
    tempos = score.tempos
    instrument_id = VOCABS[Field.INSTRUMENT].to_id(0)

    rows = np.empty((len(score.notes), N_FIELDS), dtype=np.int64)
    seg_i = 0
    tempo_i = 0
    for row, note in zip(rows, score.notes):
        t = note.onset_ticks
        while seg_i + 1 < len(segments) and segments[seg_i + 1][0] <= t:
            seg_i += 1
        while tempo_i + 1 < len(tempos) and tempos[tempo_i + 1].at_ticks <= t:
            tempo_i += 1
        seg_start, num, den, seg_first_bar = segments[seg_i]
        bar_ticks = Fraction(num * 4 * tpq, den)
        bar_in_seg = int(Fraction(t - seg_start) / bar_ticks)
        bar = seg_first_bar + bar_in_seg

        offset_ticks = Fraction(t - seg_start) - bar_in_seg * bar_ticks
        position = round(offset_ticks * 16 / tpq)
        if position > MAX_POSITION:
            position = MAX_POSITION
            report.positions_clamped += 1

        duration = round(Fraction(note.duration_ticks * 16, tpq))
        if duration < 1:
            duration = 1
        elif duration > MAX_DURATION:
            duration = MAX_DURATION
            report.durations_clamped += 1

        row[Field.TIMESIG] = VOCABS[Field.TIMESIG].to_id((num, den))
        row[Field.TEMPO] = VOCABS[Field.TEMPO].to_id(tempos[tempo_i].bpm)
        row[Field.BAR] = VALUE_OFFSET + bar
        row[Field.POSITION] = VOCABS[Field.POSITION].to_id(position)
        row[Field.INSTRUMENT] = instrument_id
        row[Field.PITCH] = VOCABS[Field.PITCH].to_id(note.pitch)
        row[Field.DURATION] = VOCABS[Field.DURATION].to_id(duration)
        row[Field.VELOCITY] = VOCABS[Field.VELOCITY].to_id(note.velocity)
    return rows, report


def encode_score_report(score: Score) -> tuple[np.ndarray, EncodeReport]:
    """Encode a score, returning the tokens plus clamp statistics."""
    rows, report = encode_unbounded(score)
    if len(rows) and rows[-1, Field.BAR] - VALUE_OFFSET >= MAX_BARS:
        bar = int(rows[-1, Field.BAR] - VALUE_OFFSET)
        raise BarOverflowError(
            f"score spans {bar + 1} bars; only {MAX_BARS} fit in one sequence "
            "(segment the score first)"
        )
    return rows, report


def encode_score(score: Score) -> np.ndarray:
    """Encode a score into an ``(L, 8)`` token array."""
    return encode_score_report(score)[0]


def validate_tokens(tokens, allow_special: bool = False) -> np.ndarray:
    """Check shape, dtype and per-field id ranges; return an int64 array.

    With ``allow_special=False`` any PAD/BOS/EOS id raises
    :class:`OutOfVocabularyError` and any MASK id raises
    :class:`MaskedTokenPresentError`, since most operations are only
    defined on fully concrete musical tokens. With ``allow_special=True``
    rows must still be well-formed: PAD/BOS/EOS fill a whole row or do not
    appear in it, and MASK only ever replaces individual musical cells.
    """
    arr = np.asarray(tokens)
    if arr.ndim != 2 or arr.shape[1] != N_FIELDS:
        raise OutOfVocabularyError(
            f"token array must have shape (L, {N_FIELDS}), got {arr.shape}"
        )
    if not np.issubdtype(arr.dtype, np.integer):
        raise OutOfVocabularyError(f"token ids must be integers, got dtype {arr.dtype}")
    arr = arr.astype(np.int64, copy=False)
    if arr.size == 0:
        return arr.reshape(0, N_FIELDS)
    for f in Field:
        col = arr[:, f]
        bad = (col < 0) | (col >= VOCABS[f].size)
        if bad.any():
            raise OutOfVocabularyError(
                f"{f.name} id {int(col[bad][0])} out of range 0..{VOCABS[f].size - 1}"
            )
    if allow_special:
        # PAD/BOS/EOS are row markers, never per-cell values.
        markers = (arr == PAD) | (arr == BOS) | (arr == EOS)
        partial = markers.any(axis=1) & ~markers.all(axis=1)
        uniform = (arr == arr[:, :1]).all(axis=1)
        bad_rows = partial | (markers.all(axis=1) & ~uniform)
        if bad_rows.any():
            row = int(np.flatnonzero(bad_rows)[0])
            raise OutOfVocabularyError(
                f"row {row} mixes PAD/BOS/EOS ids with other values; these "
                "specials are only valid as a uniform full row"
            )
    else:
        if (arr == MASK).any():
            where = np.argwhere(arr == MASK)[0]
            raise MaskedTokenPresentError(
                f"mask id at row {int(where[0])}, field {Field(int(where[1])).name}"
            )
        special = arr < VALUE_OFFSET
        if special.any():
            where = np.argwhere(special)[0]
            raise OutOfVocabularyError(
                f"special id {int(arr[tuple(where)])} at row {int(where[0])}, "
                f"field {Field(int(where[1])).name}; expected musical ids only"
            )
    return arr


def decode_tokens(tokens) -> Score:
    """Reconstruct a score from octuple tokens.

    Bars are laid out end to end using each bar's time signature: the one
    on the bar's first token, or the previous bar's when no token lands in
    it. Tempo events are emitted wherever the tempo field changes between
    consecutive onsets. The result uses a fixed resolution of
    ``DECODE_TICKS_PER_QUARTER`` ticks so the 64th grid stays exact.
    """
    arr = validate_tokens(tokens)
    if len(arr) == 0:
        return Score(ticks_per_quarter=DECODE_TICKS_PER_QUARTER)

    # Tempo events must come out in tick order, so walk rows by onset.
    order = np.lexsort((arr[:, Field.POSITION], arr[:, Field.BAR]))
    bars = arr[:, Field.BAR] - VALUE_OFFSET
    max_bar = int(bars.max())

    # Time signature per bar: first token wins, gaps carry the last one.
    ts_ids = np.full(max_bar + 1, -1, dtype=np.int64)
    for i in order[::-1]:
        ts_ids[bars[i]] = arr[i, Field.TIMESIG]
    first_seen = ts_ids[ts_ids >= 0][0]
    current = first_seen
    for b in range(max_bar + 1):
        if ts_ids[b] < 0:
            ts_ids[b] = current
        else:
            current = ts_ids[b]

    bar_start64 = np.zeros(max_bar + 2, dtype=np.int64)
    for b in range(max_bar + 1):
        num, den = VOCABS[Field.TIMESIG].to_value(int(ts_ids[b]))
        bar_start64[b + 1] = bar_start64[b] + bar_length_64(num, den)

    timesigs = []
    prev = None
    for b in range(max_bar + 1):
        if ts_ids[b] != prev:
            num, den = VOCABS[Field.TIMESIG].to_value(int(ts_ids[b]))
            timesigs.append(TimeSigEvent(int(bar_start64[b]) * _TICKS_PER_STEP, num, den))
            prev = ts_ids[b]

    notes = []
    tempos = []
    prev_tempo_id = None
    for row in arr[order]:
        onset64 = int(bar_start64[row[Field.BAR] - VALUE_OFFSET]) + int(
            VOCABS[Field.POSITION].to_value(int(row[Field.POSITION]))
        )
        onset = onset64 * _TICKS_PER_STEP
        if int(row[Field.TEMPO]) != prev_tempo_id:
            bpm = VOCABS[Field.TEMPO].to_value(int(row[Field.TEMPO]))
            tempos.append(TempoEvent(onset if tempos else 0, bpm))
            prev_tempo_id = int(row[Field.TEMPO])
        notes.append(
            NoteEvent(
                onset_ticks=onset,
                duration_ticks=VOCABS[Field.DURATION].to_value(int(row[Field.DURATION]))
                * _TICKS_PER_STEP,
                pitch=VOCABS[Field.PITCH].to_value(int(row[Field.PITCH])),
                velocity=VOCABS[Field.VELOCITY].to_value(int(row[Field.VELOCITY])),
                channel=0,
                program=VOCABS[Field.INSTRUMENT].to_value(int(row[Field.INSTRUMENT])),
            )
        )

    return Score(
        ticks_per_quarter=DECODE_TICKS_PER_QUARTER,
        notes=tuple(notes),
        tempos=tuple(tempos),
        timesigs=tuple(timesigs),
    )

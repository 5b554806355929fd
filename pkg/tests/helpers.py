"""Shared builders for tests: token rows by value, random scores, random
token sequences.

The random generators are restricted to inputs where quantization is
exact (onsets and durations on the 64th grid, tempos at representable
values, no over-128-step bars, no same-pitch collisions), so round-trip
comparisons can demand bit equality instead of tolerances.
"""

import numpy as np

from octomidi.midi import NoteEvent, Score, TempoEvent, TimeSigEvent
from octomidi.vocab import MAX_BARS, VALUE_OFFSET, VOCABS, Field

# Time signatures whose bar is at most 128 sixty-fourths keep every
# position on the 0..127 grid.
TOKEN_TS_CHOICES = [
    (num, den)
    for den in (2, 4, 8, 16)
    for num in range(1, 17)
    if num * 64 // den <= 128
]

# For scores, also require bars of at least half a whole note so a fixed
# onset span cannot exceed the 256-bar limit.
SCORE_TS_CHOICES = [(num, den) for num, den in TOKEN_TS_CHOICES
                    if num * 64 // den >= 32]


def token_row(bar=0, pos=0, pitch=60, dur=16, vel=64, ts=(4, 4), bpm=120.0):
    """One octuple row given musical values (velocity/tempo get binned)."""
    return [
        VOCABS[Field.TIMESIG].to_id(tuple(ts)),
        VOCABS[Field.TEMPO].to_id(bpm),
        VALUE_OFFSET + bar,
        VOCABS[Field.POSITION].to_id(pos),
        VOCABS[Field.INSTRUMENT].to_id(0),
        VOCABS[Field.PITCH].to_id(pitch),
        VOCABS[Field.DURATION].to_id(dur),
        VOCABS[Field.VELOCITY].to_id(vel),
    ]


def token_array(rows) -> np.ndarray:
    arr = np.asarray(list(rows), dtype=np.int64)
    return arr.reshape(len(arr), 8) if arr.size else np.empty((0, 8), dtype=np.int64)


def random_tokens(rng, max_bars=10, max_gap=3) -> np.ndarray:
    """A random valid token sequence: sorted, one time signature per bar,
    one tempo per onset, no duplicate (bar, position, pitch)."""
    rows = []
    bar = int(rng.integers(0, 4))
    for _ in range(int(rng.integers(1, max_bars + 1))):
        if bar >= MAX_BARS:
            break
        num, den = TOKEN_TS_CHOICES[int(rng.integers(len(TOKEN_TS_CHOICES)))]
        ts_id = VOCABS[Field.TIMESIG].to_id((num, den))
        bar_len = num * 64 // den
        n_onsets = int(rng.integers(1, min(bar_len, 5) + 1))
        positions = np.sort(rng.choice(bar_len, size=n_onsets, replace=False))
        for pos in positions:
            tempo_id = VALUE_OFFSET + int(rng.integers(32))
            pitches = np.sort(rng.choice(128, size=int(rng.integers(1, 4)),
                                         replace=False))
            for pitch in pitches:
                rows.append([
                    ts_id, tempo_id, VALUE_OFFSET + bar, VALUE_OFFSET + int(pos),
                    VALUE_OFFSET, VALUE_OFFSET + int(pitch),
                    VALUE_OFFSET + int(rng.integers(128)),
                    VALUE_OFFSET + int(rng.integers(32)),
                ])
        bar += int(rng.integers(1, max_gap + 1))
    return token_array(rows)


def repeated_bar_tokens(n_bars, notes_per_bar, rng, ts=(4, 4)) -> np.ndarray:
    """Every bar is an exact copy of a random first bar (same positions,
    pitches, durations, velocities), only the bar ids differ."""
    num, den = ts
    bar_len = num * 64 // den
    positions = np.sort(rng.choice(bar_len, size=notes_per_bar, replace=False))
    pitches = rng.integers(0, 128, size=notes_per_bar)
    durs = rng.integers(0, 128, size=notes_per_bar)
    vels = rng.integers(0, 32, size=notes_per_bar)
    ts_id = VOCABS[Field.TIMESIG].to_id(ts)
    rows = []
    for bar in range(n_bars):
        for p, pi, d, v in zip(positions, pitches, durs, vels):
            rows.append([ts_id, VALUE_OFFSET + 20, VALUE_OFFSET + bar,
                         VALUE_OFFSET + int(p), VALUE_OFFSET,
                         VALUE_OFFSET + int(pi), VALUE_OFFSET + int(d),
                         VALUE_OFFSET + int(v)])
    return token_array(rows)


def random_score(rng, max_span_bars=20) -> Score:
    """A random Score on the exact grid.

    Onsets/durations are multiples of a 64th, time-signature changes land
    on grid ticks, tempos are exact microseconds-per-quarter values, and
    no two notes share (onset, pitch); piano only, channel 0.
    """
    tpq = int(rng.choice([64, 240, 480, 960]))
    step = tpq // 16
    span_steps = int(max_span_bars) * 64

    sig_steps = [0] + sorted(
        int(s) for s in rng.choice(np.arange(1, span_steps), size=int(rng.integers(0, 3)),
                                   replace=False)
    )
    timesigs = tuple(
        TimeSigEvent(s * step, *SCORE_TS_CHOICES[int(rng.integers(len(SCORE_TS_CHOICES)))])
        for s in sig_steps
    )

    tempo_ticks = [0] + sorted(
        int(t) for t in rng.choice(np.arange(1, span_steps * step),
                                   size=int(rng.integers(0, 3)), replace=False)
    )
    tempos = tuple(
        TempoEvent(t, 60_000_000.0 / int(rng.integers(200_000, 3_000_000)))
        for t in tempo_ticks
    )

    onsets = {}
    for _ in range(int(rng.integers(1, 80))):
        key = (int(rng.integers(0, span_steps)), int(rng.integers(0, 128)))
        onsets[key] = (int(rng.integers(1, 129)), int(rng.integers(1, 128)))
    by_pitch: dict[int, list] = {}
    for (onset, pitch), (dur, vel) in sorted(onsets.items()):
        by_pitch.setdefault(pitch, []).append([onset, dur, vel])
    notes = []
    for pitch, items in by_pitch.items():
        for cur, nxt in zip(items, items[1:]):
            cur[1] = min(cur[1], nxt[0] - cur[0])
        notes.extend(
            NoteEvent(onset * step, dur * step, pitch, vel)
            for onset, dur, vel in items
        )
    return Score(ticks_per_quarter=tpq, notes=tuple(notes),
                 tempos=tempos, timesigs=timesigs)

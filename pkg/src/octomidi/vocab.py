"""Field vocabularies for the 8-element octuple token.

Every field shares the same special-id layout — PAD=0, BOS=1, EOS=2,
MASK=3 — with musical value ids starting at 4. The layout is part of the
wire contract: token files written by this package are only meaningful to
consumers that agree on it bit-exactly.

Quantization grids:

* time signature: denominator in {2, 4, 8, 16}, numerator 1..16;
* tempo: 32 log-spaced bins covering 16..256 BPM;
* bar: 0..255;
* position: 0..127 in 64th-of-a-whole-note steps from the bar start;
* instrument: the single value "piano" (program 0);
* pitch: MIDI 0..127;
* duration: 1..128 sixty-fourths (a 64th note up to two whole notes);
* velocity: 32 bins of width 4.
"""

from __future__ import annotations

import math
from enum import IntEnum

from .errors import OutOfVocabularyError

PAD, BOS, EOS, MASK = 0, 1, 2, 3
VALUE_OFFSET = 4

TIMESIG_DENOMINATORS = (2, 4, 8, 16)
TIMESIG_MAX_NUMERATOR = 16
TEMPO_BINS = 32
TEMPO_MIN_BPM, TEMPO_MAX_BPM = 16.0, 256.0
MAX_BARS = 256
MAX_POSITION = 127
MAX_DURATION = 128
VELOCITY_BIN_WIDTH = 4
PIANO_PROGRAM = 0


class Field(IntEnum):
    """Column index of each musical element within a token."""

    TIMESIG = 0
    TEMPO = 1
    BAR = 2
    POSITION = 3
    INSTRUMENT = 4
    PITCH = 5
    DURATION = 6
    VELOCITY = 7


def tempo_bin(bpm: float) -> int:
    """Quantize BPM onto the 32 log-spaced bins (clamping to 16..256)."""
    bpm = min(max(float(bpm), TEMPO_MIN_BPM), TEMPO_MAX_BPM)
    return round((TEMPO_BINS - 1) * (math.log2(bpm) - 4.0) / 4.0)


def tempo_bin_center(b: int) -> float:
    return 2.0 ** (4.0 + 4.0 * b / (TEMPO_BINS - 1))


def velocity_bin(velocity: int) -> int:
    return int(velocity) // VELOCITY_BIN_WIDTH


def velocity_bin_center(b: int) -> int:
    return b * VELOCITY_BIN_WIDTH + VELOCITY_BIN_WIDTH // 2


class FieldVocab:
    """Bijection between one field's musical values and its token ids.

    ``values`` lists the canonical value for every musical id in order, so
    id ``VALUE_OFFSET + i`` maps to ``values[i]``. Continuous inputs (tempo
    in BPM, raw velocity) are quantized by :meth:`to_id` before lookup.
    """

    def __init__(self, field: Field, values: list, quantize=None):
        self.field = field
        self.values = tuple(values)
        self.size = VALUE_OFFSET + len(self.values)
        self._quantize = quantize
        self._index = {v: i for i, v in enumerate(self.values)}

    def __repr__(self) -> str:
        return f"FieldVocab({self.field.name}, size={self.size})"

    def to_id(self, value) -> int:
        if self._quantize is not None:
            return VALUE_OFFSET + self._quantize(value)
        idx = self._index.get(value)
        if idx is None:
            raise OutOfVocabularyError(f"{self.field.name} has no id for value {value!r}")
        return VALUE_OFFSET + idx

    def to_value(self, token_id: int):
        if not VALUE_OFFSET <= token_id < self.size:
            raise OutOfVocabularyError(
                f"id {token_id} is not a musical {self.field.name} id "
                f"(valid range {VALUE_OFFSET}..{self.size - 1})"
            )
        return self.values[token_id - VALUE_OFFSET]


def _build_vocabs() -> tuple[FieldVocab, ...]:
    timesigs = [
        (num, den)
        for den in TIMESIG_DENOMINATORS
        for num in range(1, TIMESIG_MAX_NUMERATOR + 1)
    ]
    return (
        FieldVocab(Field.TIMESIG, timesigs),
        FieldVocab(Field.TEMPO, [tempo_bin_center(b) for b in range(TEMPO_BINS)],
                   quantize=tempo_bin),
        FieldVocab(Field.BAR, list(range(MAX_BARS))),
        FieldVocab(Field.POSITION, list(range(MAX_POSITION + 1))),
        FieldVocab(Field.INSTRUMENT, [PIANO_PROGRAM]),
        FieldVocab(Field.PITCH, list(range(128))),
        FieldVocab(Field.DURATION, list(range(1, MAX_DURATION + 1))),
        FieldVocab(Field.VELOCITY, [velocity_bin_center(b) for b in range(128 // VELOCITY_BIN_WIDTH)],
                   quantize=velocity_bin),
    )


VOCABS: tuple[FieldVocab, ...] = _build_vocabs()
VOCAB_SIZES: tuple[int, ...] = tuple(v.size for v in VOCABS)


def field_vocab(field: Field) -> FieldVocab:
    return VOCABS[field]


def field_id(vocab: FieldVocab, value) -> int:
    """Quantized musical value -> token id."""
    return vocab.to_id(value)


def field_value(vocab: FieldVocab, token_id: int):
    """Token id -> quantized musical value. Special ids are rejected."""
    return vocab.to_value(token_id)


def supported_timesig(numerator: int, denominator: int) -> bool:
    return denominator in TIMESIG_DENOMINATORS and 1 <= numerator <= TIMESIG_MAX_NUMERATOR

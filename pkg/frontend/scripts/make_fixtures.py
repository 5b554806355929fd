"""Builds the fixture corpus and pair files for the trainer tests.

The corpus is 200 short pieces, each a 2-bar motif repeated over 6 bars
with a controlled variation: every repetition transposes the pitch line
by a fixed per-piece drift and advances the velocity sawtooth phase by
a fixed per-piece amount. Within a bar, pitch always climbs by the same global step of 2
and velocity follows a global sawtooth, so a single masked cell is
pinned exactly by its intact neighbours through one shared local rule,
and a masked span still has usable context at its edges, while a whole
masked bar can only be reconstructed by combining the repetition two
bars away with the piece's drift rule. That gives the three masking granularities a real
difficulty gradient (cell < span < bar). Pieces are written as MIDI,
segmented with the octomidi CLI, and turned into:

  identity.pairs.txt     source == target, no corruption
  element.pairs.txt      cell-level masking, ratio 0.15
  nbar.pairs.txt         n-bar span masking, ratio 0.15
  bar.pairs.txt          whole-bar masking, ratio 0.15
  cli_mixed.pairs.txt    `octomidi corrupt` over all corruption kinds

All three masking files pass the same requested ratio to the selection
pipeline. The realized masked volume differs by method (span and bar
selection quantize whole units upward); that overshoot is part of what
each granularity does to a piece, so it is deliberately not
compensated for.

Run from the frontend/ directory: python3 scripts/make_fixtures.py
"""

import pathlib
import subprocess
import sys
import tempfile

import numpy as np
from octomidi import (
    CorruptionKind,
    CorruptionPair,
    NoteEvent,
    Score,
    SelectionMethod,
    TempoEvent,
    TimeSigEvent,
    apply_corruption,
    dumps_pairs,
    loads_segments,
    select,
    write_midi,
)
from octomidi.vocab import MASK

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
PIECES = 200
BARS = 6
TEMPOS = (96.0, 120.0, 144.0)


def make_piece(rng: np.random.Generator) -> bytes:
    drift = int(rng.choice((-2, -1, 1, 2)))
    vel_phase = int(rng.integers(0, 8))
    vel_adv = int(rng.integers(1, 8))
    motif = []
    for _ in range(2):
        k = int(rng.integers(3, 6))
        steps = np.sort(rng.choice(16, size=k, replace=False)) * 4
        base = int(rng.integers(40, 77))
        onsets = []
        for i, step in enumerate(steps):
            nxt = int(steps[i + 1]) if i + 1 < k else 64
            onsets.append((int(step), min(nxt - int(step), 16), i))
        motif.append((base, onsets))
    events = []
    for bar in range(BARS):
        rep = bar // 2
        base, onsets = motif[bar % 2]
        for step, dur, j in onsets:
            onset = (bar * 64 + step) * 30
            pitch = int(np.clip(base + j * 2 + rep * drift, 0, 127))
            vel = 30 + ((vel_phase + j + rep * vel_adv) % 8) * 10
            events.append(NoteEvent(onset, dur * 30, pitch, vel))
    score = Score(
        480,
        notes=events,
        tempos=[TempoEvent(0, float(rng.choice(TEMPOS)))],
        timesigs=[TimeSigEvent(0, 4, 4)],
    )
    return write_midi(score)


def main() -> int:
    FIXTURES.mkdir(exist_ok=True)
    rng = np.random.default_rng(20260814)
    with tempfile.TemporaryDirectory() as tmp:
        corpus = pathlib.Path(tmp) / "corpus"
        corpus.mkdir()
        for p in range(PIECES):
            (corpus / f"p{p:03d}.mid").write_bytes(make_piece(rng))
        seg_path = FIXTURES / "segments.txt"
        subprocess.run(
            ["octomidi", "segment", str(corpus), "--max-len", "64", "-o", str(seg_path)],
            check=True,
        )
        subprocess.run(
            [
                "octomidi", "corrupt", str(seg_path), "--seed", "11",
                "-o", str(FIXTURES / "cli_mixed.pairs.txt"),
            ],
            check=True,
        )

    segments = loads_segments(seg_path.read_text())
    assert len(segments) == PIECES, f"expected {PIECES} segments, got {len(segments)}"

    identity, element, nbar, bar = [], [], [], []
    for i, seg in enumerate(segments):
        toks = seg.tokens
        identity.append(
            CorruptionPair(
                kind=CorruptionKind.MASKING,
                method=SelectionMethod.ELEMENT,
                source=toks,
                target=toks,
                seed=i,
            )
        )
        element.append(
            apply_corruption(
                toks, CorruptionKind.MASKING, SelectionMethod.ELEMENT,
                ratio=0.15, rng=np.random.default_rng(1000 + i), seed=1000 + i,
            )
        )
        nbar.append(
            apply_corruption(
                toks, CorruptionKind.MASKING, SelectionMethod.NBAR_TOKEN,
                ratio=0.15, rng=np.random.default_rng(2000 + i), seed=2000 + i,
            )
        )
        # whole-bar masking is not a pipeline corruption, so build the pair
        # from the bar-level selection directly
        sel = select(toks, SelectionMethod.BAR_TOKEN, 0.15, np.random.default_rng(3000 + i))
        source = np.where(sel.mask, MASK, toks)
        bar.append(
            CorruptionPair(
                kind=CorruptionKind.MASKING,
                method=SelectionMethod.BAR_TOKEN,
                source=source,
                target=toks,
                seed=3000 + i,
            )
        )

    for name, pairs in [
        ("identity", identity), ("element", element), ("nbar", nbar), ("bar", bar),
    ]:
        (FIXTURES / f"{name}.pairs.txt").write_text(dumps_pairs(pairs))
        masked = sum(int((p.source == MASK).sum()) for p in pairs)
        total = sum(p.source.size for p in pairs)
        print(f"{name}: {len(pairs)} pairs, {masked}/{total} masked cells")
    return 0


if __name__ == "__main__":
    sys.exit(main())

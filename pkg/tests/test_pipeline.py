"""Dataset preparation: config parsing, windowing, segmenting, labeling."""

import numpy as np
import pytest

from helpers import token_array, token_row
from octomidi.corruption import CorruptionKind
from octomidi.errors import (
    AlignmentMismatchError,
    AllEmptyError,
    FormatError,
    MethodNotAllowedError,
)
from octomidi.formats import SequenceLabel, TokenLabels, TokenSegment
from octomidi.midi import NoteEvent, Score, write_midi
from octomidi.pipeline import (
    PipelineConfig,
    attach_labels,
    corpus_stats,
    derive_seed,
    emit_pretraining_pairs,
    parse_config,
    segment_corpus,
    source_name,
    velocity_level,
    window_rows,
)
from octomidi.vocab import VALUE_OFFSET, Field


def midi_bytes(n_notes=12, pitch_base=60, tpq=480):
    """A playable file: one note per beat, cycling over 12 pitches."""
    notes = tuple(
        NoteEvent(i * tpq, tpq, pitch_base + i % 12, 64)
        for i in range(n_notes)
    )
    return write_midi(Score(ticks_per_quarter=tpq, notes=notes))


# ----------------------------------------------------------------- config


def test_parse_config_full():
    text = """
    # comment line
    seed = 9
    max_seq_len = 512
    ratio = 0.2          # trailing comment
    kinds = masking, deletion
    methods.masking = element, nbar-token
    ratio.deletion = 0.3
    keep_bar_ids = true
    velocity_levels = 8
    """
    cfg = parse_config(text)
    assert cfg.seed == 9
    assert cfg.max_seq_len == 512
    assert cfg.ratio == pytest.approx(0.2)
    assert cfg.kinds == ("masking", "deletion")
    assert cfg.methods == {"masking": ("element", "nbar-token")}
    assert cfg.ratios == {"deletion": pytest.approx(0.3)}
    assert cfg.keep_bar_ids is True
    assert cfg.velocity_levels == 8


def test_parse_config_defaults():
    assert parse_config("") == PipelineConfig()


def test_parse_config_rejects_bad_lines():
    for text in ("mystery = 1", "seed", "seed = x", "ratio = 2.0",
                 "keep_bar_ids = maybe", "kinds = squashing"):
        with pytest.raises(FormatError):
            parse_config(text)
    with pytest.raises(MethodNotAllowedError):
        parse_config("methods.rotation = bar-token")


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(max_seq_len=1)
    with pytest.raises(ValueError):
        PipelineConfig(velocity_levels=129)
    with pytest.raises(ValueError):
        PipelineConfig(ratio=0.0)
    with pytest.raises(ValueError):
        PipelineConfig(kinds=("nonsense",))

    cc = PipelineConfig(kinds=("masking",), ratios={"masking": 0.4}).corruption_config()
    assert cc.kinds == (CorruptionKind.MASKING,)
    assert cc.ratio_for(CorruptionKind.MASKING) == pytest.approx(0.4)


# ------------------------------------------------------------ deriving rng


def test_derive_seed_is_stable_and_spread():
    a = derive_seed(0, "x.mid", 0)
    assert a == derive_seed(0, "x.mid", 0)
    others = {derive_seed(0, "x.mid", 1), derive_seed(0, "y.mid", 0),
              derive_seed(1, "x.mid", 0)}
    assert a not in others and len(others) == 3
    assert 0 <= a < 2 ** 64


# ---------------------------------------------------------------- windows


def test_window_rows_sizes_and_rebase():
    rows = token_array([token_row(b, 0, 60 + b % 12) for b in range(25)])
    windows = window_rows(rows, max_seq_len=10)
    assert [len(w) for w in windows] == [10, 10, 5]
    for w in windows:
        assert w[0, Field.BAR] == VALUE_OFFSET
    nonbar = [f for f in range(8) if f != Field.BAR]
    together = np.vstack(windows)
    assert np.array_equal(together[:, nonbar], rows[:, nonbar])


def test_window_rows_close_on_bar_span():
    rows = token_array([token_row(0, 0, 60), token_row(250, 0, 62),
                        token_row(255, 0, 64)])
    rows[2, Field.BAR] = VALUE_OFFSET + 280  # unbounded encoding artifact
    windows = window_rows(rows, max_seq_len=100)
    assert [len(w) for w in windows] == [2, 1]
    assert windows[1][0, Field.BAR] == VALUE_OFFSET


def test_window_rows_degenerate():
    rows = token_array([token_row(0, p, 60) for p in (0, 8, 16)])
    assert [len(w) for w in window_rows(rows, 1)] == [1, 1, 1]
    assert window_rows(np.empty((0, 8), dtype=np.int64), 10) == []
    with pytest.raises(ValueError):
        window_rows(rows, 0)


# --------------------------------------------------------------- segments


def test_segment_corpus_from_bytes():
    inputs = [("a.mid", midi_bytes(20)), ("b dir/b.mid", midi_bytes(5))]
    segments, report = segment_corpus(inputs, max_seq_len=8)
    assert report.files_ok == 2 and report.files_failed == 0
    assert report.notes == 25
    assert report.segments == len(segments) == 4
    assert [(s.source, s.index, len(s.tokens)) for s in segments] == [
        ("a.mid", 0, 8), ("a.mid", 1, 8), ("a.mid", 2, 4), ("b_dir/b.mid", 0, 5),
    ]


def test_segment_corpus_from_folder(tmp_path):
    (tmp_path / "z.mid").write_bytes(midi_bytes(3, pitch_base=70))
    (tmp_path / "a.midi").write_bytes(midi_bytes(3))
    (tmp_path / "notes.txt").write_text("not midi")
    segments, report = segment_corpus(tmp_path)
    assert report.files_ok == 2
    assert [s.source.rsplit("/", 1)[-1] for s in segments] == ["a.midi", "z.mid"]


def test_segment_corpus_collects_failures():
    seen = []
    inputs = [("bad.mid", b"garbage"), ("ok.mid", midi_bytes(4))]
    segments, report = segment_corpus(inputs, on_error=lambda n, e: seen.append(n))
    assert report.files_failed == 1
    assert report.failures[0][0] == "bad.mid"
    assert seen == ["bad.mid"]
    assert {s.source for s in segments} == {"ok.mid"}

    with pytest.raises(AllEmptyError):
        segment_corpus([("bad.mid", b"garbage")])


def test_source_name_sanitizes_whitespace():
    assert source_name("my file.mid") == "my_file.mid"


# ------------------------------------------------------------------ pairs


def test_emit_pairs_deterministic_and_seeded():
    segments, _ = segment_corpus([("a.mid", midi_bytes(30))], max_seq_len=10)
    cfg = PipelineConfig(seed=5)
    one = emit_pretraining_pairs(segments, cfg)
    two = emit_pretraining_pairs(segments, cfg)
    assert len(one) == len(segments)
    for p, q in zip(one, two):
        assert p.kind is q.kind and p.method is q.method and p.seed == q.seed
        assert np.array_equal(p.source, q.source)
        assert np.array_equal(p.target, q.target)
    for p, seg in zip(one, segments):
        assert p.seed == derive_seed(5, seg.source, seg.index)

    other = emit_pretraining_pairs(segments, PipelineConfig(seed=6))
    assert any(p.seed != q.seed for p, q in zip(one, other))


def test_emit_pairs_skips_empty_segments():
    empty = TokenSegment("a.mid", 0, np.empty((0, 8), dtype=np.int64))
    full = TokenSegment("a.mid", 1, token_array([token_row(0, 0, 60)]))
    pairs = emit_pretraining_pairs([empty, full])
    assert len(pairs) == 1


def test_emit_pairs_respects_kind_restriction():
    segments, _ = segment_corpus([("a.mid", midi_bytes(40))], max_seq_len=8)
    cfg = PipelineConfig(kinds=("deletion",))
    pairs = emit_pretraining_pairs(segments, cfg)
    assert pairs and all(p.kind is CorruptionKind.DELETION for p in pairs)


# ----------------------------------------------------------------- labels


def test_velocity_level_quantization():
    assert velocity_level(0) == 0
    assert velocity_level(127) == 5
    assert velocity_level(127, levels=128) == 127
    assert {velocity_level(v) for v in range(128)} == set(range(6))
    levels = [velocity_level(v) for v in range(128)]
    assert levels == sorted(levels)
    with pytest.raises(ValueError):
        velocity_level(128)
    with pytest.raises(ValueError):
        velocity_level(64, levels=0)


def test_attach_velocity_labels():
    rows = [token_row(0, 0, 60, vel=0), token_row(0, 8, 62, vel=64),
            token_row(0, 16, 64, vel=127)]
    seg = TokenSegment("a.mid", 0, token_array(rows))
    (block,) = attach_labels([seg])
    # bin centers 2, 66, 126 quantized onto 6 levels
    assert block == TokenLabels("velocity", (0, 3, 5))


def test_attach_melody_labels_consume_in_order():
    segs = [
        TokenSegment("a.mid", 0, token_array([token_row(0, p, 60) for p in (0, 8, 16)])),
        TokenSegment("a.mid", 1, token_array([token_row(0, p, 60) for p in (0, 8)])),
    ]
    table = {"a.mid": [1, 2, 3, 4, 5]}
    blocks = attach_labels(segs, table, task="melody")
    assert [b.values for b in blocks] == [(1, 2, 3), (4, 5)]

    with pytest.raises(AlignmentMismatchError):
        attach_labels(segs, {"a.mid": [1, 2, 3, 4]}, task="melody")
    with pytest.raises(AlignmentMismatchError):
        attach_labels(segs, {"a.mid": [1, 2, 3, 4, 5, 6]}, task="melody")
    with pytest.raises(AlignmentMismatchError):
        attach_labels(segs, {"other.mid": [1]}, task="melody")


def test_attach_sequence_class_labels():
    segs = [
        TokenSegment("a.mid", 0, token_array([token_row(0, 0, 60)])),
        TokenSegment("a.mid", 1, token_array([token_row(0, 8, 62)])),
    ]
    blocks = attach_labels(segs, {"a.mid": 3}, task="sequence-class")
    assert blocks == [SequenceLabel("sequence-class", 3)] * 2
    with pytest.raises(AlignmentMismatchError):
        attach_labels(segs, {}, task="sequence-class")


def test_attach_labels_argument_errors():
    seg = TokenSegment("a.mid", 0, token_array([token_row(0, 0, 60)]))
    with pytest.raises(ValueError):
        attach_labels([seg], task="melody")
    with pytest.raises(ValueError):
        attach_labels([seg], {}, task="harmony")


# ------------------------------------------------------------------ stats


def test_corpus_stats_counts_and_coverage():
    stats = corpus_stats([("a.mid", midi_bytes(24))], max_seq_len=10)
    assert stats["files"] == 1.0
    assert stats["files_ok"] == 1.0
    assert stats["notes"] == 24.0
    assert stats["segments"] == 3.0
    assert stats["vocab_coverage_instrument"] == 1.0
    assert stats["vocab_coverage_pitch"] == pytest.approx(12 / 128)
    assert stats["vocab_coverage_velocity"] == pytest.approx(1 / 32)


def test_corpus_stats_tolerates_empty_corpus():
    stats = corpus_stats([])
    assert stats["files"] == 0.0
    assert stats["vocab_coverage_pitch"] == 0.0
    stats = corpus_stats([("bad.mid", b"junk")])
    assert stats["files_failed"] == 1.0
    assert stats["segments"] == 0.0

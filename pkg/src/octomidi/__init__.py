"""Octuple MIDI tokenization, denoising corruptions, and corpus metrics.

The package turns Standard MIDI Files into 8-field token sequences,
prepares corrupted (source, target) pairs for denoising pre-training, and
scores symbolic-music corpora against references. See the README for the
wire formats shared with downstream trainers.
"""

from .codec import (
    EncodeReport,
    decode_tokens,
    encode_score,
    encode_score_report,
    validate_tokens,
)
from .corruption import (
    ALLOWED_METHODS,
    CorruptionConfig,
    CorruptionKind,
    CorruptionPair,
    apply_corruption,
    corrupt,
    delete_tokens,
    infill_spans,
    mask_tokens,
    permute_sentences,
    renumber_bars,
    rotate_document,
)
from .errors import (
    AllEmptyError,
    AlignmentMismatchError,
    BarOverflowError,
    DegenerateCountError,
    DimensionMismatchError,
    EmptySequenceError,
    FormatError,
    MalformedFileError,
    MaskedTokenPresentError,
    MethodNotAllowedError,
    OctomidiError,
    OutOfVocabularyError,
    TooFewBarsError,
    UnsupportedFormatError,
    UnsupportedTimeSigError,
)
from .estimators import MidiReader, OctupleEncoder, SequenceCorruptor
from .formats import (
    SequenceLabel,
    TokenLabels,
    TokenSegment,
    dumps_labels,
    dumps_masks,
    dumps_metrics,
    dumps_pairs,
    dumps_segments,
    loads_labels,
    loads_masks,
    loads_metrics,
    loads_pairs,
    loads_segments,
)
from .metrics import (
    MAX_PITCH_ENTROPY,
    GaussianSummary,
    MetricReport,
    compare_to_reference,
    evaluate_corpus,
    frechet_distance,
    groove_similarity,
    grooving_vector,
    pitch_class_histogram,
    pitch_entropy,
    pitch_similarity,
    summarize,
)
from .midi import (
    NoteEvent,
    ParseReport,
    Score,
    TempoEvent,
    TimeSigEvent,
    parse_midi,
    parse_midi_report,
    write_midi,
)
from .pipeline import (
    CorpusReport,
    PipelineConfig,
    attach_labels,
    corpus_stats,
    derive_seed,
    emit_pretraining_pairs,
    parse_config,
    segment_corpus,
    velocity_level,
    window_rows,
)
from .selection import (
    Selection,
    SelectionMethod,
    nbar_span,
    nbar_spans,
    poisson_spans,
    select,
    token_durations,
)
from .vocab import BOS, EOS, MASK, PAD, VOCAB_SIZES, VOCABS, Field, FieldVocab

__version__ = "0.1.0"

__all__ = [
    "ALLOWED_METHODS", "AllEmptyError", "AlignmentMismatchError", "BOS",
    "BarOverflowError", "CorpusReport", "CorruptionConfig", "CorruptionKind",
    "CorruptionPair", "DegenerateCountError", "DimensionMismatchError", "EOS",
    "EmptySequenceError", "EncodeReport", "Field", "FieldVocab", "FormatError",
    "GaussianSummary", "MASK", "MAX_PITCH_ENTROPY", "MalformedFileError",
    "MaskedTokenPresentError", "MethodNotAllowedError", "MetricReport",
    "MidiReader", "NoteEvent", "OctomidiError", "OctupleEncoder",
    "OutOfVocabularyError", "PAD", "ParseReport", "PipelineConfig", "Score",
    "Selection", "SelectionMethod", "SequenceCorruptor", "SequenceLabel",
    "TempoEvent", "TimeSigEvent", "TokenLabels", "TokenSegment",
    "TooFewBarsError", "UnsupportedFormatError", "UnsupportedTimeSigError",
    "VOCABS", "VOCAB_SIZES", "apply_corruption", "attach_labels",
    "compare_to_reference", "corpus_stats", "corrupt", "decode_tokens",
    "delete_tokens", "derive_seed", "dumps_labels", "dumps_masks",
    "dumps_metrics", "dumps_pairs", "dumps_segments", "emit_pretraining_pairs",
    "encode_score", "encode_score_report", "evaluate_corpus",
    "frechet_distance", "groove_similarity", "grooving_vector", "infill_spans",
    "loads_labels", "loads_masks", "loads_metrics", "loads_pairs",
    "loads_segments", "mask_tokens", "nbar_span", "nbar_spans", "parse_config",
    "parse_midi", "parse_midi_report", "permute_sentences",
    "pitch_class_histogram", "pitch_entropy", "pitch_similarity",
    "poisson_spans", "renumber_bars", "rotate_document", "segment_corpus",
    "select", "summarize", "token_durations", "validate_tokens",
    "velocity_level", "window_rows", "write_midi",
]

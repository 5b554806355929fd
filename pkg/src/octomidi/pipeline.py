"""End-to-end dataset preparation: files -> segments -> training pairs.

The pipeline parses a corpus of MIDI files, tokenizes each, windows the
tokens into segments that fit both the sequence-length budget and the
256-bar vocabulary (bar ids are rebased to 0 per segment), and emits one
corruption pair per segment with the transformation drawn by
:func:`octomidi.corruption.corrupt`.

Per-file failures are collected, not fatal; only a corpus where nothing
parses raises. All randomness is derived from ``(seed, source, segment)``
through SHA-256, so a run is reproducible file by file regardless of
corpus order or parallelism.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import encode_unbounded
from .corruption import CorruptionConfig, CorruptionKind, CorruptionPair, corrupt
from .errors import AlignmentMismatchError, AllEmptyError, FormatError, OctomidiError
from .formats import SequenceLabel, TokenLabels, TokenSegment
from .midi import parse_midi_report
from .selection import SelectionMethod
from .validation import check_positive_int, check_ratio
from .vocab import MAX_BARS, VALUE_OFFSET, VOCABS, Field

DEFAULT_MAX_SEQ_LEN = 1024
DEFAULT_VELOCITY_LEVELS = 6

_ALL_KINDS = tuple(k.value for k in CorruptionKind)
LABEL_TASKS = ("velocity", "melody", "sequence-class")

_MIDI_SUFFIXES = (".mid", ".midi")


@dataclass
class PipelineConfig:
    """Knobs for dataset preparation.

    ``kinds`` names the enabled corruptions; ``methods`` optionally
    restricts the selection methods per kind and ``ratios`` overrides the
    global selection ``ratio`` per kind. Everything is plain strings and
    numbers so a config round-trips through the key=value file format.
    """

    seed: int = 0
    max_seq_len: int = DEFAULT_MAX_SEQ_LEN
    ratio: float = 0.15
    kinds: tuple[str, ...] = _ALL_KINDS
    methods: dict[str, tuple[str, ...]] = field(default_factory=dict)
    ratios: dict[str, float] = field(default_factory=dict)
    keep_bar_ids: bool = False
    velocity_levels: int = DEFAULT_VELOCITY_LEVELS

    def __post_init__(self) -> None:
        self.seed = int(self.seed)
        check_positive_int(self.max_seq_len, "max_seq_len")
        if self.max_seq_len < 2:
            raise ValueError(f"max_seq_len must be >= 2, got {self.max_seq_len}")
        check_ratio(self.ratio)
        self.kinds = tuple(CorruptionKind(k).value for k in self.kinds)
        self.methods = {
            CorruptionKind(k).value: tuple(SelectionMethod(m).value for m in ms)
            for k, ms in self.methods.items()
        }
        self.ratios = {CorruptionKind(k).value: float(r) for k, r in self.ratios.items()}
        self.keep_bar_ids = bool(self.keep_bar_ids)
        check_positive_int(self.velocity_levels, "velocity_levels")
        if self.velocity_levels > 128:
            raise ValueError("velocity_levels must be <= 128")
        # Surfaces invalid kind/method/ratio combinations right away.
        self.corruption_config()

    def corruption_config(self) -> CorruptionConfig:
        """The corruption-draw view of this config."""
        return CorruptionConfig(
            kinds=tuple(CorruptionKind(k) for k in self.kinds),
            methods={CorruptionKind(k): tuple(SelectionMethod(m) for m in ms)
                     for k, ms in self.methods.items()},
            ratio=self.ratio,
            ratios={CorruptionKind(k): r for k, r in self.ratios.items()},
            keep_bar_ids=self.keep_bar_ids,
        )


def parse_config(text: str) -> PipelineConfig:
    """Read a config from ``key=value`` lines ('#' starts a comment).

    Dotted keys set per-kind values: ``ratio.masking=0.3`` and
    ``methods.deletion=token, nbar-token``.
    """
    values: dict = {"methods": {}, "ratios": {}}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise FormatError(f"config line {no}: expected key=value")
        try:
            if key == "seed":
                values["seed"] = int(value)
            elif key == "max_seq_len":
                values["max_seq_len"] = int(value)
            elif key == "ratio":
                values["ratio"] = float(value)
            elif key == "velocity_levels":
                values["velocity_levels"] = int(value)
            elif key == "kinds":
                values["kinds"] = tuple(k.strip() for k in value.split(",") if k.strip())
            elif key == "keep_bar_ids":
                if value.lower() not in ("true", "false"):
                    raise ValueError("keep_bar_ids must be true or false")
                values["keep_bar_ids"] = value.lower() == "true"
            elif key.startswith("ratio."):
                values["ratios"][key[len("ratio."):]] = float(value)
            elif key.startswith("methods."):
                values["methods"][key[len("methods."):]] = tuple(
                    m.strip() for m in value.split(",") if m.strip()
                )
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise FormatError(f"config line {no}: {exc}") from None
    try:
        return PipelineConfig(**values)
    except ValueError as exc:
        raise FormatError(f"bad config value: {exc}") from None


def derive_seed(seed: int, source: str, index: int) -> int:
    """Stable per-segment seed from the run seed and segment identity."""
    digest = hashlib.sha256(f"{int(seed)}:{source}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def segment_rng(seed: int, source: str, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, source, index)))


@dataclass
class CorpusReport:
    """What happened while preparing one corpus."""

    files_ok: int = 0
    files_failed: int = 0
    failures: list = field(default_factory=list)
    notes: int = 0
    segments: int = 0
    positions_clamped: int = 0
    durations_clamped: int = 0


def window_rows(rows: np.ndarray, max_seq_len: int) -> list[np.ndarray]:
    """Cut unbounded-encoding rows into vocabulary-safe windows.

    A window closes when it holds ``max_seq_len`` tokens or when the next
    token's bar would not fit the 256-bar range after rebasing the
    window's first bar to 0. Windows are non-overlapping and trailing
    short windows are kept.
    """
    check_positive_int(max_seq_len, "max_seq_len")
    out = []
    start = 0
    for i in range(len(rows)):
        if i == start:
            continue
        bar_span = rows[i, Field.BAR] - rows[start, Field.BAR]
        if i - start >= max_seq_len or bar_span >= MAX_BARS:
            out.append(rows[start:i])
            start = i
    if start < len(rows):
        out.append(rows[start:])
    rebased = []
    for window in out:
        window = window.copy()
        window[:, Field.BAR] -= window[0, Field.BAR] - VALUE_OFFSET
        rebased.append(window)
    return rebased


def source_name(item) -> str:
    """Normalize a path or name for use in segment headers (no whitespace)."""
    name = str(item)
    return "".join("_" if c.isspace() else c for c in name)


def _expand_inputs(inputs):
    """A folder becomes its sorted MIDI files; anything else passes through."""
    if isinstance(inputs, (str, Path)) and Path(inputs).is_dir():
        return sorted(p for p in Path(inputs).iterdir()
                      if p.suffix.lower() in _MIDI_SUFFIXES)
    return list(inputs)


def _scan(inputs, max_seq_len: int, on_error=None):
    report = CorpusReport()
    segments: list[TokenSegment] = []
    for item in _expand_inputs(inputs):
        if isinstance(item, tuple):
            name, data = item
        else:
            name, data = item, Path(item).read_bytes()
        name = source_name(name)
        try:
            score, _ = parse_midi_report(data)
            rows, enc_report = encode_unbounded(score)
        except (OctomidiError, ValueError) as exc:
            report.files_failed += 1
            report.failures.append((name, str(exc)))
            if on_error is not None:
                on_error(name, exc)
            continue
        report.files_ok += 1
        report.notes += len(rows)
        report.positions_clamped += enc_report.positions_clamped
        report.durations_clamped += enc_report.durations_clamped
        for k, window in enumerate(window_rows(rows, max_seq_len)):
            segments.append(TokenSegment(source=name, index=k, tokens=window))
    report.segments = len(segments)
    return segments, report


def segment_corpus(inputs, max_seq_len: int = DEFAULT_MAX_SEQ_LEN,
                   on_error=None) -> tuple[list[TokenSegment], CorpusReport]:
    """Tokenize and window a corpus.

    ``inputs`` is a folder, or an iterable of file paths or
    ``(name, bytes)`` tuples. Files that fail to parse are recorded in
    the report (and passed to ``on_error(name, exc)`` when given); an
    entirely unusable corpus raises :class:`AllEmptyError`.
    """
    segments, report = _scan(inputs, max_seq_len, on_error)
    if report.files_ok == 0:
        raise AllEmptyError(
            f"no usable files in corpus ({report.files_failed} failed to parse)"
        )
    return segments, report


def emit_pretraining_pairs(segments, config: PipelineConfig | None = None):
    """One corruption pair per segment, transformation drawn per segment.

    The kind/method draw and the corruption itself run on a generator
    seeded by ``derive_seed(config.seed, source, segment)``, making the
    output deterministic for a given corpus and config and independent
    of segment processing order.
    """
    config = config if config is not None else PipelineConfig()
    corruption_config = config.corruption_config()
    pairs: list[CorruptionPair] = []
    for seg in segments:
        if len(seg.tokens) == 0:
            continue
        seed = derive_seed(config.seed, seg.source, seg.index)
        pairs.append(corrupt(seg.tokens, rng=seed, config=corruption_config))
    return pairs


def velocity_level(velocity: int, levels: int = DEFAULT_VELOCITY_LEVELS) -> int:
    """Quantize a raw MIDI velocity (0..127) onto coarse levels.

    ``floor(v * levels / 128)``: surjective onto 0..levels-1 and monotone
    in ``v``.
    """
    if not 0 <= velocity <= 127:
        raise ValueError(f"velocity {velocity} out of range 0..127")
    check_positive_int(levels, "levels")
    return velocity * levels // 128


def attach_labels(segments, label_source=None, task: str = "velocity",
                  velocity_levels: int = DEFAULT_VELOCITY_LEVELS):
    """Labels for each segment, aligned to its tokens.

    Tasks:

    * ``velocity``: token-level, self-derived; each token's velocity-bin
      center quantized onto ``velocity_levels`` levels.
    * ``melody``: token-level; ``label_source`` maps a source name to the
      per-note integer labels of that file, in note order. Segments of
      the file consume consecutive runs; a count that does not match the
      file's note count raises :class:`AlignmentMismatchError`.
    * ``sequence-class``: sequence-level; ``label_source`` maps a source
      name to one integer class id attached to every segment of the file.

    Returns a list of :class:`TokenLabels` for token-level tasks and of
    :class:`SequenceLabel` for ``sequence-class``.
    """
    segments = list(segments)
    if task == "velocity":
        vocab = VOCABS[Field.VELOCITY]
        return [
            TokenLabels(task=task, values=tuple(
                velocity_level(vocab.to_value(int(t)), velocity_levels)
                for t in seg.tokens[:, Field.VELOCITY]
            ))
            for seg in segments
        ]
    if label_source is None:
        raise ValueError(f"task {task!r} needs a label_source")
    if task == "melody":
        consumed: dict[str, int] = {}
        blocks = []
        for seg in segments:
            if seg.source not in label_source:
                raise AlignmentMismatchError(f"no labels for source {seg.source!r}")
            labels = label_source[seg.source]
            offset = consumed.get(seg.source, 0)
            values = tuple(int(v) for v in labels[offset:offset + len(seg.tokens)])
            if len(values) != len(seg.tokens):
                raise AlignmentMismatchError(
                    f"{seg.source!r} segment {seg.index}: {len(labels)} labels "
                    f"cannot cover note {offset + len(seg.tokens)}"
                )
            consumed[seg.source] = offset + len(values)
            blocks.append(TokenLabels(task=task, values=values))
        for source, used in consumed.items():
            if used != len(label_source[source]):
                raise AlignmentMismatchError(
                    f"{source!r} has {len(label_source[source])} labels "
                    f"for {used} notes"
                )
        return blocks
    if task == "sequence-class":
        blocks = []
        for seg in segments:
            if seg.source not in label_source:
                raise AlignmentMismatchError(f"no label for source {seg.source!r}")
            blocks.append(SequenceLabel(task=task, label=int(label_source[seg.source])))
        return blocks
    raise ValueError(f"unknown labeling task {task!r} (expected one of {LABEL_TASKS})")


def corpus_stats(inputs, max_seq_len: int = DEFAULT_MAX_SEQ_LEN) -> dict[str, float]:
    """Corpus summary: counts, clamp warnings, per-field vocabulary coverage.

    Unlike :func:`segment_corpus`, an empty or unusable corpus is not an
    error; every count is simply zero.
    """
    segments, report = _scan(inputs, max_seq_len)
    stats = {
        "files": float(report.files_ok + report.files_failed),
        "files_ok": float(report.files_ok),
        "files_failed": float(report.files_failed),
        "notes": float(report.notes),
        "segments": float(report.segments),
        "positions_clamped": float(report.positions_clamped),
        "durations_clamped": float(report.durations_clamped),
    }
    used = [set() for _ in Field]
    for seg in segments:
        for f in Field:
            used[f].update(np.unique(seg.tokens[:, f]).tolist())
    for f in Field:
        musical = VOCABS[f].size - VALUE_OFFSET
        stats[f"vocab_coverage_{f.name.lower()}"] = len(used[f]) / musical
    return stats

"""Command-line interface.

Subcommands cover the full data path: ``tokenize`` / ``detokenize`` for
single files, ``segment`` for corpus windowing, ``corrupt`` for emitting
denoising pairs, ``labels`` for auxiliary supervision, ``stats`` and
``metrics`` for corpus numbers. All outputs are the plain-text formats
from :mod:`octomidi.formats`; ``-`` means stdout.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import formats, metrics, pipeline
from .codec import decode_tokens, encode_score
from .errors import FormatError, OctomidiError
from .midi import parse_midi, write_midi


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        if text and not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(path).write_text(text if text.endswith("\n") or not text else text + "\n")


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _load_config(args) -> pipeline.PipelineConfig:
    if args.config:
        config = pipeline.parse_config(Path(args.config).read_text())
    else:
        config = pipeline.PipelineConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "ratio", None) is not None:
        overrides["ratio"] = args.ratio
    if getattr(args, "max_len", None) is not None:
        overrides["max_seq_len"] = args.max_len
    if getattr(args, "kinds", None):
        overrides["kinds"] = tuple(k.strip() for k in args.kinds.split(","))
    if getattr(args, "keep_bar_ids", False):
        overrides["keep_bar_ids"] = True
    return replace(config, **overrides) if overrides else config


def _cmd_tokenize(args) -> int:
    segments = []
    for path in args.files:
        score = parse_midi(Path(path).read_bytes())
        segments.append(formats.TokenSegment(source=pipeline.source_name(path),
                                             index=0, tokens=encode_score(score)))
    _write_text(args.output, formats.dumps_segments(segments))
    return 0


def _cmd_detokenize(args) -> int:
    segments = formats.loads_segments(_read_text(args.input))
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for seg in segments:
        name = f"{Path(seg.source).stem}_{seg.index}.mid"
        (out_dir / name).write_bytes(write_midi(decode_tokens(seg.tokens)))
        print(out_dir / name)
    return 0


def _cmd_segment(args) -> int:
    config = _load_config(args)
    if len(args.files) == 1 and Path(args.files[0]).is_dir():
        files = args.files[0]
    else:
        files = sorted(args.files)
    segments, report = pipeline.segment_corpus(
        files, max_seq_len=config.max_seq_len,
        on_error=lambda name, exc: print(f"skipping {name}: {exc}", file=sys.stderr),
    )
    _write_text(args.output, formats.dumps_segments(segments))
    print(
        f"{report.files_ok} files -> {report.segments} segments "
        f"({report.notes} tokens, {report.files_failed} files skipped)",
        file=sys.stderr,
    )
    return 0


def _cmd_corrupt(args) -> int:
    config = _load_config(args)
    segments = formats.loads_segments(_read_text(args.input))
    pairs = pipeline.emit_pretraining_pairs(segments, config)
    _write_text(args.output, formats.dumps_pairs(pairs))
    return 0


def _load_label_table(path: str) -> dict[str, list[int]]:
    """Generic label table: ``<source> <label>`` lines, '#' comments."""
    table: dict[str, list[int]] = {}
    for no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"label table line {no}: expected '<source> <label>'")
        try:
            table.setdefault(parts[0], []).append(int(parts[1]))
        except ValueError:
            raise FormatError(f"label table line {no}: bad label {parts[1]!r}") from None
    return table


def _cmd_labels(args) -> int:
    segments = formats.loads_segments(_read_text(args.input))
    label_source = None
    if args.labels_file:
        table = _load_label_table(args.labels_file)
        if args.task == "sequence-class":
            for source, vals in table.items():
                if len(vals) != 1:
                    raise FormatError(
                        f"{source!r} has {len(vals)} sequence labels, expected 1"
                    )
            label_source = {s: v[0] for s, v in table.items()}
        else:
            label_source = table
    blocks = pipeline.attach_labels(segments, label_source, task=args.task,
                                    velocity_levels=args.velocity_levels)
    _write_text(args.output, formats.dumps_labels(blocks))
    return 0


def _cmd_stats(args) -> int:
    if len(args.paths) == 1 and Path(args.paths[0]).is_dir():
        inputs = args.paths[0]
    else:
        inputs = sorted(args.paths)
    _write_text(args.output, formats.dumps_metrics(pipeline.corpus_stats(inputs)))
    return 0


def _cmd_metrics(args) -> int:
    generated = [s.tokens for s in formats.loads_segments(_read_text(args.generated))]
    references = [s.tokens for s in formats.loads_segments(_read_text(args.reference))]
    prompts = None
    if args.prompt:
        prompts = [s.tokens for s in formats.loads_segments(_read_text(args.prompt))]
    report = metrics.evaluate_corpus(generated, references, prompts)
    values = report.as_dict()
    _write_text(args.output, formats.dumps_metrics(values))
    width = max(len(k) for k in values)
    for key, value in values.items():
        print(f"{key:<{width}}  {value:.6f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="octomidi",
        description="Octuple MIDI tokenization, corruption pairs, and corpus metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="encode MIDI files as token text")
    p.add_argument("files", nargs="+", help="MIDI files")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=_cmd_tokenize)

    p = sub.add_parser("detokenize", help="decode token text back to MIDI files")
    p.add_argument("input", help="token file ('-' for stdin)")
    p.add_argument("-o", "--output-dir", default=".")
    p.set_defaults(func=_cmd_detokenize)

    p = sub.add_parser("segment", help="tokenize a corpus into training windows")
    p.add_argument("files", nargs="+", help="MIDI files")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--max-len", type=int, default=None, help="tokens per window")
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("corrupt", help="emit denoising pairs from segments")
    p.add_argument("input", help="segment file ('-' for stdin)")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--kinds", default=None, help="comma-separated corruption kinds")
    p.add_argument("--keep-bar-ids", action="store_true")
    p.add_argument("--config", default=None, help="key=value config file")
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("labels", help="emit supervision labels for segments")
    p.add_argument("input", help="segment file ('-' for stdin)")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--task", default="velocity", choices=pipeline.LABEL_TASKS)
    p.add_argument("--labels-file", default=None,
                   help="'<source> <label>' table for melody/sequence-class tasks")
    p.add_argument("--velocity-levels", type=int,
                   default=pipeline.DEFAULT_VELOCITY_LEVELS)
    p.set_defaults(func=_cmd_labels)

    p = sub.add_parser("stats", help="summary numbers for a MIDI corpus")
    p.add_argument("paths", nargs="+", help="MIDI files or one folder")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("metrics", help="score generated pieces against references")
    p.add_argument("generated", help="generated segment file")
    p.add_argument("reference", help="reference segment file")
    p.add_argument("--prompt", default=None,
                   help="prompt segment file (defaults to the reference)")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=_cmd_metrics)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OctomidiError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

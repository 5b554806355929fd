"""Plain-text wire formats for tokens, training pairs, labels, and metrics.

These formats are the interchange contract with downstream consumers
(trainers in other languages included), so they are deliberately plain:
UTF-8 text, one token per line as 8 space-separated integer ids in field
order, records separated by blank lines.

Token segments::

    # source=<name> segment=<index>
    <8 ids> ...

Corruption pairs::

    @pair kind=<kind> method=<method> seed=<seed> src_len=<a> tgt_len=<b>
    <a source token lines>
    <b target token lines>

Selection masks::

    @mask method=<method> len=<L>
    <L token lines>
    <L grid lines of 8 space-separated 0/1 flags>

Labels::

    @labels task=<task>          @seqlabel task=<task> label=<int>
    <one int per line>

Metric reports are ``key=value`` lines with six decimal places.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import N_FIELDS, validate_tokens
from .corruption import CorruptionKind, CorruptionPair
from .errors import FormatError
from .selection import Selection, SelectionMethod


@dataclass(frozen=True)
class TokenSegment:
    """One tokenized window of a source file."""

    source: str
    index: int
    tokens: np.ndarray


@dataclass(frozen=True)
class TokenLabels:
    """Per-token integer labels for one sequence."""

    task: str
    values: tuple[int, ...]


@dataclass(frozen=True)
class SequenceLabel:
    """A single integer label for a whole sequence."""

    task: str
    label: int


def _check_name(value: str, what: str) -> str:
    value = str(value)
    if not value or any(c.isspace() for c in value):
        raise FormatError(f"{what} must be non-empty and contain no whitespace: {value!r}")
    return value


def _token_lines(tokens: np.ndarray) -> list[str]:
    return [" ".join(str(int(v)) for v in row) for row in tokens]


def _parse_attrs(rest: str, line_no: int, expected: tuple[str, ...]) -> dict[str, str]:
    attrs = {}
    for part in rest.split():
        key, sep, value = part.partition("=")
        if not sep or not key or not value:
            raise FormatError(f"line {line_no}: expected key=value, got {part!r}")
        attrs[key] = value
    missing = [k for k in expected if k not in attrs]
    if missing:
        raise FormatError(f"line {line_no}: missing attributes {missing}")
    extra = [k for k in attrs if k not in expected]
    if extra:
        raise FormatError(f"line {line_no}: unknown attributes {extra}")
    return attrs


def _parse_int(text: str, line_no: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"line {line_no}: {what} must be an integer, got {text!r}") from None


class _Lines:
    def __init__(self, text: str) -> None:
        self.lines = text.splitlines()
        self.pos = 0

    def __bool__(self) -> bool:
        return self.pos < len(self.lines)

    def peek(self) -> str:
        return self.lines[self.pos]

    def next(self) -> tuple[int, str]:
        line = self.lines[self.pos]
        self.pos += 1
        return self.pos, line

    def skip_blank(self) -> None:
        while self and not self.peek().strip():
            self.pos += 1

    def take_tokens(self, count: int, allow_special: bool) -> np.ndarray:
        rows = np.empty((count, N_FIELDS), dtype=np.int64)
        for i in range(count):
            if not self:
                raise FormatError(f"expected {count} token lines, file ended after {i}")
            no, line = self.next()
            parts = line.split()
            if len(parts) != N_FIELDS:
                raise FormatError(f"line {no}: expected {N_FIELDS} ids, got {len(parts)}")
            rows[i] = [_parse_int(p, no, "token id") for p in parts]
        return validate_tokens(rows, allow_special=allow_special)


def dumps_segments(segments) -> str:
    out = []
    for seg in segments:
        tokens = validate_tokens(seg.tokens)
        out.append(f"# source={_check_name(seg.source, 'source')} segment={int(seg.index)}")
        out.extend(_token_lines(tokens))
        out.append("")
    return "\n".join(out)


def loads_segments(text: str) -> list[TokenSegment]:
    reader = _Lines(text)
    segments = []
    reader.skip_blank()
    while reader:
        no, line = reader.next()
        if not line.startswith("# "):
            raise FormatError(f"line {no}: expected segment header starting with '# '")
        attrs = _parse_attrs(line[2:], no, ("source", "segment"))
        rows = []
        while reader and reader.peek().strip() and not reader.peek().startswith("#"):
            rows.append(reader.next())
        tokens = np.empty((len(rows), N_FIELDS), dtype=np.int64)
        for i, (row_no, row) in enumerate(rows):
            parts = row.split()
            if len(parts) != N_FIELDS:
                raise FormatError(f"line {row_no}: expected {N_FIELDS} ids, got {len(parts)}")
            tokens[i] = [_parse_int(p, row_no, "token id") for p in parts]
        segments.append(
            TokenSegment(
                source=attrs["source"],
                index=_parse_int(attrs["segment"], no, "segment"),
                tokens=validate_tokens(tokens),
            )
        )
        reader.skip_blank()
    return segments


def dumps_pairs(pairs) -> str:
    out = []
    for pair in pairs:
        source = validate_tokens(pair.source, allow_special=True)
        target = validate_tokens(pair.target)
        out.append(
            f"@pair kind={pair.kind.value} method={pair.method.value} "
            f"seed={int(pair.seed)} src_len={len(source)} tgt_len={len(target)}"
        )
        out.extend(_token_lines(source))
        out.extend(_token_lines(target))
        out.append("")
    return "\n".join(out)


def loads_pairs(text: str) -> list[CorruptionPair]:
    reader = _Lines(text)
    pairs = []
    reader.skip_blank()
    while reader:
        no, line = reader.next()
        if not line.startswith("@pair "):
            raise FormatError(f"line {no}: expected '@pair' header")
        attrs = _parse_attrs(line[len("@pair "):], no,
                             ("kind", "method", "seed", "src_len", "tgt_len"))
        try:
            kind = CorruptionKind(attrs["kind"])
            method = SelectionMethod(attrs["method"])
        except ValueError as exc:
            raise FormatError(f"line {no}: {exc}") from None
        src_len = _parse_int(attrs["src_len"], no, "src_len")
        tgt_len = _parse_int(attrs["tgt_len"], no, "tgt_len")
        if src_len < 0 or tgt_len < 0:
            raise FormatError(f"line {no}: negative sequence length")
        source = reader.take_tokens(src_len, allow_special=True)
        target = reader.take_tokens(tgt_len, allow_special=False)
        pairs.append(
            CorruptionPair(
                kind=kind,
                method=method,
                source=source,
                target=target,
                seed=_parse_int(attrs["seed"], no, "seed"),
            )
        )
        reader.skip_blank()
    return pairs


def dumps_masks(items) -> str:
    """Token sequences with their selection masks as parallel bit grids.

    ``items`` yields ``(tokens, selection)``; each block is a ``@mask``
    header, the token lines, then one grid line of 8 space-separated
    0/1 flags per token. Span structure is not carried, only the grid.
    """
    out = []
    for tokens, sel in items:
        tokens = validate_tokens(tokens)
        if sel.mask.shape != tokens.shape:
            raise FormatError(
                f"mask shape {sel.mask.shape} does not match tokens {tokens.shape}"
            )
        out.append(f"@mask method={sel.method.value} len={len(tokens)}")
        out.extend(_token_lines(tokens))
        out.extend(" ".join("1" if b else "0" for b in row) for row in sel.mask)
        out.append("")
    return "\n".join(out)


def loads_masks(text: str):
    reader = _Lines(text)
    items = []
    reader.skip_blank()
    while reader:
        no, line = reader.next()
        if not line.startswith("@mask "):
            raise FormatError(f"line {no}: expected '@mask' header")
        attrs = _parse_attrs(line[len("@mask "):], no, ("method", "len"))
        try:
            method = SelectionMethod(attrs["method"])
        except ValueError as exc:
            raise FormatError(f"line {no}: {exc}") from None
        count = _parse_int(attrs["len"], no, "len")
        if count < 0:
            raise FormatError(f"line {no}: negative length")
        tokens = reader.take_tokens(count, allow_special=False)
        mask = np.zeros((count, N_FIELDS), dtype=bool)
        for i in range(count):
            if not reader:
                raise FormatError(f"expected {count} grid lines, file ended after {i}")
            row_no, row = reader.next()
            parts = row.split()
            if len(parts) != N_FIELDS or any(p not in ("0", "1") for p in parts):
                raise FormatError(f"line {row_no}: expected {N_FIELDS} 0/1 flags")
            mask[i] = [p == "1" for p in parts]
        items.append((tokens, Selection(method=method, mask=mask)))
        reader.skip_blank()
    return items


def dumps_labels(blocks) -> str:
    out = []
    for block in blocks:
        if isinstance(block, SequenceLabel):
            out.append(
                f"@seqlabel task={_check_name(block.task, 'task')} label={int(block.label)}"
            )
        elif isinstance(block, TokenLabels):
            out.append(f"@labels task={_check_name(block.task, 'task')}")
            out.extend(str(int(v)) for v in block.values)
        else:
            raise TypeError(f"expected TokenLabels or SequenceLabel, got {type(block).__name__}")
        out.append("")
    return "\n".join(out)


def loads_labels(text: str) -> list[TokenLabels | SequenceLabel]:
    reader = _Lines(text)
    blocks: list[TokenLabels | SequenceLabel] = []
    reader.skip_blank()
    while reader:
        no, line = reader.next()
        if line.startswith("@seqlabel "):
            attrs = _parse_attrs(line[len("@seqlabel "):], no, ("task", "label"))
            blocks.append(SequenceLabel(task=attrs["task"],
                                        label=_parse_int(attrs["label"], no, "label")))
        elif line.startswith("@labels "):
            attrs = _parse_attrs(line[len("@labels "):], no, ("task",))
            values = []
            while reader and reader.peek().strip() and not reader.peek().startswith("@"):
                val_no, val_line = reader.next()
                values.append(_parse_int(val_line.strip(), val_no, "label"))
            blocks.append(TokenLabels(task=attrs["task"], values=tuple(values)))
        else:
            raise FormatError(f"line {no}: expected '@labels' or '@seqlabel' header")
        reader.skip_blank()
    return blocks


def dumps_metrics(values: dict) -> str:
    out = []
    for key, value in values.items():
        out.append(f"{_check_name(key, 'metric name')}={float(value):.6f}")
    out.append("")
    return "\n".join(out)


def loads_metrics(text: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"line {no}: expected key=value")
        try:
            values[key] = float(value)
        except ValueError:
            raise FormatError(f"line {no}: bad float {value!r}") from None
    return values

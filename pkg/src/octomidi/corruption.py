"""Sequence corruptions for denoising pre-training.

Five transformations, each paired with the selection scopes it supports:

===========  ==========================================  =================
corruption   what it does                                selection methods
===========  ==========================================  =================
masking      selected cells -> MASK id                   element, token,
                                                         nbar-element,
                                                         nbar-token
deletion     selected tokens removed                     token, nbar-token
infilling    each selected span -> one all-MASK token    token (Poisson
                                                         lengths),
                                                         nbar-token
permutation  sentence order shuffled                     token (random
                                                         splits),
                                                         bar-token (bars)
rotation     sequence rotated to a random start token    token
===========  ==========================================  =================

Every operation returns a :class:`CorruptionPair`: the corrupted
``source`` (model input) and the untouched ``target`` (reconstruction
objective), plus enough bookkeeping (kind, method, seed, mask or spans)
to audit the draw.

Permutation and rotation reorder bars, so bar ids are renumbered to a
non-decreasing run starting at 0, incrementing wherever the original bar
id changes or a reordered segment begins. Pass ``keep_bar_ids=True`` to
leave the original ids in place.

:func:`corrupt` is the randomized entry point: it draws a kind uniformly
from the enabled set, then a method from that kind's allowed methods
(uniformly, or by configured weights), and dispatches. One sequence gets
exactly one transformation per call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .codec import N_FIELDS, validate_tokens
from .errors import EmptySequenceError, MethodNotAllowedError
from .selection import SelectionMethod, nbar_spans, poisson_spans, select
from .validation import check_ratio, check_rng
from .vocab import MASK, MAX_BARS, VALUE_OFFSET, Field


class CorruptionKind(Enum):
    MASKING = "masking"
    DELETION = "deletion"
    INFILLING = "infilling"
    PERMUTATION = "permutation"
    ROTATION = "rotation"


ALLOWED_METHODS: dict[CorruptionKind, tuple[SelectionMethod, ...]] = {
    CorruptionKind.MASKING: (
        SelectionMethod.ELEMENT,
        SelectionMethod.TOKEN,
        SelectionMethod.NBAR_ELEMENT,
        SelectionMethod.NBAR_TOKEN,
    ),
    CorruptionKind.DELETION: (SelectionMethod.TOKEN, SelectionMethod.NBAR_TOKEN),
    CorruptionKind.INFILLING: (SelectionMethod.TOKEN, SelectionMethod.NBAR_TOKEN),
    CorruptionKind.PERMUTATION: (SelectionMethod.TOKEN, SelectionMethod.BAR_TOKEN),
    CorruptionKind.ROTATION: (SelectionMethod.TOKEN,),
}

# Ratio is meaningless for the reordering corruptions.
RATIO_FREE_KINDS = (CorruptionKind.PERMUTATION, CorruptionKind.ROTATION)


@dataclass(frozen=True, eq=False)
class CorruptionPair:
    """One pre-training example: corrupted input and clean target.

    ``mask`` is the boolean cell grid for masking; ``spans`` are the
    half-open token ranges (in target coordinates) that were masked,
    deleted, or collapsed. ``seed`` echoes the integer seed the caller
    passed as ``rng``, 0 when a live generator was handed in.
    """

    kind: CorruptionKind
    method: SelectionMethod
    source: np.ndarray
    target: np.ndarray
    seed: int = 0
    mask: np.ndarray | None = None
    spans: tuple[tuple[int, int], ...] = ()


def _check_method(kind: CorruptionKind, method: SelectionMethod) -> SelectionMethod:
    method = SelectionMethod(method)
    if method not in ALLOWED_METHODS[kind]:
        allowed = ", ".join(m.value for m in ALLOWED_METHODS[kind])
        raise MethodNotAllowedError(
            f"{kind.value} does not support method {method.value!r} (allowed: {allowed})"
        )
    return method


def _nonempty(tokens) -> np.ndarray:
    arr = validate_tokens(tokens)
    if len(arr) == 0:
        raise EmptySequenceError("cannot corrupt an empty sequence")
    return arr


def _record_seed(rng, seed) -> int:
    if seed is not None:
        return int(seed)
    if isinstance(rng, (int, np.integer)) and not isinstance(rng, bool):
        return int(rng)
    return 0


def mask_tokens(tokens, method=SelectionMethod.ELEMENT, ratio: float = 0.15,
                rng=None, *, seed: int | None = None) -> CorruptionPair:
    """Replace the selected cells with the MASK id."""
    arr = _nonempty(tokens)
    method = _check_method(CorruptionKind.MASKING, method)
    seed = _record_seed(rng, seed)
    sel = select(arr, method, ratio, rng)
    source = arr.copy()
    source[sel.mask] = MASK
    return CorruptionPair(kind=CorruptionKind.MASKING, method=method,
                          source=source, target=arr, seed=seed,
                          mask=sel.mask, spans=sel.token_spans)


def delete_tokens(tokens, method=SelectionMethod.TOKEN, prob: float = 0.15,
                  rng=None, *, seed: int | None = None) -> CorruptionPair:
    """Remove the selected tokens outright (no placeholder left behind).

    Only whole-token scopes are allowed; dropping single cells would
    break the eight-field alignment of every later token.
    """
    arr = _nonempty(tokens)
    method = _check_method(CorruptionKind.DELETION, method)
    seed = _record_seed(rng, seed)
    sel = select(arr, method, prob, rng)
    keep = np.ones(len(arr), dtype=bool)
    for s, e in sel.token_spans:
        keep[s:e] = False
    return CorruptionPair(kind=CorruptionKind.DELETION, method=method,
                          source=arr[keep], target=arr, seed=seed,
                          spans=sel.token_spans)


def infill_spans(tokens, method=SelectionMethod.TOKEN, ratio: float = 0.15,
                 rng=None, *, seed: int | None = None) -> CorruptionPair:
    """Collapse each selected span into a single all-MASK token.

    Span lengths are Poisson(3)-distributed (clipped to >= 1) at token
    scope and duration-budgeted at nbar-token scope, so the model must
    recover how many tokens each placeholder hides. The source is
    shorter than the target by sum(len - 1) over the spans.
    """
    arr = _nonempty(tokens)
    method = _check_method(CorruptionKind.INFILLING, method)
    seed = _record_seed(rng, seed)
    rng = check_rng(rng)
    if method is SelectionMethod.TOKEN:
        spans = poisson_spans(arr, ratio, rng)
    else:
        spans = nbar_spans(arr, ratio, rng)
    fill = np.full(N_FIELDS, MASK, dtype=np.int64)
    pieces = []
    prev = 0
    for s, e in spans:
        pieces.append(arr[prev:s])
        pieces.append(fill[None, :])
        prev = e
    pieces.append(arr[prev:])
    return CorruptionPair(kind=CorruptionKind.INFILLING, method=method,
                          source=np.concatenate(pieces, axis=0), target=arr,
                          seed=seed, spans=spans)


def renumber_bars(tokens, segment_starts=()) -> np.ndarray:
    """Rewrite bar ids as a non-decreasing run starting at 0.

    The id increments wherever the original bar id changes between
    neighbours or a position in ``segment_starts`` begins (reordered
    material starts a fresh bar even if the original ids happen to
    match). Runs past the bar cap saturate at the last representable id
    so the result stays encodable.
    """
    arr = validate_tokens(tokens, allow_special=True)
    if len(arr) == 0:
        return arr.copy()
    starts = set(int(s) for s in segment_starts)
    bars = arr[:, Field.BAR]
    ids = np.empty(len(arr), dtype=np.int64)
    current = 0
    ids[0] = 0
    for i in range(1, len(arr)):
        if bars[i] != bars[i - 1] or i in starts:
            current += 1
        ids[i] = current
    out = arr.copy()
    out[:, Field.BAR] = np.minimum(ids, MAX_BARS - 1) + VALUE_OFFSET
    return out


def _bar_count(arr: np.ndarray) -> int:
    return len(np.unique(arr[:, Field.BAR]))


def permute_sentences(tokens, method=SelectionMethod.BAR_TOKEN, rng=None,
                      keep_bar_ids: bool = False, *,
                      seed: int | None = None) -> CorruptionPair:
    """Shuffle the order of sentences (bars, or random token segments).

    At bar-token scope each bar is one sentence; a single-bar sequence
    is returned unchanged. At token scope the sequence is cut at K
    uniformly drawn token boundaries, K being the bar count (capped at
    the number of interior boundaries), so segments are bar-sized on
    average but with arbitrary edges.
    """
    arr = _nonempty(tokens)
    method = _check_method(CorruptionKind.PERMUTATION, method)
    seed = _record_seed(rng, seed)
    rng = check_rng(rng)
    n_bars = _bar_count(arr)

    if method is SelectionMethod.BAR_TOKEN:
        bars = arr[:, Field.BAR]
        edges = np.flatnonzero(np.diff(bars)) + 1
        bounds = [0, *edges.tolist(), len(arr)]
    else:
        k = min(n_bars, len(arr) - 1)
        cuts = rng.choice(len(arr) - 1, size=k, replace=False) + 1 if k else []
        bounds = [0, *sorted(int(c) for c in cuts), len(arr)]

    segments = [arr[bounds[i]:bounds[i + 1]] for i in range(len(bounds) - 1)]
    order = rng.permutation(len(segments))
    source = np.concatenate([segments[i] for i in order], axis=0)
    if not keep_bar_ids:
        starts = np.cumsum([0, *(len(segments[i]) for i in order[:-1])])
        source = renumber_bars(source, segment_starts=starts[1:])
    return CorruptionPair(kind=CorruptionKind.PERMUTATION, method=method,
                          source=source, target=arr, seed=seed)


def rotate_document(tokens, rng=None, keep_bar_ids: bool = False, *,
                    seed: int | None = None) -> CorruptionPair:
    """Rotate the sequence to start at a uniformly chosen token."""
    arr = _nonempty(tokens)
    seed = _record_seed(rng, seed)
    rng = check_rng(rng)
    k = int(rng.integers(len(arr)))
    source = np.concatenate([arr[k:], arr[:k]], axis=0)
    if not keep_bar_ids:
        starts = (len(arr) - k,) if k else ()
        source = renumber_bars(source, segment_starts=starts)
    return CorruptionPair(kind=CorruptionKind.ROTATION,
                          method=SelectionMethod.TOKEN, source=source,
                          target=arr, seed=seed)


@dataclass
class CorruptionConfig:
    """What :func:`corrupt` may draw and with which budgets.

    ``kinds`` lists the enabled corruptions (drawn uniformly).
    ``methods`` optionally restricts the method set per kind;
    ``method_weights`` optionally biases the method draw (parallel to
    the effective method tuple, need not sum to 1). ``ratio`` is the
    selection budget, overridable per kind through ``ratios``.
    """

    kinds: tuple[CorruptionKind, ...] = tuple(CorruptionKind)
    methods: dict[CorruptionKind, tuple[SelectionMethod, ...]] = field(default_factory=dict)
    method_weights: dict[CorruptionKind, tuple[float, ...]] = field(default_factory=dict)
    ratio: float = 0.15
    ratios: dict[CorruptionKind, float] = field(default_factory=dict)
    keep_bar_ids: bool = False

    def __post_init__(self):
        kinds = tuple(CorruptionKind(k) for k in self.kinds)
        if not kinds:
            raise ValueError("at least one corruption kind must be enabled")
        if len(set(kinds)) != len(kinds):
            raise ValueError("corruption kinds must be unique")
        self.kinds = kinds
        methods = {}
        for k, ms in self.methods.items():
            k = CorruptionKind(k)
            ms = tuple(_check_method(k, m) for m in ms)
            if not ms:
                raise ValueError(f"empty method list for {k.value}")
            if len(set(ms)) != len(ms):
                raise ValueError(f"duplicate methods for {k.value}")
            methods[k] = ms
        self.methods = methods
        weights = {}
        for k, ws in self.method_weights.items():
            k = CorruptionKind(k)
            ws = tuple(float(w) for w in ws)
            if len(ws) != len(self.methods_for(k)):
                raise ValueError(
                    f"{k.value} has {len(self.methods_for(k))} methods but "
                    f"{len(ws)} weights"
                )
            if any(not np.isfinite(w) or w < 0 for w in ws) or sum(ws) <= 0:
                raise ValueError(f"weights for {k.value} must be non-negative with a positive sum")
            weights[k] = ws
        self.method_weights = weights
        check_ratio(self.ratio)
        ratios = {}
        for k, r in self.ratios.items():
            k = CorruptionKind(k)
            check_ratio(float(r), name=f"ratio[{k.value}]")
            ratios[k] = float(r)
        self.ratios = ratios
        self.keep_bar_ids = bool(self.keep_bar_ids)

    def methods_for(self, kind: CorruptionKind) -> tuple[SelectionMethod, ...]:
        return self.methods.get(CorruptionKind(kind)) or ALLOWED_METHODS[CorruptionKind(kind)]

    def weights_for(self, kind: CorruptionKind) -> tuple[float, ...] | None:
        return self.method_weights.get(CorruptionKind(kind))

    def ratio_for(self, kind: CorruptionKind) -> float:
        return self.ratios.get(CorruptionKind(kind), self.ratio)


def apply_corruption(tokens, kind: CorruptionKind, method: SelectionMethod,
                     ratio: float = 0.15, rng=None, keep_bar_ids: bool = False,
                     *, seed: int | None = None) -> CorruptionPair:
    """Apply one named corruption, returning the (source, target) pair."""
    kind = CorruptionKind(kind)
    method = _check_method(kind, method)
    if kind is CorruptionKind.MASKING:
        return mask_tokens(tokens, method, ratio, rng, seed=seed)
    if kind is CorruptionKind.DELETION:
        return delete_tokens(tokens, method, ratio, rng, seed=seed)
    if kind is CorruptionKind.INFILLING:
        return infill_spans(tokens, method, ratio, rng, seed=seed)
    if kind is CorruptionKind.PERMUTATION:
        return permute_sentences(tokens, method, rng, keep_bar_ids, seed=seed)
    return rotate_document(tokens, rng, keep_bar_ids, seed=seed)


def corrupt(tokens, rng=None, config: CorruptionConfig | None = None) -> CorruptionPair:
    """Draw a corruption kind and method, apply it, return the pair.

    The kind is drawn uniformly from ``config.kinds``; the method
    uniformly (or weighted) from that kind's configured set. One call
    applies exactly one transformation.
    """
    cfg = config if config is not None else CorruptionConfig()
    seed = _record_seed(rng, None)
    rng = check_rng(rng)
    kind = cfg.kinds[int(rng.integers(len(cfg.kinds)))]
    methods = cfg.methods_for(kind)
    weights = cfg.weights_for(kind)
    if weights is None:
        method = methods[int(rng.integers(len(methods)))]
    else:
        p = np.asarray(weights, dtype=float)
        method = methods[int(rng.choice(len(methods), p=p / p.sum()))]
    return apply_corruption(tokens, kind, method, ratio=cfg.ratio_for(kind),
                            rng=rng, keep_bar_ids=cfg.keep_bar_ids, seed=seed)

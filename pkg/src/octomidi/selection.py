"""Choosing what to corrupt: cells, tokens, bars, or duration-budget spans.

Six methods combine a scope (single cell, single token, whole bar, or a
multi-token span whose musical length is drawn as a duration budget) with a
granularity (one field column vs. all eight fields). Units are drawn
uniformly without replacement until the selected fraction of the ``L x 8``
cell grid reaches the requested ratio; the final unit may overshoot, and
running out of units stops the draw early.

Budgeted spans start at an unselected token ``p`` and extend over the
smallest token count whose summed durations reach a budget ``m`` drawn
uniformly from 1..128 sixty-fourths, truncating at the sequence end and at
previously selected tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .codec import N_FIELDS, validate_tokens
from .errors import EmptySequenceError
from .validation import check_ratio, check_rng
from .vocab import MAX_DURATION, VALUE_OFFSET, Field


class SelectionMethod(Enum):
    """Scope and granularity of one corruption-selection unit.

    The string values are the wire names used in pair-file headers.
    """

    ELEMENT = "element"
    TOKEN = "token"
    BAR_ELEMENT = "bar-element"
    BAR_TOKEN = "bar-token"
    NBAR_ELEMENT = "nbar-element"
    NBAR_TOKEN = "nbar-token"

    @property
    def element_wise(self) -> bool:
        """True when each unit touches one field column instead of all 8."""
        return self in (
            SelectionMethod.ELEMENT,
            SelectionMethod.BAR_ELEMENT,
            SelectionMethod.NBAR_ELEMENT,
        )


@dataclass(frozen=True)
class Selection:
    """Result of one selection draw.

    ``mask`` flags every selected cell. ``token_spans`` lists the extents
    of token-scope units (single tokens or budgeted spans) in index order;
    cell- and bar-scope methods leave it empty.
    """

    method: SelectionMethod
    mask: np.ndarray
    token_spans: tuple[tuple[int, int], ...] = ()

    @property
    def coverage(self) -> float:
        return float(self.mask.mean()) if self.mask.size else 0.0


def token_durations(tokens: np.ndarray) -> np.ndarray:
    """Per-token duration in 64th steps, decoded from the duration field."""
    return tokens[:, Field.DURATION] - VALUE_OFFSET + 1


def nbar_span(durations, start: int, budget: int) -> int:
    """Token count of the span at ``start`` covering ``budget`` 64th steps.

    Returns the smallest ``n >= 1`` such that the ``n`` durations starting
    at ``start`` sum to at least ``budget``, or every remaining token when
    the sequence ends first.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if not 0 <= start < len(durations):
        raise IndexError(f"start {start} out of range for {len(durations)} tokens")
    total = 0
    n = 0
    for d in durations[start:]:
        total += int(d)
        n += 1
        if total >= budget:
            break
    return n


class _Pool:
    """Uniform draws without replacement with O(1) targeted removal."""

    def __init__(self, n: int) -> None:
        self.items = list(range(n))
        self.slot = list(range(n))

    def __len__(self) -> int:
        return len(self.items)

    def draw(self, rng: np.random.Generator) -> int:
        item = self.items[int(rng.integers(len(self.items)))]
        self.remove(item)
        return item

    def remove(self, item: int) -> None:
        i = self.slot[item]
        if i < 0:
            return
        last = self.items[-1]
        self.items[i] = last
        self.slot[last] = i
        self.items.pop()
        self.slot[item] = -1

    def contains(self, item: int) -> bool:
        return self.slot[item] >= 0


def _draw_spans(n_tokens: int, target_cells: float, cells_per_token: int,
                length_at, rng: np.random.Generator):
    """Generic span engine shared by token, budgeted-span, and infill draws.

    ``length_at(start)`` gives the wanted token count for a span beginning
    at ``start``; the span is then clipped at the sequence end and at the
    first previously selected token.
    """
    pool = _Pool(n_tokens)
    spans: list[tuple[int, int]] = []
    covered = 0.0
    while covered < target_cells and len(pool):
        start = pool.draw(rng)
        want = length_at(start)
        end = start + 1
        while end - start < want and end < n_tokens and pool.contains(end):
            pool.remove(end)
            end += 1
        spans.append((start, end))
        covered += (end - start) * cells_per_token
    spans.sort()
    return spans


def _bar_groups(tokens: np.ndarray) -> list[np.ndarray]:
    """Row indices of each distinct bar id, in ascending bar order."""
    bars = tokens[:, Field.BAR]
    return [np.flatnonzero(bars == b) for b in np.unique(bars)]


def select(tokens, method: SelectionMethod, ratio: float,
           rng=None) -> Selection:
    """Draw corruption targets covering ``ratio`` of the cell grid.

    Budgeted element spans can cover at most 1/8 of the grid (one field
    column per span over disjoint tokens), so ratios above that saturate
    and stop at pool exhaustion.
    """
    arr = validate_tokens(tokens)
    if len(arr) == 0:
        raise EmptySequenceError("cannot select from an empty sequence")
    method = SelectionMethod(method)
    check_ratio(ratio)
    rng = check_rng(rng)

    n = len(arr)
    target = ratio * n * N_FIELDS
    mask = np.zeros((n, N_FIELDS), dtype=bool)
    spans: tuple[tuple[int, int], ...] = ()

    if method is SelectionMethod.ELEMENT:
        pool = _Pool(n * N_FIELDS)
        covered = 0
        while covered < target and len(pool):
            row, col = divmod(pool.draw(rng), N_FIELDS)
            mask[row, col] = True
            covered += 1
    elif method is SelectionMethod.TOKEN:
        drawn = _draw_spans(n, target, N_FIELDS, lambda _s: 1, rng)
        for s, e in drawn:
            mask[s:e] = True
        spans = tuple(drawn)
    elif method is SelectionMethod.BAR_ELEMENT:
        # A unit is one field column within one bar, so the same bar can
        # be drawn again with a different field.
        groups = _bar_groups(arr)
        pool = _Pool(len(groups) * N_FIELDS)
        covered = 0
        while covered < target and len(pool):
            g, col = divmod(pool.draw(rng), N_FIELDS)
            mask[groups[g], col] = True
            covered += len(groups[g])
    elif method is SelectionMethod.BAR_TOKEN:
        groups = _bar_groups(arr)
        pool = _Pool(len(groups))
        covered = 0
        while covered < target and len(pool):
            rows = groups[pool.draw(rng)]
            mask[rows] = True
            covered += len(rows) * N_FIELDS
    else:
        durations = token_durations(arr)
        element = method.element_wise

        def length_at(start: int) -> int:
            budget = int(rng.integers(1, MAX_DURATION + 1))
            return nbar_span(durations, start, budget)

        drawn = _draw_spans(n, target, 1 if element else N_FIELDS, length_at, rng)
        for s, e in drawn:
            if element:
                mask[s:e, int(rng.integers(N_FIELDS))] = True
            else:
                mask[s:e] = True
        spans = tuple(drawn)

    return Selection(method=method, mask=mask, token_spans=spans)


def poisson_spans(tokens, ratio: float, rng=None, lam: float = 3.0):
    """Token spans with lengths ~ Poisson(lam) clipped to >= 1.

    Same no-replacement engine and stopping rule as budgeted spans; used
    for span infilling at single-token scope.
    """
    arr = validate_tokens(tokens)
    if len(arr) == 0:
        raise EmptySequenceError("cannot draw spans from an empty sequence")
    check_ratio(ratio)
    rng = check_rng(rng)
    target = ratio * len(arr) * N_FIELDS
    return tuple(_draw_spans(len(arr), target, N_FIELDS,
                             lambda _s: max(1, int(rng.poisson(lam))), rng))


def nbar_spans(tokens, ratio: float, rng=None):
    """Duration-budgeted token spans (the span rule behind NBAR methods)."""
    sel = select(tokens, SelectionMethod.NBAR_TOKEN, ratio, rng)
    return sel.token_spans

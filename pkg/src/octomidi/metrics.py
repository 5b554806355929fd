"""Evaluation metrics for octuple token sequences.

Everything is built from two per-bar features:

* pitch-class histograms: 12 bins, normalized to sum 1 (an empty bar
  yields the zero vector, identifiable by its zero sum);
* grooving vectors: 64 onset bits, bit ``j`` set when a note starts in
  the j-th 64th-slice of the bar.

On top of these sit the mean per-bar pitch-class entropy (0 for one-note
bars up to log2(12) for a uniform spread), the grooving similarity (mean
pairwise ``1 - hamming/64`` over non-empty bar pairs), and a Frechet
similarity ``exp(-d)`` comparing Gaussian summaries of two sequences'
per-bar pitch histograms. :func:`compare_to_reference` bundles the four
numbers used to judge generated continuations against ground truth and
prompt; :func:`evaluate_corpus` averages them per piece, in piece order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import bar_length_64, validate_tokens
from .errors import (
    AllEmptyError,
    AlignmentMismatchError,
    DegenerateCountError,
    DimensionMismatchError,
    TooFewBarsError,
)
from .vocab import VALUE_OFFSET, VOCABS, Field

PITCH_CLASSES = 12
GROOVE_BITS = 64
MAX_PITCH_ENTROPY = math.log2(PITCH_CLASSES)

# Covariances this close to singular get a diagonal boost before the
# matrix square root (12-bin histograms always qualify: normalization
# pins one eigenvalue at zero).
_SINGULAR_EPS = 1e-9
_DIAGONAL_BOOST = 1e-6


def pitch_class_histogram(tokens, scope: str = "whole") -> np.ndarray:
    """Normalized 12-bin pitch-class counts, whole-sequence or per bar.

    ``scope="whole"`` returns one histogram; ``scope="per-bar"`` returns
    one row per bar index 0..max, where bars without tokens come out as
    zero vectors (callers exclude those from averages).
    """
    arr = validate_tokens(tokens)
    pcs = (arr[:, Field.PITCH] - VALUE_OFFSET) % PITCH_CLASSES
    if scope == "whole":
        hist = np.bincount(pcs, minlength=PITCH_CLASSES).astype(np.float64)
        total = hist.sum()
        return hist / total if total else hist
    if scope != "per-bar":
        raise ValueError(f"scope must be 'whole' or 'per-bar', got {scope!r}")
    if len(arr) == 0:
        return np.zeros((0, PITCH_CLASSES))
    bars = arr[:, Field.BAR] - VALUE_OFFSET
    out = np.zeros((int(bars.max()) + 1, PITCH_CLASSES))
    np.add.at(out, (bars, pcs), 1.0)
    sums = out.sum(axis=1)
    nonempty = sums > 0
    out[nonempty] /= sums[nonempty, None]
    return out


def pitch_entropy(histograms) -> float:
    """Mean entropy in bits over the non-empty histograms.

    Accepts one histogram or a stack, as counts or proportions (rows are
    renormalized); all-zero rows (empty bars) are skipped. Raises
    :class:`AllEmptyError` when nothing remains.
    """
    hists = np.atleast_2d(np.asarray(histograms, dtype=np.float64))
    if hists.ndim != 2 or hists.shape[1] != PITCH_CLASSES:
        raise DimensionMismatchError(
            f"histograms must have {PITCH_CLASSES} bins, got shape {hists.shape}"
        )
    if not np.isfinite(hists).all() or (hists < 0).any():
        raise ValueError("histogram bins must be finite and non-negative")
    sums = hists.sum(axis=1)
    hists = hists[sums > 0] / sums[sums > 0, None]
    if len(hists) == 0:
        raise AllEmptyError("all histograms are empty")
    safe = np.where(hists > 0, hists, 1.0)
    return float(-(hists * np.log2(safe)).sum(axis=1).mean())


def _bar_ids(arr: np.ndarray) -> np.ndarray:
    return arr[:, Field.BAR] - VALUE_OFFSET


def _groove_bits(arr: np.ndarray, rows: np.ndarray) -> np.ndarray:
    num, den = VOCABS[Field.TIMESIG].to_value(int(arr[rows[0], Field.TIMESIG]))
    length = bar_length_64(num, den)
    pos = arr[rows, Field.POSITION] - VALUE_OFFSET
    bits = np.minimum(pos * GROOVE_BITS // length, GROOVE_BITS - 1)
    vec = np.zeros(GROOVE_BITS, dtype=bool)
    vec[bits] = True
    return vec


def grooving_vector(tokens, bar_index: int) -> np.ndarray:
    """64 onset bits for one bar; all-False when the bar has no tokens.

    Bit ``j`` covers the j-th 64th-slice of the bar, so bars shorter than
    64 steps leave trailing bits unused and longer bars fold multiple
    positions into one bit.
    """
    arr = validate_tokens(tokens)
    if int(bar_index) < 0:
        raise ValueError(f"bar_index must be >= 0, got {bar_index}")
    rows = np.flatnonzero(_bar_ids(arr) == int(bar_index)) if len(arr) else []
    if len(rows) == 0:
        return np.zeros(GROOVE_BITS, dtype=bool)
    return _groove_bits(arr, rows)


def _groove_stack(arr: np.ndarray) -> np.ndarray:
    bars = _bar_ids(arr)
    return np.stack([_groove_bits(arr, np.flatnonzero(bars == b))
                     for b in np.unique(bars)])


def groove_similarity(tokens) -> float:
    """Mean pairwise ``1 - hamming/64`` over all non-empty bar pairs."""
    arr = validate_tokens(tokens)
    if len(arr) == 0 or len(np.unique(_bar_ids(arr))) < 2:
        raise TooFewBarsError("grooving similarity needs >= 2 non-empty bars")
    grooves = _groove_stack(arr)
    diffs = (grooves[:, None, :] != grooves[None, :, :]).sum(axis=2)
    iu = np.triu_indices(len(grooves), k=1)
    return float((1.0 - diffs[iu] / GROOVE_BITS).mean())


@dataclass(frozen=True)
class GaussianSummary:
    """Mean, unbiased covariance and row count of a feature matrix."""

    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (len(mean), len(mean)):
            raise DimensionMismatchError(
                f"mean {mean.shape} and covariance {cov.shape} do not agree"
            )
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise ValueError("summary statistics must be finite")
        scale = max(1.0, float(np.abs(cov).max()) if cov.size else 1.0)
        if cov.size and float(np.abs(cov - cov.T).max()) > 1e-6 * scale:
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (cov + cov.T) / 2.0)
        object.__setattr__(self, "count", int(self.count))


def summarize(features) -> GaussianSummary:
    """Fit a Gaussian summary to feature rows (needs at least 2)."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise DimensionMismatchError(f"features must be 2-d, got shape {feats.shape}")
    if len(feats) < 2:
        raise DegenerateCountError(
            f"need >= 2 feature rows for a covariance, got {len(feats)}"
        )
    if not np.isfinite(feats).all():
        raise ValueError("features contain NaN or infinity")
    return GaussianSummary(mean=feats.mean(axis=0),
                           cov=np.atleast_2d(np.cov(feats, rowvar=False)),
                           count=len(feats))


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((cov + cov.T) / 2.0)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _near_singular(cov: np.ndarray) -> bool:
    w = np.linalg.eigvalsh((cov + cov.T) / 2.0)
    return bool(w.min() <= _SINGULAR_EPS * max(1.0, float(w.max())))


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """Frechet distance between two Gaussian summaries.

    ``d = sqrt(|mu_a - mu_b|^2 + Tr(Ca + Cb - 2 (Ca^1/2 Cb Ca^1/2)^1/2))``
    with the matrix square roots taken by symmetric eigendecomposition,
    negative eigenvalues clipped at zero and the inner squared value
    floored at zero. When either covariance is near-singular, both get
    the same small diagonal boost first; applying it to both sides keeps
    the distance symmetric and ``d(a, a) = 0`` exact.
    """
    for s in (a, b):
        if s.count < 2:
            raise DegenerateCountError(
                f"summaries need count >= 2, got {s.count}"
            )
    if a.mean.shape != b.mean.shape:
        raise DimensionMismatchError(
            f"summaries have different dimensions: {a.mean.shape} vs {b.mean.shape}"
        )
    ca, cb = a.cov, b.cov
    if _near_singular(ca) or _near_singular(cb):
        boost = _DIAGONAL_BOOST * np.eye(len(a.mean))
        ca, cb = ca + boost, cb + boost
    root = _psd_sqrt(ca)
    inner = root @ cb @ root
    w = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    cross = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    diff = a.mean - b.mean
    d2 = float(diff @ diff) + float(np.trace(ca) + np.trace(cb)) - 2.0 * cross
    # trace cancellation leaves O(eps)-scale noise that sqrt would amplify
    noise = 1e-12 * max(1.0, float(np.trace(ca) + np.trace(cb)))
    return math.sqrt(d2) if d2 > noise else 0.0


def _bar_histogram_summary(tokens) -> GaussianSummary:
    hists = pitch_class_histogram(tokens, scope="per-bar")
    return summarize(hists[hists.sum(axis=1) > 0])


def pitch_similarity(generated, reference) -> float:
    """``exp(-d)`` over Gaussian summaries of per-bar pitch histograms.

    1.0 means the two sequences have identical summary statistics; the
    value decays towards 0 as the Frechet distance grows. Both sequences
    need at least 2 non-empty bars.
    """
    return math.exp(-frechet_distance(_bar_histogram_summary(generated),
                                      _bar_histogram_summary(reference)))


@dataclass(frozen=True)
class MetricReport:
    """Four-number comparison of a generated piece against ground truth.

    Similarities live in (0, 1] (higher is better); the entropy and
    groove columns are absolute differences (lower is better). A perfect
    copy scores (1.0, 1.0, 0.0, 0.0).
    """

    reference_similarity: float
    prompt_similarity: float
    pitch_entropy_diff: float
    groove_diff: float

    def as_dict(self) -> dict[str, float]:
        return {
            "reference_similarity": self.reference_similarity,
            "prompt_similarity": self.prompt_similarity,
            "pitch_entropy_diff": self.pitch_entropy_diff,
            "groove_diff": self.groove_diff,
        }


def compare_to_reference(generated, reference, prompt=None) -> MetricReport:
    """Score one generated sequence against its reference (and prompt).

    ``prompt`` is the continuation prompt when one exists; comparing the
    generation's pitch statistics to it measures how much the output
    merely repeats the prompt. It defaults to the reference.
    """
    if prompt is None:
        prompt = reference
    entropy = lambda seq: pitch_entropy(pitch_class_histogram(seq, scope="per-bar"))
    return MetricReport(
        reference_similarity=pitch_similarity(generated, reference),
        prompt_similarity=pitch_similarity(generated, prompt),
        pitch_entropy_diff=abs(entropy(generated) - entropy(reference)),
        groove_diff=abs(groove_similarity(generated) - groove_similarity(reference)),
    )


def evaluate_corpus(generated, references, prompts=None) -> MetricReport:
    """Per-piece reports averaged field-wise, in piece-index order."""
    generated = list(generated)
    references = list(references)
    prompts = list(prompts) if prompts is not None else [None] * len(generated)
    if not (len(generated) == len(references) == len(prompts)):
        raise AlignmentMismatchError(
            f"corpus sizes differ: {len(generated)} generated, "
            f"{len(references)} references, {len(prompts)} prompts"
        )
    if not generated:
        raise AllEmptyError("no pieces to evaluate")
    reports = [compare_to_reference(g, r, p)
               for g, r, p in zip(generated, references, prompts)]
    n = len(reports)
    return MetricReport(
        reference_similarity=sum(r.reference_similarity for r in reports) / n,
        prompt_similarity=sum(r.prompt_similarity for r in reports) / n,
        pitch_entropy_diff=sum(r.pitch_entropy_diff for r in reports) / n,
        groove_diff=sum(r.groove_diff for r in reports) / n,
    )

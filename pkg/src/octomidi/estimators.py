"""Estimator-style wrappers around the functional API.

These follow the scikit-learn transformer protocol (``fit`` validates and
returns ``self``, ``transform`` maps a list of inputs to a list of
outputs, parameters are plain constructor attributes), so they compose
with ``sklearn.pipeline.Pipeline`` and ``clone``/``get_params`` work as
usual. They hold no fitted state; ``fit`` exists for protocol
compatibility and early parameter validation.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .codec import decode_tokens, encode_score, validate_tokens
from .corruption import CorruptionKind, apply_corruption
from .midi import Score, parse_midi, write_midi
from .selection import SelectionMethod
from .validation import check_ratio, check_rng


class MidiReader(BaseEstimator, TransformerMixin):
    """Transform MIDI byte strings into Score objects."""

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return [parse_midi(data) for data in X]

    def inverse_transform(self, X):
        return [write_midi(score) for score in X]


class OctupleEncoder(BaseEstimator, TransformerMixin):
    """Transform Scores into octuple token arrays (and back).

    >>> OctupleEncoder().fit_transform([score])[0].shape
    (n_notes, 8)
    """

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        for i, score in enumerate(X):
            if not isinstance(score, Score):
                raise TypeError(f"X[{i}] is {type(score).__name__}, expected Score")
        return [encode_score(score) for score in X]

    def inverse_transform(self, X):
        return [decode_tokens(tokens) for tokens in X]


class SequenceCorruptor(BaseEstimator, TransformerMixin):
    """Transform clean token sequences into corruption pairs.

    Parameters mirror :func:`octomidi.corruption.apply_corruption`. With
    an integer ``random_state`` every ``transform`` call replays the same
    draws, the scikit-learn convention for stochastic transformers.
    """

    def __init__(self, kind="masking", method="element", ratio: float = 0.15,
                 keep_bar_ids: bool = False, random_state=None):
        self.kind = kind
        self.method = method
        self.ratio = ratio
        self.keep_bar_ids = keep_bar_ids
        self.random_state = random_state

    def fit(self, X=None, y=None):
        CorruptionKind(self.kind)
        SelectionMethod(self.method)
        check_ratio(self.ratio)
        check_rng(self.random_state)
        return self

    def transform(self, X):
        self.fit()
        rng = check_rng(self.random_state)
        return [
            apply_corruption(validate_tokens(tokens), CorruptionKind(self.kind),
                             SelectionMethod(self.method), ratio=self.ratio,
                             rng=rng, keep_bar_ids=self.keep_bar_ids)
            for tokens in X
        ]

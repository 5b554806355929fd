"""Input-validation helpers shared across the public API."""

from __future__ import annotations

import numbers

import numpy as np


def check_rng(rng) -> np.random.Generator:
    """Coerce ``None``, a seed, or a Generator into a Generator.

    ``None`` gives fresh OS entropy; pass a seed or a Generator for
    reproducible draws.
    """
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, numbers.Integral):
        return np.random.default_rng(int(rng))
    raise TypeError(f"rng must be None, an int seed, or numpy Generator, got {type(rng).__name__}")


def check_ratio(ratio: float, name: str = "ratio") -> float:
    ratio = float(ratio)
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"{name} must be in the open interval (0, 1), got {ratio}")
    return ratio


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)

"""Shared numeric types and the entropy/uncertainty primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Index of the "previously unseen object" slot in every ID vocabulary.
NEWBORN = 0

NORM_ATOL = 1e-9
UNIT_ATOL = 1e-6


class ValidationError(ValueError):
    """Raised when an input violates a numeric contract."""


class LifecycleError(RuntimeError):
    """Raised when an operation is called in the wrong lifecycle state."""


def validate_map(p, expect_normalized: bool, size: int | None = None) -> np.ndarray:
    """Check a prediction map (or a stack of maps along the last axis).

    Returns the map as a float array. Raises ValidationError on a wrong
    length, a non-finite entry, or, when ``expect_normalized`` is set, on
    entries outside [0, 1] or a sum further than 1e-9 from one.
    """
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] < 1:
        raise ValidationError("prediction map must be a non-empty vector")
    if size is not None and arr.shape[-1] != size:
        raise ValidationError(f"prediction map length {arr.shape[-1]} != vocabulary size {size}")
    if np.isnan(arr).any():
        raise ValidationError("prediction map contains NaN")
    if not np.isfinite(arr).all():
        raise ValidationError("prediction map contains Inf")
    if expect_normalized:
        if (arr < 0).any() or (arr > 1).any():
            raise ValidationError("normalized map has entries outside [0, 1]")
        if (np.abs(arr.sum(axis=-1) - 1.0) > NORM_ATOL).any():
            raise ValidationError("normalized map does not sum to 1")
    return arr


def _entropy_rows(arr: np.ndarray) -> np.ndarray:
    k = arr.shape[-1]
    if k < 2:
        raise ValidationError("vocabulary size must be >= 2")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(arr > 0, arr * np.log(np.where(arr > 0, arr, 1.0)), 0.0)
    h = -terms.sum(axis=-1) / math.log(k)
    return np.clip(h, 0.0, 1.0)


def normalized_entropy(p) -> float:
    """Shannon entropy (natural log) divided by ln(vocabulary size), in [0, 1]."""
    arr = validate_map(p, expect_normalized=True)
    if arr.ndim != 1:
        raise ValidationError("normalized_entropy expects a single map")
    return float(_entropy_rows(arr))


def entropies(maps) -> np.ndarray:
    """Row-wise normalized entropy of an (n, V) stack of normalized maps."""
    arr = validate_map(maps, expect_normalized=True)
    return _entropy_rows(np.atleast_2d(arr))


def uncertainty(p) -> np.ndarray:
    """Elementwise p * (1 - p); each entry lies in [0, 0.25]."""
    arr = validate_map(p, expect_normalized=True)
    return arr * (1.0 - arr)


def unit(v, axis: int = -1) -> np.ndarray:
    """L2-normalize along ``axis``; zero vectors are rejected."""
    arr = np.asarray(v, dtype=float)
    norm = np.linalg.norm(arr, axis=axis, keepdims=True)
    if (norm == 0).any() or not np.isfinite(norm).all():
        raise ValidationError("cannot normalize a zero or non-finite vector")
    return arr / norm


@dataclass(frozen=True, eq=False)
class ObjectRecord:
    """One observed object: key vectors, raw prediction map and its entropy.

    ``index`` is the object's position within its frame and only serves
    as the last tie-breaker when ranking.
    """

    feature: np.ndarray
    embed: np.ndarray
    raw_map: np.ndarray
    entropy: float
    frame_stamp: int
    video_stamp: int
    index: int = 0

    def __post_init__(self):
        if not (0.0 <= self.entropy <= 1.0) or math.isnan(self.entropy):
            raise ValidationError(f"record entropy {self.entropy} outside [0, 1]")

    @classmethod
    def from_map(cls, feature, embed, raw_map, frame_stamp: int, video_stamp: int, index: int = 0):
        raw = validate_map(raw_map, expect_normalized=True)
        return cls(
            feature=unit(feature),
            embed=unit(embed),
            raw_map=raw,
            entropy=normalized_entropy(raw),
            frame_stamp=frame_stamp,
            video_stamp=video_stamp,
            index=index,
        )

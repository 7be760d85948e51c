"""Guidance cues and projection-free cross-attention over cached objects."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ValidationError, validate_map
from .memory import Role


@dataclass(frozen=True)
class GuidanceConfig:
    tau: float = 0.03

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValidationError(f"tau must be in (0, 1), got {self.tau}")


def make_cue(raw_map, role, tau: float, exclude: int | None = None) -> np.ndarray:
    """Mask a cached prediction map into a guidance cue.

    Confident maps become one-hot (+1 at the argmax, lowest index on ties).
    Uncertain maps become multi-hot with -1 wherever the map exceeds ``tau``.
    If the confident argmax falls on ``exclude`` the cue is all zeros.
    """
    p = validate_map(raw_map, expect_normalized=True)
    cue = np.zeros_like(p)
    if Role(role) is Role.CONFIDENT:
        j = int(np.argmax(p))
        if j != exclude:
            cue[j] = 1.0
    else:
        cue[p > tau] = -1.0
    return cue


def make_cues(maps: np.ndarray, roles, tau: float, exclude: int | None = None) -> np.ndarray:
    """Vectorized make_cue over an (r, V) stack with one role per row."""
    maps = np.asarray(maps, dtype=float)
    if maps.shape[0] == 0:
        return np.zeros((0, maps.shape[1] if maps.ndim == 2 else 0))
    kinds = {Role(r) for r in set(roles)}
    if kinds == {Role.CONFIDENT}:
        confident = np.ones(maps.shape[0], bool)
    elif kinds == {Role.UNCERTAIN}:
        confident = np.zeros(maps.shape[0], bool)
    else:
        confident = np.array([Role(r) is Role.CONFIDENT for r in roles])
    cues = np.where(maps > tau, -1.0, 0.0)
    if confident.any():
        rows = np.flatnonzero(confident)
        top = np.argmax(maps[rows], axis=1)
        cues[rows] = 0.0
        keep = top != exclude if exclude is not None else np.ones(len(rows), bool)
        cues[rows[keep], top[keep]] = 1.0
    return cues


def attention_weights(queries, keys) -> np.ndarray:
    """softmax(Q K^T / sqrt(D)) row-wise; shape (n, r)."""
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    k = np.asarray(keys, dtype=float)
    if k.shape[0] == 0:
        return np.zeros((q.shape[0], 0))
    if k.ndim != 2 or q.shape[1] != k.shape[1]:
        raise ValidationError(f"query dim {q.shape[1]} != key dim {k.shape[-1]}")
    logits = (q @ k.T) / math.sqrt(q.shape[1])
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    return w


def attend(queries, keys, cues, vocab_size: int | None = None, return_weights: bool = False):
    """Attention-weighted sum of cues; zero guidance when there are no keys."""
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    cues = np.asarray(cues, dtype=float)
    r = 0 if cues.size == 0 else cues.shape[0]
    if np.asarray(keys).shape[0] != r:
        raise ValidationError("number of keys and cues differ")
    if r == 0:
        if vocab_size is None:
            raise ValidationError("vocab_size is required when the memory is empty")
        out = np.zeros((q.shape[0], vocab_size))
        return (out, np.zeros((q.shape[0], 0))) if return_weights else out
    if vocab_size is not None and cues.shape[1] != vocab_size:
        raise ValidationError("cue length does not match the vocabulary")
    w = attention_weights(q, keys)
    # a convex combination of cues in [-1, 1]; clip away rounding overshoot
    out = np.clip(w @ cues, -1.0, 1.0)
    return (out, w) if return_weights else out


def intuitive_predict(raw_map, tm_guidance) -> np.ndarray:
    """Raw map plus transient-memory guidance (an unnormalized score map)."""
    p = np.asarray(raw_map, dtype=float)
    g = np.asarray(tm_guidance, dtype=float)
    if p.shape != g.shape:
        raise ValidationError(f"shape mismatch {p.shape} vs {g.shape}")
    return p + g

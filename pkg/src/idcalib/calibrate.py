"""Uncertainty-gated calibration of intuitive scores by experiential guidance.

All functions operate elementwise and accept a single map or an (n, V)
stack of maps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import ValidationError, _entropy_rows

SIM_EPS = 1e-8
ACTIVE_EPS = 1e-6


class Strategy(str, enum.Enum):
    TCEI = "tcei"
    AVERAGE = "average"
    ENTROPY = "entropy"
    NONE = "none"


@dataclass(frozen=True)
class Mask:
    """Which systems and which cache roles contribute guidance."""

    intuitive: bool = True
    experiential: bool = True
    confident: bool = True
    uncertain: bool = True

    @property
    def label(self) -> str:
        return "".join(
            flag if on else "-"
            for flag, on in zip("IECU", (self.intuitive, self.experiential, self.confident, self.uncertain))
        )


@dataclass
class CalibrationDiag:
    sim: np.ndarray
    p_ca: np.ndarray
    activation: np.ndarray | float


def _same_shape(*arrays):
    arrs = [np.asarray(a, dtype=float) for a in arrays]
    if any(a.shape != arrs[0].shape for a in arrs[1:]):
        raise ValidationError("calibration inputs must share one shape")
    return arrs


def similarity(p_ec, p_tm) -> np.ndarray:
    """|p_ec - p_tm| / max(|p_ec|, |p_tm|), 0 where both vanish; in [0, 2]."""
    p_ec, p_tm = _same_shape(p_ec, p_tm)
    denom = np.maximum(np.abs(p_ec), np.abs(p_tm))
    small = denom < SIM_EPS
    return np.where(small, 0.0, np.abs(p_ec - p_tm) / np.where(small, 1.0, denom))


def calibration_delta(p_ec, p_tm, sim) -> np.ndarray:
    p_ec, p_tm, sim = _same_shape(p_ec, p_tm, sim)
    return p_ec - (1.0 - sim) * p_tm


def experiential_predict(p_in, u, p_ca) -> np.ndarray:
    p_in, u, p_ca = _same_shape(p_in, u, p_ca)
    return p_in + u * p_ca


def calibrate_object(raw_map, p_in, p_tm, p_ec):
    """Full experiential step; returns (p_ex, CalibrationDiag)."""
    raw, p_in, p_tm, p_ec = _same_shape(raw_map, p_in, p_tm, p_ec)
    u = raw * (1.0 - raw)
    sim = similarity(p_ec, p_tm)
    p_ca = calibration_delta(p_ec, p_tm, sim)
    p_ex = experiential_predict(p_in, u, p_ca)
    activation = np.abs(u * p_ca).sum(axis=-1)
    return p_ex, CalibrationDiag(sim=sim, p_ca=p_ca, activation=activation)


def _clamped_entropy(scores: np.ndarray) -> np.ndarray:
    pos = np.clip(np.atleast_2d(scores), 0.0, None)
    total = pos.sum(axis=1, keepdims=True)
    h = np.ones(pos.shape[0])
    ok = total[:, 0] > 0
    if ok.any():
        h[ok] = _entropy_rows(pos[ok] / total[ok])
    return h


def combine(strategy: Strategy, raw, p_tm, p_ec):
    """Final score maps for one strategy; returns (p_ex, CalibrationDiag).

    ``average`` adds the mean of both guidances to the raw map. ``entropy``
    keeps, per object, whichever of raw+p_tm and raw+p_ec has the lower
    entropy once clamped to non-negative and renormalized (intuitive wins
    ties). ``none`` returns the raw map unchanged.
    """
    raw, p_tm, p_ec = _same_shape(raw, p_tm, p_ec)
    strategy = Strategy(strategy)
    if strategy is Strategy.TCEI:
        return calibrate_object(raw, raw + p_tm, p_tm, p_ec)
    zeros = np.zeros_like(raw)
    if strategy is Strategy.NONE:
        return raw.copy(), CalibrationDiag(sim=zeros, p_ca=zeros, activation=np.zeros(raw.shape[:-1]))
    p_in = raw + p_tm
    if strategy is Strategy.AVERAGE:
        p_ex = raw + 0.5 * (p_tm + p_ec)
    else:
        alt = raw + p_ec
        pick_alt = _clamped_entropy(alt) < _clamped_entropy(p_in)
        if raw.ndim == 1:
            p_ex = alt if pick_alt[0] else p_in
        else:
            p_ex = np.where(pick_alt[:, None], alt, p_in)
    # departure from the intuitive scores, comparable to |U * P^ca| for tcei
    activation = np.abs(p_ex - p_in).sum(axis=-1)
    return p_ex, CalibrationDiag(sim=zeros, p_ca=zeros, activation=activation)

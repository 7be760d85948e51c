"""Synthetic multi-object streams with appearance drift, and a frozen predictor.

Each trajectory has a latent unit appearance. Observed features are the
appearance plus a drift offset shared by every object in the frame plus
isotropic noise, renormalized to unit length. The predictor is enrolled on
the clean appearances at video start and never changes afterwards, so the
drift opens a gap between what it learned and what it sees.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .calibrate import Mask, Strategy
from .core import NEWBORN, LifecycleError, ValidationError, _entropy_rows, unit
from .engine import Engine, EngineConfig


class DriftKind(str, enum.Enum):
    NONE = "none"
    LINEAR = "linear"
    STEP = "step"
    OSCILLATING = "oscillating"


@dataclass(frozen=True)
class Scenario:
    num_videos: int = 3
    frames_per_video: int = 200
    objects_per_video: int = 8
    feature_dim: int = 32
    drift_kind: DriftKind = DriftKind.LINEAR
    drift_rate: float = 0.02
    noise_sigma: float = 0.05
    occlusion_prob: float = 0.1
    seed: int = 0
    temperature: float = 0.1
    newborn_bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "drift_kind", DriftKind(self.drift_kind))
        for name in ("num_videos", "frames_per_video", "objects_per_video", "feature_dim"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v}")
        if self.drift_rate < 0 or self.noise_sigma < 0:
            raise ValidationError("drift_rate and noise_sigma must be >= 0")
        if not 0.0 <= self.occlusion_prob < 1.0:
            raise ValidationError("occlusion_prob must be in [0, 1)")
        if self.temperature <= 0:
            raise ValidationError("temperature must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    @property
    def vocab_size(self) -> int:
        return self.objects_per_video + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["drift_kind"] = self.drift_kind.value
        return d

    def digest(self) -> str:
        """Stable hash identifying the scenario (seed excluded)."""
        d = self.to_dict()
        d.pop("seed")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


class Frame(NamedTuple):
    features: np.ndarray  # (k, D) unit rows
    slots: np.ndarray  # (k,) ground-truth vocabulary slots, never NEWBORN

    def __iter__(self):
        return iter(zip(self.features, self.slots))


@dataclass
class Video:
    appearances: np.ndarray  # (objects, D); trajectory i lives in slot i + 1
    frames: list[Frame] = field(default_factory=list)


def drift_offset(scenario: Scenario, t: int, direction: np.ndarray) -> np.ndarray:
    """Shared drift vector at frame ``t``.

    linear: t * rate along ``direction``; step: zero before the midpoint,
    then the linear offset reached at the midpoint; oscillating: that same
    amplitude times sin(2 pi t / (frames / 2)).
    """
    T = scenario.frames_per_video
    rate = scenario.drift_rate
    kind = scenario.drift_kind
    if kind is DriftKind.NONE or rate == 0:
        return np.zeros_like(direction)
    if kind is DriftKind.LINEAR:
        mag = t * rate
    elif kind is DriftKind.STEP:
        mag = 0.0 if t < T // 2 else rate * (T // 2)
    else:
        mag = rate * (T // 2) * math.sin(2 * math.pi * t / max(T / 2, 1))
    return mag * direction


def _rng(scenario: Scenario, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([scenario.seed, *stream]))


def generate_video(scenario: Scenario, video_index: int) -> Video:
    """Deterministic stream for (scenario.seed, video_index)."""
    rng = _rng(scenario, video_index)
    k, D = scenario.objects_per_video, scenario.feature_dim
    appearances = unit(rng.standard_normal((k, D)))
    direction = unit(rng.standard_normal(D))
    slots_all = np.arange(1, k + 1)
    video = Video(appearances)
    for t in range(scenario.frames_per_video):
        noise = rng.standard_normal((k, D)) * scenario.noise_sigma
        visible = rng.random(k) >= scenario.occlusion_prob
        if scenario.noise_sigma == 0 and not drift_offset(scenario, t, direction).any():
            feats = appearances.copy()
        else:
            feats = unit(appearances + drift_offset(scenario, t, direction) + noise)
        video.frames.append(Frame(feats[visible], slots_all[visible]))
    return video


class FrozenPredictor:
    """Prototype classifier standing in for a trained identity head.

    Scores are ``bias`` for the newborn slot and ``feature . prototype / T``
    for each enrolled slot, turned into probabilities with a softmax.
    Unenrolled slots get probability zero.
    """

    def __init__(self, vocab_size: int, feature_dim: int, temperature: float = 0.1, newborn_bias: float = 0.0):
        self.vocab_size = vocab_size
        self.feature_dim = feature_dim
        self.temperature = float(temperature)
        self.newborn_bias = float(newborn_bias)
        self._protos = np.zeros((vocab_size, feature_dim))
        self._enrolled = np.zeros(vocab_size, dtype=bool)
        self._frozen = False

    def enroll(self, slot: int, prototype) -> None:
        if self._frozen:
            raise LifecycleError("predictor is frozen; prototypes cannot change")
        if slot == NEWBORN or not 0 < slot < self.vocab_size:
            raise ValidationError(f"cannot enroll slot {slot}")
        self._protos[slot] = unit(prototype)
        self._enrolled[slot] = True

    def freeze(self) -> "FrozenPredictor":
        self._frozen = True
        self._protos.setflags(write=False)
        self._enrolled.setflags(write=False)
        return self

    @classmethod
    def for_video(cls, scenario: Scenario, video: Video) -> "FrozenPredictor":
        pred = cls(scenario.vocab_size, scenario.feature_dim, scenario.temperature, scenario.newborn_bias)
        for i, a in enumerate(video.appearances):
            pred.enroll(i + 1, a)
        return pred.freeze()

    def predict(self, features) -> np.ndarray:
        """Normalized prediction maps for one feature (V,) or a stack (n, V)."""
        if not self._enrolled.any():
            raise LifecycleError("no prototype enrolled")
        f = np.asarray(features, dtype=float)
        single = f.ndim == 1
        f = np.atleast_2d(f)
        logits = np.full((f.shape[0], self.vocab_size), -np.inf)
        logits[:, NEWBORN] = self.newborn_bias
        idx = np.flatnonzero(self._enrolled)
        logits[:, idx] = (f @ self._protos[idx].T) / self.temperature
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        return p[0] if single else p

    def serialize(self) -> bytes:
        header = json.dumps(
            {"V": self.vocab_size, "D": self.feature_dim, "T": self.temperature, "b0": self.newborn_bias}
        ).encode()
        return header + self._protos.tobytes() + self._enrolled.tobytes()


@dataclass
class FrameRecord:
    video: int
    frame: int
    gt_slots: np.ndarray
    assigned_ids: np.ndarray
    raw_entropy: np.ndarray
    activation: np.ndarray


def run_scenario(
    scenario: Scenario,
    engine_config: EngineConfig | None = None,
    strategy=Strategy.TCEI,
    mask: Mask | None = None,
    engine: Engine | None = None,
    on_frame=None,
) -> list[FrameRecord]:
    """Stream every video of the scenario through one engine, in order.

    ``on_frame(video, t, frame, raw_maps, result)`` is called after each
    processed frame when given.
    """
    if engine is None:
        cfg = engine_config or EngineConfig(scenario.vocab_size, scenario.feature_dim)
        if (cfg.vocab_size, cfg.feature_dim) != (scenario.vocab_size, scenario.feature_dim):
            raise ValidationError("engine vocabulary/feature size does not match the scenario")
        engine = Engine(cfg, strategy, mask)
    records: list[FrameRecord] = []
    for v in range(scenario.num_videos):
        video = generate_video(scenario, v)
        predictor = FrozenPredictor.for_video(scenario, video)
        engine.begin_video()
        for t, frame in enumerate(video.frames):
            P = predictor.predict(frame.features) if len(frame.slots) else np.zeros((0, scenario.vocab_size))
            res = engine.process_frame(frame.features, P)
            ent = _entropy_rows(P) if len(P) else np.zeros(0)
            records.append(FrameRecord(v, t, frame.slots, res.assigned_ids, ent, np.asarray(res.diag.activation)))
            if on_frame is not None:
                on_frame(v, t, frame, P, res)
    return records


def stream_lines(scenario: Scenario):
    """Newline-delimited JSON records of the generated stream, one per frame.

    Each line carries the features, ground-truth slots and the frozen
    predictor's raw maps, so a replay needs no predictor.
    """
    for v in range(scenario.num_videos):
        video = generate_video(scenario, v)
        predictor = FrozenPredictor.for_video(scenario, video)
        for t, frame in enumerate(video.frames):
            P = predictor.predict(frame.features) if len(frame.slots) else np.zeros((0, scenario.vocab_size))
            yield json.dumps({
                "video": v,
                "frame": t,
                "features": frame.features.tolist(),
                "slots": frame.slots.tolist(),
                "raw_maps": P.tolist(),
            }, separators=(",", ":"))


def replay_stream(lines, engine: Engine) -> list:
    """Feed dumped frames through ``engine``; returns the FrameResults."""
    results = []
    current = None
    for line in lines:
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec["video"] != current:
            engine.begin_video()
            current = rec["video"]
        D = engine.config.feature_dim
        feats = np.asarray(rec["features"], dtype=float).reshape(-1, D)
        maps = np.asarray(rec["raw_maps"], dtype=float).reshape(len(feats), -1)
        results.append(engine.process_frame(feats, maps))
    return results

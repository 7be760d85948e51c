"""Per-frame orchestration of both guidance systems over a video stream.

The engine never sees a model: it consumes features and raw prediction
maps produced upstream and returns calibrated score maps plus unique IDs.
Transient caches live for one video; experience caches persist across
videos for the lifetime of the engine.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .calibrate import CalibrationDiag, Mask, Strategy, combine
from .core import NEWBORN, UNIT_ATOL, LifecycleError, ObjectRecord, ValidationError, _entropy_rows, validate_map
from .guidance import GuidanceConfig, attend, make_cues
from .memory import CacheConfig, RankedCache, Role, Scope


@dataclass(frozen=True)
class EngineConfig:
    vocab_size: int
    feature_dim: int
    k_c: int = 3
    k_u: int = 2
    m_c: int = 64
    m_u: int = 64
    e_u: float = 0.2
    tau: float = 0.03
    ema_momentum: float = 0.9

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ValidationError("vocab_size must be >= 2")
        if self.feature_dim < 1:
            raise ValidationError("feature_dim must be >= 1")
        for name in ("k_c", "k_u", "m_c", "m_u"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v}")
        if not 0.0 <= self.e_u <= 1.0:
            raise ValidationError(f"e_u must be in [0, 1], got {self.e_u}")
        GuidanceConfig(self.tau)
        if not 0.0 <= self.ema_momentum < 1.0:
            raise ValidationError(f"ema_momentum must be in [0, 1), got {self.ema_momentum}")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass
class FrameResult:
    assigned_ids: np.ndarray
    p_ex: np.ndarray
    diag: CalibrationDiag
    elapsed_us: float = 0.0
    # populated only when the engine runs with trace=True
    trace: dict = field(default_factory=dict)


def assign_ids(score_maps, newborn: int = NEWBORN) -> np.ndarray:
    """Greedy unique assignment of IDs to objects.

    Repeatedly takes the highest remaining (object, id) score among
    unclaimed objects and unclaimed non-newborn IDs; ties go to the lower
    object index, then the lower ID. When that score is below the object's
    own newborn score, the object receives the newborn slot instead. The
    newborn slot may be given to several objects.
    """
    s = np.asarray(score_maps, dtype=float)
    n = 0 if s.size == 0 else s.shape[0]
    out = np.full(n, newborn, dtype=np.int64)
    if n == 0:
        return out
    work = s.copy()
    work[:, newborn] = -np.inf
    nb = s[:, newborn]
    open_rows = n
    while open_rows:
        flat = int(np.argmax(work))
        o, j = divmod(flat, work.shape[1])
        best = work[o, j]
        if best == -np.inf:
            break
        if best >= nb[o]:
            out[o] = j
            work[:, j] = -np.inf
        work[o, :] = -np.inf
        open_rows -= 1
    return out


class Engine:
    """Stateful calibration engine serving one sequential video stream.

    Parameters
    ----------
    config : EngineConfig
    strategy : how experiential guidance is combined with the intuitive scores
    mask : switches off a system or a cache role (its guidance becomes zero)
    trace : keep intermediate maps and attention weights in each FrameResult
    """

    def __init__(self, config: EngineConfig, strategy=Strategy.TCEI, mask: Mask | None = None, trace: bool = False):
        self.config = config
        self.strategy = Strategy(strategy)
        self.mask = mask or Mask()
        self.trace = trace
        c = config
        self.transient_confident = RankedCache(CacheConfig(c.k_c, Role.CONFIDENT, Scope.TRANSIENT, c.e_u))
        self.transient_uncertain = RankedCache(CacheConfig(c.k_u, Role.UNCERTAIN, Scope.TRANSIENT, c.e_u))
        self.experience_confident = RankedCache(CacheConfig(c.m_c, Role.CONFIDENT, Scope.EXPERIENCE, c.e_u))
        self.experience_uncertain = RankedCache(CacheConfig(c.m_u, Role.UNCERTAIN, Scope.EXPERIENCE, c.e_u))
        self.embed_tracker: dict[int, np.ndarray] = {}
        self.frame_counter = 0
        self.video_counter = 0
        self._started = False
        self._cue_memo: dict[int, tuple[int, np.ndarray]] = {}

    @property
    def caches(self) -> tuple[RankedCache, ...]:
        return (
            self.transient_confident,
            self.transient_uncertain,
            self.experience_confident,
            self.experience_uncertain,
        )

    def occupancy(self) -> dict[str, int]:
        return {f"{c.config.scope.value}_{c.config.role.value}": len(c) for c in self.caches}

    def begin_video(self) -> None:
        self.transient_confident.reset()
        self.transient_uncertain.reset()
        self.embed_tracker.clear()
        self.video_counter += 1
        self._started = True

    def _ema(self, slot: int, feature: np.ndarray) -> np.ndarray:
        prev = self.embed_tracker.get(slot)
        if prev is None:
            return feature
        beta = self.config.ema_momentum
        v = beta * prev + (1.0 - beta) * feature
        return v / math.sqrt(v @ v)

    def _ema_rows(self, slots: np.ndarray, feats: np.ndarray) -> np.ndarray:
        """Row-wise EMA of ``feats`` into the tracked embeddings of ``slots`` (not committed)."""
        out = feats.copy()
        rows = [i for i, s in enumerate(slots) if s != NEWBORN and int(s) in self.embed_tracker]
        if rows:
            prev = np.stack([self.embed_tracker[int(slots[i])] for i in rows])
            beta = self.config.ema_momentum
            v = beta * prev + (1.0 - beta) * feats[rows]
            out[rows] = v / np.linalg.norm(v, axis=1, keepdims=True)
        return out

    def update_embed(self, slot: int, feature) -> np.ndarray:
        """Fold ``feature`` into the slot's running embedding and return it."""
        emb = self._ema(int(slot), np.asarray(feature, dtype=float))
        self.embed_tracker[int(slot)] = emb
        return emb

    def _guidance(self, queries, caches, use: bool):
        c = self.config
        if not use:
            return np.zeros((queries.shape[0], c.vocab_size)), None
        chosen = [
            cache
            for cache in caches
            if (cache.config.role is Role.CONFIDENT and self.mask.confident)
            or (cache.config.role is Role.UNCERTAIN and self.mask.uncertain)
        ]
        chosen = [cache for cache in chosen if len(cache)]
        if not chosen:
            return attend(queries, np.zeros((0, c.feature_dim)), np.zeros((0, c.vocab_size)),
                          vocab_size=c.vocab_size, return_weights=True)
        keys = np.concatenate([cache.export_kv()[0] for cache in chosen])
        cues = np.concatenate([self._cues(cache) for cache in chosen])
        return attend(queries, keys, cues, vocab_size=c.vocab_size, return_weights=True)

    def _cues(self, cache: RankedCache) -> np.ndarray:
        hit = self._cue_memo.get(id(cache))
        if hit is not None and hit[0] == cache.version:
            return hit[1]
        _, maps, roles = cache.export_kv()
        cues = make_cues(maps, roles, self.config.tau, exclude=NEWBORN)
        self._cue_memo[id(cache)] = (cache.version, cues)
        return cues

    def process_frame(self, features, raw_maps) -> FrameResult:
        """Calibrate one frame of n objects and update every cache."""
        if not self._started:
            raise LifecycleError("begin_video must be called before process_frame")
        t0 = time.perf_counter()
        c = self.config
        feats = np.asarray(features, dtype=float)
        if feats.size == 0:
            feats = np.zeros((0, c.feature_dim))
        if feats.ndim != 2 or feats.shape[1] != c.feature_dim:
            raise ValidationError(f"features must have shape (n, {c.feature_dim}), got {feats.shape}")
        n = feats.shape[0]
        P = np.asarray(raw_maps, dtype=float)
        if P.size == 0:
            P = np.zeros((0, c.vocab_size))
        if P.ndim != 2 or P.shape[0] != n:
            raise ValidationError(f"expected {n} raw maps, got shape {P.shape}")
        P = validate_map(P, expect_normalized=True, size=c.vocab_size)
        if n == 0:
            self.frame_counter += 1
            empty = np.zeros((0, c.vocab_size))
            return FrameResult(np.zeros(0, np.int64), empty, CalibrationDiag(empty, empty, np.zeros(0)))
        norms = np.linalg.norm(feats, axis=1)
        if not np.all(np.abs(norms - 1.0) <= UNIT_ATOL):
            feats = feats / norms[:, None]
        H = _entropy_rows(P)

        # query embeddings under the provisional (raw argmax) slot
        G = self._ema_rows(np.argmax(P, axis=1), feats)

        active = self.strategy is not Strategy.NONE
        p_tm, w_tm = self._guidance(feats, (self.transient_confident, self.transient_uncertain),
                                    active and self.mask.intuitive)
        p_ec, w_ec = self._guidance(G, (self.experience_confident, self.experience_uncertain),
                                    active and self.mask.experiential)
        p_ex, diag = combine(self.strategy, P, p_tm, p_ec)
        ids = assign_ids(p_ex)

        self.frame_counter += 1
        committed = self._ema_rows(ids, feats)
        records = []
        for i in range(n):
            slot = int(ids[i])
            if slot != NEWBORN:
                self.embed_tracker[slot] = committed[i]
            records.append(ObjectRecord(feats[i], committed[i], P[i], float(H[i]), self.frame_counter, self.video_counter, i))
        for cache in self.caches:
            cache.update(records)

        result = FrameResult(ids, p_ex, diag, (time.perf_counter() - t0) * 1e6)
        if self.trace:
            result.trace = {
                "entropy": H,
                "raw": P,
                "p_tm": p_tm,
                "p_in": P + p_tm,
                "p_ec": p_ec,
                "w_tm": w_tm,
                "w_ec": w_ec,
                "occupancy": self.occupancy(),
            }
        return result

"""Bounded entropy-ranked key/value caches.

A cache keeps the ``capacity`` records with the lowest score drawn from its
current entries plus the incoming candidates. Confident caches score a
record by its entropy, uncertain caches by the distance of its entropy to a
target level. Because the objective is a sum of per-record scores, the best
fixed-size subset is simply the lowest-scoring records.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import ObjectRecord, ValidationError


class Role(str, enum.Enum):
    CONFIDENT = "confident"
    UNCERTAIN = "uncertain"


class Scope(str, enum.Enum):
    TRANSIENT = "transient"
    EXPERIENCE = "experience"


@dataclass(frozen=True)
class CacheConfig:
    capacity: int
    role: Role
    scope: Scope
    target_entropy: float = 0.2

    def __post_init__(self):
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise ValidationError(f"cache capacity must be a positive integer, got {self.capacity}")
        if not 0.0 <= self.target_entropy <= 1.0:
            raise ValidationError(f"target entropy must be in [0, 1], got {self.target_entropy}")
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "scope", Scope(self.scope))


def entry_score(record: ObjectRecord, config: CacheConfig) -> float:
    if config.role is Role.CONFIDENT:
        return record.entropy
    return abs(record.entropy - config.target_entropy)


class RankedCache:
    """Fixed-capacity cache of ObjectRecords sorted by ascending score.

    ``version`` increments on every mutation so callers can memoize work
    derived from the entries.
    """

    def __init__(self, config: CacheConfig):
        self.config = config
        self.entries: tuple[ObjectRecord, ...] = ()
        self.version = 0
        self._keys = None
        self._maps = None

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        c = self.config
        return f"RankedCache({c.scope.value}/{c.role.value}, {len(self)}/{c.capacity})"

    def _key_of(self, record: ObjectRecord) -> np.ndarray:
        return record.feature if self.config.scope is Scope.TRANSIENT else record.embed

    def update(self, candidates: Iterable[ObjectRecord]) -> "RankedCache":
        """Replace entries with the best ``capacity`` records of entries + candidates.

        Ranking is by (score, newer frame first, lower object index).
        """
        seen = {id(r) for r in self.entries}
        fresh = []
        for rec in candidates:
            if not 0.0 <= rec.entropy <= 1.0:
                raise ValidationError(f"record entropy {rec.entropy} outside [0, 1]")
            if id(rec) not in seen:
                fresh.append(rec)
                seen.add(id(rec))
        if not fresh:
            return self
        pool = self.entries + tuple(fresh)
        ent = np.fromiter((r.entropy for r in pool), float, len(pool))
        if self.config.role is Role.UNCERTAIN:
            ent = np.abs(ent - self.config.target_entropy)
        stamp = np.fromiter((r.frame_stamp for r in pool), np.int64, len(pool))
        idx = np.fromiter((r.index for r in pool), np.int64, len(pool))
        order = np.lexsort((idx, -stamp, ent))[: self.config.capacity]
        new_keys = np.stack([self._key_of(r) for r in fresh])
        new_maps = np.stack([r.raw_map for r in fresh])
        if self.entries:
            new_keys = np.concatenate([self._keys, new_keys])
            new_maps = np.concatenate([self._maps, new_maps])
        self.entries = tuple(pool[i] for i in order)
        self._keys = new_keys[order]
        self._maps = new_maps[order]
        self.version += 1
        return self

    def reset(self) -> "RankedCache":
        self.entries = ()
        self._keys = self._maps = None
        self.version += 1
        return self

    def scores(self) -> list[float]:
        return [entry_score(r, self.config) for r in self.entries]

    def export_kv(self):
        """Return (keys, raw_maps, roles) aligned with the entry order.

        Keys are features for transient caches and experience embeddings
        for experience caches. An empty cache yields (0, 0) matrices.
        """
        if not self.entries:
            return np.zeros((0, 0)), np.zeros((0, 0)), ()
        return self._keys, self._maps, (self.config.role,) * len(self.entries)

    def snapshot(self) -> list[dict]:
        return [
            {
                "entropy": r.entropy,
                "score": entry_score(r, self.config),
                "frame": r.frame_stamp,
                "video": r.video_stamp,
                "index": r.index,
            }
            for r in self.entries
        ]


def export_merged(caches: Sequence[RankedCache]):
    """Concatenate exports in the given order (confident caches go first)."""
    parts = [c.export_kv() for c in caches if len(c)]
    if not parts:
        return np.zeros((0, 0)), np.zeros((0, 0)), ()
    if len(parts) == 1:
        return parts[0]
    keys = np.concatenate([p[0] for p in parts])
    maps = np.concatenate([p[1] for p in parts])
    roles = tuple(role for p in parts for role in p[2])
    return keys, maps, roles

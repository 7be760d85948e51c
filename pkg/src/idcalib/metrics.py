"""Association metrics over harness outputs."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import NEWBORN, ValidationError

SCHEMA_VERSION = 1
ACTIVE_EPS = 1e-6
METRIC_FIELDS = ("id_accuracy", "id_switches", "mean_entropy", "activation_rate")


@dataclass
class RunSummary:
    id_accuracy: float
    id_switches: int
    mean_entropy: float
    activation_rate: float
    num_observations: int
    per_video: list[dict] = field(default_factory=list)
    scenario: str = ""

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}


def _video_stats(records) -> dict:
    anchor: dict[int, int] = {}
    last: dict[int, int] = {}
    correct = switches = total = active = 0
    ent_sum = 0.0
    for rec in records:
        for slot, aid, h, act in zip(rec.gt_slots, rec.assigned_ids, rec.raw_entropy, rec.activation):
            slot, aid = int(slot), int(aid)
            total += 1
            ent_sum += float(h)
            active += float(act) > ACTIVE_EPS
            if slot in last and last[slot] != aid:
                switches += 1
            last[slot] = aid
            # a trajectory is anchored to its first non-newborn ID
            if slot not in anchor and aid != NEWBORN:
                anchor[slot] = aid
            correct += aid != NEWBORN and anchor.get(slot) == aid
    return {"correct": correct, "switches": switches, "total": total, "active": active, "entropy": ent_sum}


def summarize(records, scenario: str = "") -> RunSummary:
    """Aggregate FrameRecords into a RunSummary.

    Accuracy counts an observation as correct when its ID equals the first
    non-newborn ID its trajectory received in the same video. A switch is
    any change of a trajectory's ID between consecutive observations.
    """
    records = list(records)
    if not records:
        raise ValidationError("cannot summarize an empty record set")
    by_video: dict[int, list] = {}
    for rec in records:
        by_video.setdefault(rec.video, []).append(rec)
    per_video = []
    tot = {"correct": 0, "switches": 0, "total": 0, "active": 0, "entropy": 0.0}
    for v in sorted(by_video):
        st = _video_stats(sorted(by_video[v], key=lambda r: r.frame))
        for key in tot:
            tot[key] += st[key]
        n = max(st["total"], 1)
        per_video.append({
            "video": v,
            "id_accuracy": st["correct"] / n,
            "id_switches": st["switches"],
            "mean_entropy": st["entropy"] / n,
            "activation_rate": st["active"] / n,
        })
    n = max(tot["total"], 1)
    return RunSummary(
        id_accuracy=tot["correct"] / n,
        id_switches=tot["switches"],
        mean_entropy=tot["entropy"] / n,
        activation_rate=tot["active"] / n,
        num_observations=tot["total"],
        per_video=per_video,
        scenario=scenario,
    )


@dataclass
class DeltaReport:
    deltas: dict

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "deltas": dict(self.deltas)}

    def to_text(self) -> str:
        width = max(len(k) for k in self.deltas)
        return "\n".join(f"{k:<{width}}  {v:+.6f}" for k, v in self.deltas.items())


def compare(a: RunSummary, b: RunSummary) -> DeltaReport:
    """Signed per-metric differences a - b for runs on the same scenario."""
    if a.scenario != b.scenario:
        raise ValidationError(f"scenario mismatch: {a.scenario!r} vs {b.scenario!r}")
    return DeltaReport({k: getattr(a, k) - getattr(b, k) for k in METRIC_FIELDS})


def mean_summary(summaries) -> dict:
    """Field-wise mean of several summaries (e.g. one per seed)."""
    summaries = list(summaries)
    if not summaries:
        raise ValidationError("no summaries to average")
    return {k: float(np.mean([getattr(s, k) for s in summaries])) for k in METRIC_FIELDS}


def to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in columns})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(round(v, 10))
    return v

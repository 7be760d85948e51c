"""Seeded experiment drivers behind the CLI: run, sweep, ablate, trace."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .calibrate import Mask, Strategy
from .config import SWEEPABLE, Experiment
from .engine import Engine
from .metrics import METRIC_FIELDS, RunSummary, mean_summary, summarize
from .simbench import run_scenario

FRAME_COLUMNS = ("seed", "video", "frame", "object", "gt_slot", "assigned_id", "entropy", "activation")
ABLATION_COLUMNS = ("table", "row", "intuitive", "experiential", "confident", "uncertain", "calibration") + METRIC_FIELDS


def run_seeds(exp: Experiment, strategy=None, mask: Mask | None = None, keep_frames: bool = False, **engine_overrides):
    """Run every seed; returns (per-seed summaries, mean metrics, frame rows)."""
    strategy = Strategy(strategy or exp.calibration)
    mask = mask if mask is not None else exp.mask
    summaries: list[RunSummary] = []
    frames: list[dict] = []
    for seed in exp.seeds:
        sc = exp.scenario_for(seed)
        cfg = exp.engine_config(**engine_overrides)
        records = run_scenario(sc, cfg, strategy, mask)
        summaries.append(summarize(records, scenario=sc.digest()))
        if keep_frames:
            for rec in records:
                for i, (g, a, h, act) in enumerate(zip(rec.gt_slots, rec.assigned_ids, rec.raw_entropy, rec.activation)):
                    frames.append({
                        "seed": seed, "video": rec.video, "frame": rec.frame, "object": i,
                        "gt_slot": int(g), "assigned_id": int(a), "entropy": float(h), "activation": float(act),
                    })
    return summaries, mean_summary(summaries), frames


def run_payload(exp: Experiment, summaries, mean) -> dict:
    return {
        "schema_version": 1,
        "command": "run",
        "scenario": exp.scenario_for(exp.seeds[0]).to_dict() | {"seed": None},
        "scenario_digest": summaries[0].scenario,
        "engine": {k: v for k, v in vars(exp.engine_config()).items()},
        "calibration": exp.calibration.value,
        "mask": exp.mask.label,
        "seeds": list(exp.seeds),
        **mean,
        "per_seed": [s.to_dict() | {"seed": seed} for seed, s in zip(exp.seeds, summaries)],
    }


def sweep_grid(exp: Experiment) -> tuple[tuple[str, ...], list[tuple]]:
    keys = tuple(k for k in SWEEPABLE if k in exp.sweep)
    cells = list(itertools.product(*(sorted(exp.sweep[k]) for k in keys)))
    return keys, cells


def sweep(exp: Experiment) -> list[dict]:
    """One row per grid cell, in lexicographic grid order."""
    keys, cells = sweep_grid(exp)
    rows = []
    for cell in cells:
        overrides = dict(zip(keys, cell))
        _, mean, _ = run_seeds(exp, **overrides)
        cfg = exp.engine_config(**overrides)
        rows.append({k: getattr(cfg, k) for k in SWEEPABLE} | mean)
    return rows


ABLATION_TABLES = {
    "systems": [
        ("none", Mask(intuitive=False, experiential=False), Strategy.TCEI),
        ("intuitive", Mask(experiential=False), Strategy.TCEI),
        ("experiential", Mask(intuitive=False), Strategy.TCEI),
        ("both", Mask(), Strategy.TCEI),
    ],
    "objects": [
        ("none", Mask(confident=False, uncertain=False), Strategy.TCEI),
        ("confident", Mask(uncertain=False), Strategy.TCEI),
        ("uncertain", Mask(confident=False), Strategy.TCEI),
        ("both", Mask(), Strategy.TCEI),
    ],
    "calibration": [
        ("none", Mask(), Strategy.NONE),
        ("average", Mask(), Strategy.AVERAGE),
        ("entropy", Mask(), Strategy.ENTROPY),
        ("tcei", Mask(), Strategy.TCEI),
    ],
}


def _canonical(mask: Mask, strategy: Strategy):
    # configurations that produce zero guidance all reduce to the baseline
    silent = (not mask.intuitive and not mask.experiential) or (not mask.confident and not mask.uncertain)
    if strategy is Strategy.NONE or silent:
        return Mask(), Strategy.NONE
    return mask, strategy


def ablate(exp: Experiment) -> list[dict]:
    """Three 4-row tables: systems, confident/uncertain objects, strategies."""
    memo: dict = {}
    rows = []
    for table, entries in ABLATION_TABLES.items():
        for name, mask, strategy in entries:
            key = _canonical(mask, strategy)
            if key not in memo:
                memo[key] = run_seeds(exp, strategy=key[1], mask=key[0])[1]
            rows.append({
                "table": table, "row": name,
                "intuitive": int(mask.intuitive), "experiential": int(mask.experiential),
                "confident": int(mask.confident), "uncertain": int(mask.uncertain),
                "calibration": strategy.value, **memo[key],
            })
    return rows


def aligned_text(rows: list[dict], columns) -> str:
    cells = [[str(c) for c in columns]]
    for row in rows:
        cells.append([f"{row[c]:.4f}" if isinstance(row[c], float) else str(row[c]) for c in columns])
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells) + "\n"


def _vec(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def trace_lines(exp: Experiment, max_frames: int | None = None):
    """Yield one JSON-ready dict per object per frame for the first seed."""
    seed = exp.seeds[0]
    sc = exp.scenario_for(seed)
    engine = Engine(exp.engine_config(), exp.calibration, exp.mask, trace=True)
    lines: list[dict] = []

    def on_frame(v, t, frame, P, res):
        if max_frames is not None and t >= max_frames:
            return
        tr = res.trace
        for i in range(len(frame.slots)):
            lines.append({
                "seed": seed, "video": v, "frame": t, "object": i,
                "gt_slot": int(frame.slots[i]),
                "entropy": float(tr["entropy"][i]),
                "occupancy": tr["occupancy"],
                "w_tm": [] if tr["w_tm"] is None else _vec(tr["w_tm"][i]),
                "w_ec": [] if tr["w_ec"] is None else _vec(tr["w_ec"][i]),
                "p": _vec(tr["raw"][i]),
                "p_tm": _vec(tr["p_tm"][i]),
                "p_in": _vec(tr["p_in"][i]),
                "p_ec": _vec(tr["p_ec"][i]),
                "sim": _vec(res.diag.sim[i]),
                "p_ca": _vec(res.diag.p_ca[i]),
                "p_ex": _vec(res.p_ex[i]),
                "assigned_id": int(res.assigned_ids[i]),
            })

    run_scenario(sc, engine=engine, on_frame=on_frame)
    return lines


TRACE_FIELDS = (
    "seed", "video", "frame", "object", "gt_slot", "entropy", "occupancy", "w_tm", "w_ec",
    "p", "p_tm", "p_in", "p_ec", "sim", "p_ca", "p_ex", "assigned_id",
)


def dumps_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=False, separators=(",", ":"))

"""Release criteria, each at its stated tolerance.

Every test records one (criterion, passed, detail) row; the terminal summary
prints a PASS/FAIL line per criterion. Run just this module with
``pytest tests/test_acceptance.py -v``.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, make_record
from idcalib import config as cfgmod
from idcalib import experiments as ex
from idcalib.calibrate import Mask, Strategy, calibrate_object
from idcalib.cli import main
from idcalib.engine import Engine, EngineConfig
from idcalib.guidance import attend
from idcalib.memory import CacheConfig, RankedCache, Role, Scope, entry_score
from idcalib.simbench import FrozenPredictor, Scenario, generate_video
from oracles import subset_argmin

pytestmark = pytest.mark.slow


def record(name, ok, detail):
    ACCEPTANCE.append((name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def test_c1_eviction_oracle():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    mismatches = trials = 0
    for role in Role:
        for _ in range(1000):
            cap = int(rng.integers(1, 6))
            cfg = CacheConfig(cap, role, Scope.TRANSIENT, 0.2)
            cache = RankedCache(cfg)
            cache.update([make_record(float(e)) for e in rng.random(int(rng.integers(0, cap + 1)))])
            incumbents = list(cache.entries)
            new = [make_record(float(e)) for e in rng.random(int(rng.integers(0, 10 - len(incumbents) + 1)))]
            pool = incumbents + new
            cache.update(new)
            expected = subset_argmin([entry_score(r, cfg) for r in pool], cap)
            mismatches += {id(r) for r in cache.entries} != {id(pool[i]) for i in expected}
            trials += 1
    elapsed = time.perf_counter() - t0
    record("C1 eviction oracle", mismatches == 0 and elapsed < 5.0,
           f"{trials} pools, {mismatches} mismatches, {elapsed:.2f}s (budget 5s)")


def test_c2_attention_contract():
    rng = np.random.default_rng(202)
    worst_sum = worst_range = worst_single = 0.0
    for _ in range(10_000):
        n, r = int(rng.integers(1, 6)), int(rng.integers(1, 9))
        D, V = int(rng.integers(1, 65)), int(rng.integers(2, 12))
        q = rng.standard_normal((n, D)) * rng.uniform(0.1, 10)
        k = rng.standard_normal((r, D)) * rng.uniform(0.1, 10)
        cues = rng.integers(-1, 2, size=(r, V)).astype(float)
        g, w = attend(q, k, cues, return_weights=True)
        worst_sum = max(worst_sum, float(np.abs(w.sum(axis=1) - 1).max()))
        worst_range = max(worst_range, float(np.abs(g).max()) - 1.0)
        g1 = attend(q, k[:1], cues[:1])
        worst_single = max(worst_single, float(np.abs(g1 - cues[0]).max()))
    ok = worst_sum <= 1e-9 and worst_range <= 0.0 and worst_single == 0.0
    record("C2 attention contract", ok,
           f"10000 draws; max |sum w - 1| = {worst_sum:.1e}, max |g| - 1 = {worst_range:.1e}, "
           f"single-key error = {worst_single:.1e}")


def _inputs(rng, n, V):
    P = rng.dirichlet(np.full(V, 0.5), size=n)
    return P, rng.uniform(-1, 1, (n, V)), rng.uniform(-1, 1, (n, V))


def test_c3_calibration_identities():
    rng = np.random.default_rng(303)
    N, V = 10_000, 9
    errs = {}

    P, tm, _ = _inputs(rng, N, V)
    p_ex, _ = calibrate_object(P, P + tm, tm, tm.copy())
    errs["a"] = float(np.abs(p_ex - (P + tm)).max())

    onehot = np.eye(V)[rng.integers(0, V, N)]
    _, tm, ec = _inputs(rng, N, V)
    p_ex, _ = calibrate_object(onehot, onehot + tm, tm, ec)
    errs["b"] = float(np.abs(p_ex - (onehot + tm)).max())

    P, tm, _ = _inputs(rng, N, V)
    p_ex, _ = calibrate_object(P, P + tm, tm, np.zeros_like(tm))
    errs["c"] = float(np.abs(p_ex - (P + tm)).max())

    # (d) through the engine: a fresh engine has every cache empty
    flips = 0
    for _ in range(N):
        D = 6
        f = rng.standard_normal((1, D))
        p = rng.dirichlet(np.full(V, 0.5), size=1)
        eng = Engine(EngineConfig(V, D))
        eng.begin_video()
        flips += int(np.argmax(eng.process_frame(f, p).p_ex[0]) != np.argmax(p[0]))
    ok = max(errs.values()) <= 1e-12 and flips == 0
    record("C3 calibration identities", ok,
           ", ".join(f"({k}) max err {v:.1e}" for k, v in errs.items()) + f", (d) {flips}/{N} argmax flips")


def test_c4_frozen_predictor():
    sc = Scenario(num_videos=1, frames_per_video=10_000, objects_per_video=8, feature_dim=32)
    video = generate_video(sc, 0)
    pred = FrozenPredictor.for_video(sc, video)
    before = pred.serialize()
    eng = Engine(EngineConfig(sc.vocab_size, sc.feature_dim))
    eng.begin_video()
    for frame in video.frames:
        eng.process_frame(frame.features, pred.predict(frame.features))
    after = pred.serialize()
    record("C4 frozen predictor", before == after and eng.frame_counter == 10_000,
           f"{eng.frame_counter} frames, serialization identical: {before == after}")


class _Canonical:
    """Lazily computed canonical 20-seed results shared by C5 and C6."""

    def __init__(self):
        self.exp = cfgmod.load()
        self.cells: dict = {}

    def mean(self, strategy=Strategy.TCEI, mask=Mask(), **engine):
        key = (strategy, mask, tuple(sorted(engine.items())))
        if key not in self.cells:
            self.cells[key] = ex.run_seeds(self.exp, strategy=strategy, mask=mask, **engine)[1]["id_accuracy"]
        return self.cells[key]


@pytest.fixture(scope="module")
def canonical():
    return _Canonical()


def test_c5_benchmark_ordering(canonical):
    t0 = time.perf_counter()
    acc = {
        "tcei": canonical.mean(),
        "baseline": canonical.mean(Strategy.NONE),
        "intuitive": canonical.mean(mask=Mask(experiential=False)),
        "experiential": canonical.mean(mask=Mask(intuitive=False)),
        "average": canonical.mean(Strategy.AVERAGE),
        "entropy": canonical.mean(Strategy.ENTROPY),
    }
    elapsed = time.perf_counter() - t0
    checks = {
        "tcei>intuitive": acc["tcei"] > acc["intuitive"],
        "intuitive>baseline": acc["intuitive"] > acc["baseline"],
        "tcei>experiential": acc["tcei"] > acc["experiential"],
        "experiential>baseline": acc["experiential"] > acc["baseline"],
        "tcei>=average": acc["tcei"] >= acc["average"],
        "tcei>=entropy": acc["tcei"] >= acc["entropy"],
    }
    failed = [k for k, v in checks.items() if not v]
    detail = " ".join(f"{k}={v:.4f}" for k, v in acc.items())
    detail += f"; {elapsed:.0f}s; violated: {', '.join(failed) or 'none'}"
    record("C5 benchmark ordering", not failed and elapsed < 300, detail)


def _near_default(k_c, k_u):
    interior = 2 <= k_c <= 4 and 2 <= k_u <= 4
    return interior or max(abs(k_c - 3), abs(k_u - 2)) <= 1


def test_c6_capacity_sweep(canonical):
    grid = {(c, u): canonical.mean(k_c=c, k_u=u) for c in range(1, 6) for u in range(1, 6)}
    best = max(grid, key=lambda cell: (grid[cell], -cell[0], -cell[1]))
    tail = canonical.mean(k_c=16, k_u=16)
    ok = _near_default(*best) and tail < grid[best]
    record("C6 capacity sweep shape", ok,
           f"grid max {grid[best]:.4f} at k_c={best[0]}, k_u={best[1]} (near default: {_near_default(*best)}); "
           f"(16,16) = {tail:.4f}; default (3,2) = {grid[(3, 2)]:.4f}")


def test_c7_latency():
    rng = np.random.default_rng(707)
    n, D, V = 20, 256, 41
    eng = Engine(EngineConfig(V, D, k_c=3, k_u=2, m_c=64, m_u=64))
    eng.begin_video()
    times = []
    for t in range(1100):
        F = rng.standard_normal((n, D))
        F /= np.linalg.norm(F, axis=1, keepdims=True)
        L = rng.standard_normal((n, V)) * 3
        P = np.exp(L - L.max(axis=1, keepdims=True))
        P /= P.sum(axis=1, keepdims=True)
        t0 = time.perf_counter()
        eng.process_frame(F, P)
        if t >= 100:  # caches are full from here on
            times.append(time.perf_counter() - t0)
    med = float(np.median(times)) * 1e3
    record("C7 latency", med < 2.0, f"median {med:.3f} ms over {len(times)} frames (budget 2 ms)")


def test_c8_cli_determinism(tmp_path):
    cfg = tmp_path / "c8.toml"
    cfg.write_text(cfgmod.canonical_text().replace("[sweep]\nk_c = [1, 2, 3, 4, 5]\nk_u = [1, 2, 3, 4, 5]",
                                                   "[sweep]\nk_c = [2, 3]\nk_u = [2]"))
    results = {}
    for cmd in ("run", "sweep", "ablate", "trace"):
        dumps = []
        for rep in ("a", "b"):
            out = tmp_path / cmd / rep
            args = [cmd, "--config", str(cfg), "--seed", "11", "--out", str(out)]
            if cmd == "trace":
                args += ["--max-frames", "20", "--stream"]
            assert main(args) == 0
            dumps.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        results[cmd] = dumps[0] == dumps[1] and len(dumps[0]) > 0
    record("C8 CLI determinism", all(results.values()),
           " ".join(f"{k}={'identical' if v else 'DIFFERENT'}" for k, v in results.items()))

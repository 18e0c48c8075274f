"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line."""

import json
import math
import random
import subprocess
import sys
import time

import numpy as np
import pytest

from aqp.adviser import PlanRegistry, advise, rank
from aqp.ga import EvaluationSet, GaConfig, fitness, phi, run_ga
from aqp.profile import (Category, FeedbackBatch, FeedbackType, LearnConfig, best_category,
                         learn, rocchio)
from aqp.simulation import SimConfig, generate, run, trend_slope
from aqp.store import dumps_store, metrics_csv, store_from_doc
from aqp.vector import CorpusStats, QueryVector, RawCounts, build_vector, cosine, idf_weight

from test_adviser import brute_force_advise, covered
from test_ga import random_setup
from test_profile import random_profile, random_vector
from test_store import random_store

TOL = 1e-9
SEED = 7


def dense_cosine(a, b, size=40):
    x, y = a.to_dense(size), b.to_dense(size)
    na, nb = np.sqrt(x @ x), np.sqrt(y @ y)
    return 0.0 if na == 0 or nb == 0 else float(x @ y / (na * nb))


def test_formula_suite(report):
    start = time.perf_counter()
    checks = []
    checks.append(abs(idf_weight(2, 4, 8, 2) - 0.5 * math.log(4)) < TOL)
    checks.append(idf_weight(0, 5, 10, 2) == 0.0 and idf_weight(3, 3, 8, 8) == 0.0)
    v = build_vector(RawCounts({1: 2, 2: 4}), CorpusStats(8, {1: 2, 2: 4}))
    checks.append(abs(v[1] - 0.5 * math.log(4)) < TOL and abs(v[2] - math.log(2)) < TOL)
    checks.append(abs(cosine(QueryVector({0: 1, 1: 2}), QueryVector({0: 2, 1: 1})) - 0.8) < TOL)
    cfg = LearnConfig(gamma=0.5, beta=0.9, lambda_=0.3)
    out = rocchio(QueryVector({0: 1}), FeedbackBatch((QueryVector({0: 1, 1: 1}),),
                                                     (QueryVector({1: 1}),)), cfg)
    checks.append(abs(out[0] - 1.4) < TOL and abs(out[1] - 0.6) < TOL)
    d = QueryVector({0: 1.0})
    pos = QueryVector({0: 0.8, 1: 0.6})
    neg = QueryVector({0: 0.3, 2: math.sqrt(1 - 0.09)})
    checks.append(abs(phi(Category(0, pos, neg), d) - 0.5) < TOL)
    cand = QueryVector({0: 0.5, 1: 0.1, 2: math.sqrt(1 - 0.25 - 0.01)})
    f = fitness(cand, Category(0, cand), EvaluationSet((QueryVector({0: 1.0}), QueryVector({1: 1.0}))))
    checks.append(abs(f - 0.3) < TOL)

    rng = random.Random(11)
    worst = 0.0
    for _ in range(1000):
        a = QueryVector({rng.randrange(40): rng.uniform(0, 5) for _ in range(rng.randrange(8))})
        b = QueryVector({rng.randrange(40): rng.uniform(0, 5) for _ in range(rng.randrange(8))})
        worst = max(worst, abs(cosine(a, b) - dense_cosine(a, b)))
    elapsed = time.perf_counter() - start
    ok = all(checks) and worst < 1e-12 and elapsed < 5.0
    report("1 formula suite", ok,
           f"{sum(checks)}/{len(checks)} examples, max cosine err {worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_rocchio_fixed_point(report):
    start = time.perf_counter()
    cfg = LearnConfig(gamma=0.5, beta=0.75, lambda_=0.15, clamp_negative=False)
    batch = FeedbackBatch(relevant=(QueryVector({0: 1.0, 1: 2.0}), QueryVector({1: 1.0, 2: 4.0})),
                          non_relevant=(QueryVector({2: 1.0, 3: 3.0}),))
    target = rocchio(QueryVector(), batch, cfg).scale(1.0 / (1.0 - cfg.gamma))
    q = QueryVector({0: 5.0, 7: -2.0})
    for _ in range(60):
        q = rocchio(q, batch, cfg)
    err = (q - target).norm()
    elapsed = time.perf_counter() - start
    ok = err < 1e-9 and elapsed < 1.0
    report("2 rocchio fixed point", ok, f"error {err:.1e}, {elapsed:.3f}s")
    assert ok


def test_learn_branch_rule(report):
    rng = random.Random(17)
    cfg = LearnConfig(theta=0.5)
    violations = 0
    for _ in range(1000):
        p = random_profile(rng)
        q = random_vector(rng)
        hit = best_category(p, q)
        expected = 0 if hit is not None and hit[1] >= cfg.theta else 1
        fb = FeedbackType(rng.choice(["positive", "negative"]))
        violations += len(learn(p, q, fb, cfg)) - len(p) != expected
    report("3 learn branch rule", violations == 0, f"{violations} violations in 1000 cases")
    assert violations == 0


def test_advise_oracle(report):
    rng = random.Random(4)
    mismatches = rescale_breaks = 0
    for _ in range(1000):
        p = random_profile(rng, user=rng.randrange(3))
        if rng.random() < 0.5:
            reg = covered(p)
        else:
            reg = PlanRegistry()
            for c in p.categories:
                if rng.random() < 0.8:
                    reg.register(p.user_id, c.id)
        q = random_vector(rng)
        threshold = rng.choice([0.0, 0.05, 0.1, 0.3, 0.6, 1.0])
        mismatches += advise(q, p, reg, threshold).plan_id != brute_force_advise(q, p, reg, threshold)
        q2 = q.scale(10 ** rng.uniform(-3, 3))
        same_order = [s.category_id for s in rank(p, q)] == [s.category_id for s in rank(p, q2)]
        same_plan = advise(q, p, reg, threshold).plan_id == advise(q2, p, reg, threshold).plan_id
        rescale_breaks += not (same_order and same_plan)
    ok = mismatches == 0 and rescale_breaks == 0
    report("4 advise oracle", ok, f"{mismatches} mismatches, {rescale_breaks} rescaling changes")
    assert ok


def test_ga_properties(report):
    non_monotone = out_of_range = nondeterministic = 0
    for seed in range(20):
        c, s = random_setup(seed)
        cfg = GaConfig(generations=100, seed=seed)
        best, history = run_ga(c, s, cfg)
        again = run_ga(c, s, cfg)
        non_monotone += any(b < a for a, b in zip(history, history[1:]))
        out_of_range += any(not -1.0 <= f <= 1.0 for f in history)
        nondeterministic += (best, history) != again
    ok = non_monotone == out_of_range == nondeterministic == 0
    report("5 ga properties", ok, f"20 seeds: {non_monotone} non-monotone, "
           f"{nondeterministic} nondeterministic, {out_of_range} out of range")
    assert ok


def _simulate(tmp_path, name, *extra):
    out = tmp_path / f"{name}.csv"
    cmd = [sys.executable, "-m", "aqp", "simulate", "--users", "160", "--queries", "8400",
           "--seed", str(SEED), "--out", str(out), *extra]
    start = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True)
    elapsed = time.perf_counter() - start
    assert proc.returncode == 0, proc.stderr
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    return out, [float(r[1]) for r in rows], elapsed


def test_full_scale_experiment(report, tmp_path):
    _, adaptive, elapsed = _simulate(tmp_path, "adaptive")
    _, baseline, _ = _simulate(tmp_path, "baseline", "--baseline")
    warm = int(len(adaptive) * 0.25)
    margins = [a - b for a, b in zip(adaptive[warm:], baseline[warm:])]
    slope = trend_slope(adaptive)
    ok = elapsed < 60.0 and len(adaptive) == 20 and min(margins) > 0 and slope > 0
    report("6 full-scale experiment", ok,
           f"{elapsed:.1f}s, min post-warmup margin {min(margins):.3f}, slope {slope:.4f}")
    assert ok


def test_drift_recovery(report):
    cfg = SimConfig(seed=SEED, drift_at=4200)
    m = run(generate(cfg), cfg)
    window = m.window_size
    pre = [p for i, p in enumerate(m.proficiency) if (i + 1) * window <= cfg.drift_at]
    post = [p for i, p in enumerate(m.proficiency) if i * window >= cfg.drift_at]
    target = 0.9 * sum(pre) / len(pre)
    ok = max(post) >= target
    report("7 drift recovery", ok, f"pre-drift mean {sum(pre) / len(pre):.3f}, "
           f"best post-drift {max(post):.3f}, latency {m.adaptation_latency} events")
    assert ok


def test_determinism_and_persistence(report, tmp_path):
    a, _, _ = _simulate(tmp_path, "first", "--drift-at", "4200")
    b, _, _ = _simulate(tmp_path, "second", "--drift-at", "4200")
    cfg = SimConfig(num_users=30, num_queries=1200, seed=SEED)
    same_csv = a.read_bytes() == b.read_bytes() and \
        metrics_csv(run(generate(cfg), cfg)) == metrics_csv(run(generate(cfg), cfg))
    broken = 0
    for seed in range(200):
        store = random_store(random.Random(seed))
        text = dumps_store(store)
        again = store_from_doc(json.loads(text))
        broken += again != store or dumps_store(again) != text
    ok = same_csv and broken == 0
    report("8 determinism and persistence", ok,
           f"csv identical: {same_csv}, {broken}/200 store roundtrips differ")
    assert ok

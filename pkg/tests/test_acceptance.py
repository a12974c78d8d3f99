"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; the lines are collected in the
"acceptance criteria" section of the terminal summary. Seeds are fixed per
criterion (``1000 * criterion + i``) and are not tuned.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np
import pytest

from hypercore.analytic import (
    ModelParams,
    core_fraction_law,
    largest_fixed_point,
    message_sequence,
    phi,
    threshold,
    threshold_function,
)
from hypercore.branching import (
    boundary_level,
    project_to_binary,
    sample_hatT,
    sample_hatT_star,
    sample_T,
    sample_T_star,
    sample_truncated,
    tree_wp,
    truncated_messages,
)
from hypercore.census import (
    canonical_code,
    empirical_distribution,
    mc_distribution,
    nontree_code,
    tv_distance,
    tv_null_samples,
)
from hypercore.hypergraph import peel_core, sample_hypergraph, to_factor_graph
from hypercore.trees import parse_tree
from hypercore.wp import wp_run
from tree_library import SEPARATION_LIBRARY, permute_siblings

BASE = ModelParams(6.0, 3, 2)
PSI = core_fraction_law(BASE)
P_STAR = largest_fixed_point(BASE).p_star
N_LARGE = 10**5
N_MC = 10**5


def supercritical_grid() -> list[ModelParams]:
    grid = []
    for r, k in itertools.product((3, 4, 5), (2, 3, 4)):
        d_rk = threshold(r, k).d_rk
        grid += [ModelParams(d_rk * f, r, k) for f in (1.05, 1.5, 3.0)]
    grid += [ModelParams(threshold(3, k).d_rk * 10.0, 3, k) for k in (2, 3, 4)]
    assert len(grid) == 30
    return grid


GRID = supercritical_grid()


def noise_note(a, b, seed):
    null = tv_null_samples(a, b, 1000, seed=seed)
    return f"same-law noise: median {np.median(null):.4f}, 99.9% {np.quantile(null, 0.999):.4f}"


def test_criterion_01_fixed_point_residual(acceptance):
    t0 = time.perf_counter()
    worst = max(abs(phi(p, largest_fixed_point(p).p_star) - largest_fixed_point(p).p_star) for p in GRID)
    positive = all(largest_fixed_point(p).p_star > 0 for p in GRID)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and positive and dt < 1.0
    acceptance(1, ok, f"max |phi(p*) - p*| = {worst:.2e} on 30 supercritical points (tol 1e-10), {dt:.2f}s")
    assert ok


def test_criterion_02_psi_identity(acceptance):
    t0 = time.perf_counter()
    worst = max(abs(core_fraction_law(p) - phi(p.with_k(p.k + 1), largest_fixed_point(p).p_star)) for p in GRID)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 1.0
    acceptance(2, ok, f"max |psi - phi_(k+1)(p*)| = {worst:.2e} (tol 1e-9), {dt:.2f}s")
    assert ok


def test_criterion_03_threshold(acceptance):
    t0 = time.perf_counter()
    lo, hi = 0.5, 3.0  # e^x - 1 - 2x changes sign on this bracket
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.exp(mid) - 1 - 2 * mid < 0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    oracle = 2 * lam / (1 - math.exp(-lam)) ** 2
    th = threshold(3, 2)
    dt = time.perf_counter() - t0
    err = abs(th.d_rk - oracle)
    ok = err <= 1e-6 and abs(th.d_rk - 4.9108) < 1e-4 and dt < 1.0
    acceptance(3, ok, f"d_3,2 = {th.d_rk:.8f}, stationarity oracle {oracle:.8f}, |diff| = {err:.1e} (tol 1e-6), {dt:.2f}s")
    assert ok
    assert threshold_function(3, 2, th.lambda_min) == pytest.approx(th.d_rk)


def wp_instances():
    combos = list(itertools.product((50, 100, 300), (2.0, 4.0, 6.0, 8.0), (3, 4), (2, 3)))
    for i in range(200):
        n, d, r, k = combos[i % len(combos)]
        yield i, n, ModelParams(d, r, 2), k


def test_criterion_04_05_wp_equals_peeling_and_monotone(acceptance):
    t0 = time.perf_counter()
    equal = monotone = 0
    for i, n, params, k in wp_instances():
        f = to_factor_graph(sample_hypergraph(n, params, 4000 + i))
        bound = 2 * f.m * f.r + 1
        try:
            res = wp_run(f, k, max_t=bound, check=True)
            monotone += 1
        except AssertionError:
            res = wp_run(f, k, max_t=bound)
        core = peel_core(f, k)
        if (res.converged and np.array_equal(res.marks.var_mark, core.var_mark)
                and np.array_equal(res.marks.fac_mark, core.fac_mark)):
            equal += 1
    dt = time.perf_counter() - t0
    ok4 = equal == 200 and dt < 30
    ok5 = monotone == 200
    acceptance(4, ok4, f"WP fixed point == peeled core on {equal}/200 instances, {dt:.1f}s")
    acceptance(5, ok5, f"per-step monotonicity assertions passed on {monotone}/200 instances")
    assert ok4 and ok5


def test_criterion_06_core_size_law(acceptance):
    t0 = time.perf_counter()
    fractions = []
    for i in range(20):
        f = to_factor_graph(sample_hypergraph(N_LARGE, BASE, 6000 + i))
        fractions.append(peel_core(f, 2).var_mark.mean())
    dt = time.perf_counter() - t0
    hits = sum(abs(x - PSI) <= 0.01 for x in fractions)
    ok = hits >= 18 and dt < 120
    acceptance(6, ok, f"core fraction within 0.01 of psi={PSI:.5f} on {hits}/20 seeds "
                      f"(range {min(fractions):.4f}..{max(fractions):.4f}), {dt:.1f}s")
    assert ok


def test_criterion_07_subcritical_empty(acceptance):
    t0 = time.perf_counter()
    params = ModelParams(4.0, 3, 2)
    sizes = [peel_core(to_factor_graph(sample_hypergraph(N_LARGE, params, 7000 + i)), 2).size for i in range(20)]
    dt = time.perf_counter() - t0
    empty = sum(s == 0 for s in sizes)
    ok = empty >= 19 and dt < 120
    acceptance(7, ok, f"2-core empty at d=4 on {empty}/20 seeds (max size {max(sizes)}), {dt:.1f}s")
    assert ok


def test_criterion_08_root_message_recursion(acceptance):
    t0 = time.perf_counter()
    seq = message_sequence(BASE, 5)
    parts, ok = [], True
    for t in (1, 3, 5):
        ss = np.random.SeedSequence(8000 + t).spawn(10)
        mean = np.mean([tree_wp(sample_T(BASE, t, s, N_MC // 10), 2, t).up[0].mean() for s in ss])
        se = math.sqrt(seq[t] * (1 - seq[t]) / N_MC)
        z = (mean - seq[t]) / se
        ok &= abs(z) <= 3
        parts.append(f"t={t}: {mean:.5f} vs {seq[t]:.5f} (z={z:+.2f})")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    acceptance(8, ok, "; ".join(parts) + f", {dt:.1f}s")
    assert ok


def test_criterion_09_truncated_stabilization(acceptance):
    t0 = time.perf_counter()
    same = 0
    for s in (2, 4):
        forest = sample_T(BASE, boundary_level(s), 9000 + s, 10**3)
        a = truncated_messages(forest, s, s, P_STAR, 2, seed=9100 + s)
        b = truncated_messages(forest, s, s + 3, P_STAR, 2, seed=9100 + s)
        same += all(np.array_equal(a[j], b[j]) for j in range(s + 1))
    dt = time.perf_counter() - t0
    ok = same == 2 and dt < 30
    acceptance(9, ok, f"mu*(s) == mu*(s+3) on 1000 trees for {same}/2 values of s in {{2, 4}}, {dt:.1f}s")
    assert ok


def test_criterion_10_top_down_matches_truncated(acceptance):
    t0 = time.perf_counter()
    a = mc_distribution(lambda ss, n: sample_truncated(BASE, P_STAR, 2, ss, n), 2, N_MC, seed=10001)
    b = mc_distribution(lambda ss, n: sample_T_star(BASE, P_STAR, 2, ss, n), 2, N_MC, seed=10002)
    tv = tv_distance(a, b)
    dt = time.perf_counter() - t0
    ok = tv <= 0.01 and dt < 180
    acceptance(10, ok, f"TV(truncated messages, T*) at depth 2 = {tv:.4f} (tol 0.01; {noise_note(a, b, 10003)}), {dt:.1f}s")
    assert ok


def test_criterion_11_nine_type_equivalence(acceptance):
    t0 = time.perf_counter()
    a = mc_distribution(lambda ss, n: sample_hatT_star(BASE, P_STAR, 2, ss, n), 2, N_MC, seed=11001)
    b = mc_distribution(lambda ss, n: sample_hatT(BASE, P_STAR, 2, ss, n), 2, N_MC, seed=11002)
    tv = tv_distance(a, b)
    dt = time.perf_counter() - t0
    ok = tv <= 0.01 and dt < 180
    acceptance(11, ok, f"TV(decorated T*, direct 9-type) at depth 2 = {tv:.4f} (tol 0.01; {noise_note(a, b, 11003)}), {dt:.1f}s")
    assert ok


def test_criterion_12_core_census_matches_projected_process(acceptance):
    t0 = time.perf_counter()
    f = to_factor_graph(sample_hypergraph(N_LARGE, BASE, 12001))
    core = peel_core(f, 2)
    emp = empirical_distribution(f, 2, core.var_mark, core.fac_mark)
    mc = mc_distribution(lambda ss, n: project_to_binary(sample_hatT(BASE, P_STAR, 2, ss, n)), 2, N_MC, seed=12002)
    tv = tv_distance(emp, mc)
    emp0 = empirical_distribution(f, 0, core.var_mark, core.fac_mark)
    root1 = emp0.mass(canonical_code(parse_tree("(v:1)", 3)))
    dt = time.perf_counter() - t0
    ok = tv <= 0.02 and abs(root1 - PSI) <= 0.01 and dt < 300
    acceptance(12, ok, f"TV(core-marked census, projected 9-type) at depth 2 = {tv:.4f} (tol 0.02); "
                       f"depth-0 mark-1 mass {root1:.4f} vs psi {PSI:.4f}, {dt:.1f}s")
    assert ok


def test_criterion_13_unmarked_census_matches_poisson_tree(acceptance):
    t0 = time.perf_counter()
    f = to_factor_graph(sample_hypergraph(N_LARGE, BASE, 13001))
    emp = empirical_distribution(f, 2)
    mc = mc_distribution(lambda ss, n: sample_T(BASE, 2, ss, n), 2, N_MC, seed=13002)
    tv = tv_distance(emp, mc)
    nontree = emp.mass(nontree_code(2))
    dt = time.perf_counter() - t0
    ok = tv <= 0.02 and nontree <= 0.01 and dt < 300
    acceptance(13, ok, f"TV(unmarked census, T(d,r)) at depth 2 = {tv:.4f} (tol 0.02); "
                       f"non-tree mass {nontree:.5f} (tol 0.01), {dt:.1f}s")
    assert ok


def test_criterion_14_code_soundness(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(14001)
    trees = project_to_binary(sample_hatT(BASE, P_STAR, 4, 14002, 200))
    base = trees.to_text()
    changes = 0
    for _ in range(10**4 // trees.n_trees):
        changes += sum(x != y for x, y in zip(permute_siblings(trees, rng).to_text(), base))
    codes = {canonical_code(parse_tree(t, 3)) for t in SEPARATION_LIBRARY}
    dt = time.perf_counter() - t0
    ok = changes == 0 and len(SEPARATION_LIBRARY) == 20 and len(codes) == 20 and dt < 10
    acceptance(14, ok, f"{changes} code changes over 10^4 permuted trees; "
                       f"{len(codes)} distinct codes for the 20-tree library, {dt:.1f}s")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))

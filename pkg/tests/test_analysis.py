import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from rlpagerank import analysis, estimator, graph, oracle
from rlpagerank.analysis import (AnalysisError, ConvergenceTrace, RankCriterion, TraceRow,
                                 estimate_kappa, l1_distance, rank_miss_pct, top_indices)
from rlpagerank.estimator import StepSchedule
from rlpagerank.sampling import Sampler

from conftest import random_model


def exact_kappa(p, crit):
    """Distance from p to the closure of the complement of C, by one LP per exit pattern."""
    n = len(p)
    cost = np.r_[np.zeros(n), np.ones(n)]
    eye = np.eye(n)
    best = math.inf
    for i in top_indices(p, crit.m):
        others = [k for k in range(n) if k != i]
        for group in itertools.combinations(others, crit.M):
            rows = []
            for k in group:
                r = np.zeros(2 * n)
                r[i], r[k] = 1.0, -1.0
                rows.append(r)
            a_ub = np.vstack([np.hstack([eye, -eye]), np.hstack([-eye, -eye]), np.array(rows)])
            b_ub = np.r_[p, -p, np.zeros(len(rows))]
            res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=np.r_[np.ones(n), np.zeros(n)][None],
                          b_eq=[1.0], bounds=[(0, None)] * (2 * n), method="highs")
            best = min(best, res.fun)
    return best


# metrics

def test_l1_examples():
    assert l1_distance([1, 2, 3], [1, 2, 3]) == 0.0
    assert l1_distance([1, 0], [0, 1]) == 2.0
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=7), rng.normal(size=7)
    naive = 0.0
    for x, y in zip(a.tolist(), b.tolist()):
        naive += abs(x - y)
    assert l1_distance(a, b) == naive
    with pytest.raises(AnalysisError):
        l1_distance([1, 2], [1, 2, 3])


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
                min_size=1, max_size=10))
@settings(max_examples=100, deadline=None)
def test_l1_is_a_metric(triples):
    a, b, c = (np.array(v) for v in zip(*triples))
    assert l1_distance(a, b) == l1_distance(b, a)
    assert l1_distance(a, a) == 0
    assert l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c) + 1e-9


def test_top_indices_examples():
    assert top_indices([5, 4, 3], 2).tolist() == [0, 1]
    assert top_indices([1, 1, 1], 2).tolist() == [0, 1]
    z = np.random.default_rng(1).normal(size=100)
    assert top_indices(z, 10).tolist() == sorted(range(100), key=lambda i: -z[i])[:10]
    with pytest.raises(AnalysisError):
        top_indices([1, 2], 3)


def test_rank_miss_examples():
    z_star = np.array([5.0, 4, 3, 2, 1])
    assert rank_miss_pct(z_star, z_star, RankCriterion(2, 3)) == 0.0
    assert rank_miss_pct([1, 2, 3, 4, 5], z_star, RankCriterion(2, 2)) == 100.0
    assert rank_miss_pct([5, 1, 2, 4, 3], z_star, RankCriterion(2, 2)) == 50.0


@given(st.integers(6, 30), st.data())
@settings(max_examples=60, deadline=None)
def test_rank_miss_in_multiples(n, data):
    M = data.draw(st.integers(1, n - 1))
    m = data.draw(st.integers(1, M))
    z = np.array(data.draw(st.lists(st.floats(0, 10), min_size=n, max_size=n)))
    zs = np.array(data.draw(st.lists(st.floats(0, 10), min_size=n, max_size=n)))
    v = rank_miss_pct(z, zs, RankCriterion(m, M))
    assert 0 <= v <= 100
    assert v * m / 100 == pytest.approx(round(v * m / 100), abs=1e-9)


def test_criterion_validation():
    with pytest.raises(AnalysisError):
        RankCriterion(3, 2)
    with pytest.raises(AnalysisError):
        RankCriterion(0, 2)
    with pytest.raises(AnalysisError, match="degenerate"):
        RankCriterion.for_oracle([3, 2, 2, 1], 2, 3)
    with pytest.raises(AnalysisError):
        RankCriterion.for_oracle([3, 2, 1], 1, 3)
    RankCriterion.for_oracle([3, 2, 2, 1], 1, 3)
    RankCriterion.for_oracle([0.5, 0.3, 0.2], 1, 1)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_rank_miss_zero_iff_in_C(n):
    z_star = np.arange(n, 0, -1, dtype=float)
    for M in range(1, n):
        for m in range(1, M + 1):
            crit = RankCriterion(m, M)
            for perm in itertools.permutations(range(1, n + 1)):
                z = np.array(perm, dtype=float)
                assert (rank_miss_pct(z, z_star, crit) == 0) == analysis.in_C(z, z_star, crit)


def test_in_C_is_scale_invariant(web50):
    z_star = oracle.solve_fixed_point(web50, 0.85).z_star
    crit = RankCriterion.for_oracle(z_star, 5, 10)
    z = z_star + np.random.default_rng(0).normal(scale=2.0, size=50)
    assert analysis.in_C(z, z_star, crit) == analysis.in_C(z / z.sum(), z_star / z_star.sum(), crit)


def test_set_predicates_small_instance():
    p = np.array([0.5, 0.3, 0.2])
    crit = RankCriterion(1, 1)
    kappa = exact_kappa(p, crit)
    assert analysis.in_C_star(p, p, crit, kappa)
    assert not analysis.in_C_star([0.3, 0.5, 0.2], p, crit, kappa)
    assert analysis.distance_to_C(p, p, crit) == 0.0
    # [0.3, 0.5, 0.2] must move 0.1 from index 1 to index 0: cost 0.2
    assert analysis.distance_to_C([0.3, 0.5, 0.2], p, crit) == pytest.approx(0.2, abs=1e-9)
    assert analysis.in_C_eps([0.3, 0.5, 0.2], p, crit, 0.25)
    assert not analysis.in_C_eps([0.3, 0.5, 0.2], p, crit, 0.15)


# kappa

def test_kappa_example():
    k = estimate_kappa([0.5, 0.3, 0.2], RankCriterion(1, 1), n_samples=1000)
    assert 0 < k <= 0.4
    assert k == pytest.approx(exact_kappa(np.array([0.5, 0.3, 0.2]), RankCriterion(1, 1)), rel=1e-9)


def test_kappa_rejects_degenerate_and_small_budgets():
    with pytest.raises(AnalysisError):
        estimate_kappa([0.4, 0.3, 0.3], RankCriterion(2, 2))
    with pytest.raises(AnalysisError):
        estimate_kappa([0.5, 0.3, 0.2], RankCriterion(1, 1), n_samples=999)


def test_kappa_normalises_input():
    crit = RankCriterion(1, 2)
    z = np.array([6.0, 3.0, 2.0, 1.0])
    assert estimate_kappa(z, crit) == estimate_kappa(z / z.sum(), crit)


def test_kappa_non_increasing_in_samples():
    z = oracle.solve_fixed_point(random_model(8, 2), 0.85).z_star
    crit = RankCriterion.for_oracle(z, 2, 4)
    ks = [estimate_kappa(z, crit, n, seed=3) for n in (1000, 3000, 9000)]
    assert ks[0] >= ks[1] >= ks[2] > 0


@pytest.mark.parametrize("seed", range(12))
def test_kappa_against_lp_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    M = int(rng.integers(1, n))
    m = int(rng.integers(1, M + 1))
    p = rng.dirichlet(np.ones(n))
    crit = RankCriterion.for_oracle(p, m, M)
    exact = exact_kappa(p, crit)
    est = estimate_kappa(p, crit)
    assert est >= exact - 1e-12
    assert est == pytest.approx(exact, rel=1e-9)


# traces

def test_trace_rows_strictly_increasing():
    t = ConvergenceTrace()
    t.append(TraceRow(10, 1.0, 0.0, 0))
    with pytest.raises(AnalysisError):
        t.append(TraceRow(10, 1.0, 0.0, 0))


def test_iterations_to_criterion():
    t = ConvergenceTrace()
    for n, miss in [(1, 40), (2, 0), (3, 20), (4, 0), (5, 0)]:
        t.append(TraceRow(n, 1.0, miss, 0))
    assert t.iterations_to_criterion() == 4
    t.append(TraceRow(6, 1.0, 20.0, 0))
    assert t.iterations_to_criterion() is None


def test_trace_csv_round_trip(tmp_path):
    t = ConvergenceTrace()
    t.append(TraceRow(1000, 0.1 + 0.2, 20.0, 0))
    t.append(TraceRow(2000, 1 / 3, 0.0, 123456789))
    t.append(TraceRow(3000, math.nan, math.nan, 0))
    p = tmp_path / "t.csv"
    t.to_csv(p)
    raw = p.read_bytes()
    assert raw.startswith(b"n,l1_distance,rank_miss_pct,wall_nanos\n")
    assert b"\r" not in raw and b"0.30000000000000004" in raw
    back = ConvergenceTrace.from_csv(p)
    assert back.rows[:2] == t.rows[:2]
    assert math.isnan(back.rows[2].l1_distance)
    back.to_csv(tmp_path / "u.csv")
    assert (tmp_path / "u.csv").read_bytes() == raw


def test_trace_csv_rejects_foreign_header(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("n,distance\n1,2\n")
    with pytest.raises(AnalysisError):
        ConvergenceTrace.from_csv(p)


def test_zero_miss_once_l1_below_gap(web50):
    z_star = oracle.solve_fixed_point(web50, 0.85).z_star
    v = np.sort(z_star)[::-1]
    trace = estimator.run(web50, Sampler(web50, 1), estimator.init_state(50), 200_000, 1000,
                          oracle_z=z_star)
    exercised = 0
    for m, M in ((5, 10), (2, 3), (1, 2), (3, 8)):
        crit = RankCriterion.for_oracle(z_star, m, M)
        gap = v[m - 1] - v[M - 1]
        for row in trace:
            if row.l1_distance < gap:
                exercised += 1
                z = _replay(web50, row.n)
                assert rank_miss_pct(z, z_star, crit) == 0
    assert exercised > 0, "no checkpoint came within any ranking gap"


def _replay(model, n, seed=1):
    state = estimator.init_state(model.n_nodes)
    Sampler(model, seed).run_steps(state.z, state.schedule.steps(0, n), state.c, state.m)
    return state.z


# sample complexity

def single():
    return graph.build_from_edges(1, [(0, 0)])


def test_tau_closed_form_chain():
    r = analysis.complexity_report(single(), 0.85, None, StepSchedule(), [1.0], kappa=0.4)
    assert r.norm1 == pytest.approx(math.exp(-0.15), abs=1e-12)
    assert r.tau == pytest.approx(8 / ((1 - math.exp(-0.15)) * 0.4), rel=1e-12)
    assert r.tau == pytest.approx(143.6, abs=0.05)
    assert r.gamma == pytest.approx((1 - math.exp(-0.15)) * 0.4, rel=1e-12)
    assert r.delta == pytest.approx(r.gamma / 2, rel=1e-15)
    assert r.kappa_source == "given"
    brute = np.cumsum(StepSchedule().steps(0, 10_000))
    assert brute[r.n0] >= r.tau > brute[r.n0 - 1]


def test_report_picks_smallest_tau():
    grid = [0.5, 1, 2, 4, 8, 16, 32]
    r = analysis.complexity_report(single(), 0.85, None, StepSchedule(), grid, kappa=0.4)
    taus = [analysis.tau_bound(T, math.exp(-0.15 * T), 0.4) for T in grid]
    assert r.T == grid[int(np.argmin(taus))]
    assert [g[0] for g in r.grid] == grid


def test_n0_and_delta_examples():
    assert StepSchedule.constant(1.0).first_index_reaching(2.5) == 2
    assert analysis.delta_radius(0.2, 100) == pytest.approx(0.01, abs=1e-17)


def test_report_errors():
    with pytest.raises(AnalysisError):
        analysis.complexity_report(single(), 0.85, None, StepSchedule(), [], kappa=0.4)
    with pytest.raises(AnalysisError):
        analysis.complexity_report(single(), 0.85, None, StepSchedule(), [1.0, -1.0], kappa=0.4)
    with pytest.raises(AnalysisError):
        analysis.complexity_report(single(), 0.85, None, StepSchedule(), [1.0])
    with pytest.raises(AnalysisError):
        analysis.complexity_report(single(), 0.85, None, StepSchedule(), [1.0], kappa=0.0)


def test_report_with_estimated_kappa(web50):
    z_star = oracle.solve_fixed_point(web50, 0.85).z_star
    crit = RankCriterion.for_oracle(z_star, 5, 10)
    r = analysis.complexity_report(web50, 0.85, crit, StepSchedule(), [25, 50, 100], seed=1)
    assert 0 < r.norm1 < 1
    assert r.kappa_lb == estimate_kappa(z_star, crit, 2000, seed=1)
    assert r.kappa_source.startswith("estimate")
    text = r.to_text()
    assert "K_note" in text and "tau = " in text and "n0 = " in text

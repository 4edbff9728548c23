import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from rlpagerank import graph, oracle
from rlpagerank.graph import GoogleMatrix

from conftest import random_model


def single():
    return graph.build_from_edges(1, [(0, 0)])


def dense_z_star(model, c):
    n = model.n_nodes
    return np.linalg.solve(np.eye(n) - c * model.to_dense().T, np.ones(n))


def rk4(model, c, z, T, dt):
    def f(v):
        return oracle.ode_field(v, model, c) / model.n_nodes
    steps = round(T / dt)
    for _ in range(steps):
        k1 = f(z)
        k2 = f(z + dt / 2 * k1)
        k3 = f(z + dt / 2 * k2)
        k4 = f(z + dt * k3)
        z = z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


# fixed point

def test_fixed_point_examples(two_cycle, three_node):
    assert oracle.solve_fixed_point(single(), 0.85).z_star[0] == pytest.approx(1 / 0.15, abs=1e-9)
    assert np.allclose(oracle.solve_fixed_point(two_cycle, 0.5).z_star, [2, 2], atol=1e-12, rtol=0)
    fp = oracle.solve_fixed_point(three_node, 0.85)
    assert np.max(np.abs(fp.z_star - dense_z_star(three_node, 0.85))) <= 1e-9


@given(st.integers(1, 40), st.integers(0, 2**32), st.sampled_from([0.1, 0.5, 0.85, 0.99]),
       st.booleans())
@settings(max_examples=60, deadline=None)
def test_fixed_point_properties(n, seed, c, weighted):
    m = random_model(n, seed, weighted)
    fp = oracle.solve_fixed_point(m, c)
    assert fp.residual <= 1e-10 * n
    assert np.all(fp.z_star >= 1.0)
    assert np.max(np.abs(fp.z_star - dense_z_star(m, c))) <= 1e-8 * fp.z_star.max()
    # z* sums to N / (1 - c) since the columns of P^T sum to 1
    assert fp.z_star.sum() == pytest.approx(n / (1 - c), rel=1e-12)


def test_neumann_contraction_rate(web50):
    c = 0.85
    z_star = dense_z_star(web50, c)
    z = np.ones(50)
    errs = []
    for _ in range(40):
        z = 1 + c * web50.transpose_matvec(z)
        errs.append(np.abs(z - z_star).sum())
    ratios = np.array(errs[1:]) / np.array(errs[:-1])
    assert np.all(ratios <= c + 1e-6)


def test_fixed_point_rejects_bad_input(two_cycle):
    with pytest.raises(ValueError):
        oracle.solve_fixed_point(two_cycle, 1.0)
    with pytest.raises(ValueError):
        oracle.solve_fixed_point(two_cycle, 0.5, tol=0)
    with pytest.raises(oracle.OracleError):
        oracle.solve_fixed_point(two_cycle, 0.99, max_sweeps=3)


# stationary law

def test_stationary_examples(two_cycle):
    assert np.allclose(oracle.stationary_power_method(GoogleMatrix(two_cycle, 0.3)), 0.5)
    assert oracle.stationary_power_method(GoogleMatrix(single(), 0.85)).tolist() == [1.0]


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("c", [0.5, 0.85])
def test_pi_proportional_to_z_star(seed, c):
    m = random_model(25, seed, weighted=seed % 2 == 1)
    pi = oracle.stationary_power_method(GoogleMatrix(m, c))
    z_star = oracle.solve_fixed_point(m, c).z_star
    assert abs(pi.sum() - 1.0) <= 1e-15
    assert np.max(np.abs(pi - (1 - c) / 25 * z_star)) <= 1e-8
    dense = c * m.to_dense() + (1 - c) / 25
    assert np.abs(pi @ dense - pi).sum() <= 1e-12


# ODE fields

def test_ode_field_examples(web50):
    c = 0.85
    z_star = oracle.solve_fixed_point(web50, c).z_star
    assert np.max(np.abs(oracle.ode_field(z_star, web50, c))) <= 1e-9
    assert oracle.ode_field(np.zeros(50), web50, c).tolist() == [1.0] * 50
    assert oracle.ode_field_scaled(np.zeros(50), web50, c).tolist() == [0.0] * 50


def test_ode_field_matches_dense():
    m = random_model(5, 3, weighted=True)
    z = np.random.default_rng(0).uniform(-3, 3, 5)
    dense = 1 + 0.7 * m.to_dense().T @ z - z
    assert np.max(np.abs(oracle.ode_field(z, m, 0.7) - dense)) <= 1e-12


@given(st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_scaled_field_identities(seed):
    m = random_model(8, seed)
    z = np.random.default_rng(seed).uniform(0, 10, 8)
    a = 1e3
    h, hinf = oracle.ode_field(z, m, 0.85), oracle.ode_field_scaled(z, m, 0.85)
    assert np.allclose(h - hinf, 1.0, rtol=0, atol=1e-12)
    assert np.allclose(oracle.ode_field(a * z, m, 0.85) / a - hinf, 1 / a, rtol=0, atol=1e-12)


def test_ode_field_dimension_check(two_cycle):
    with pytest.raises(ValueError):
        oracle.ode_field(np.ones(3), two_cycle, 0.5)


# matrix exponential

@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("scale", [1e-6, 0.3, 4.0, 40.0])
def test_expm_matches_scipy(seed, scale):
    a = np.random.default_rng(seed).normal(size=(7, 7)) * scale / 7
    ours, ref = oracle.expm(a), scipy.linalg.expm(a)
    assert np.max(np.abs(ours - ref)) <= 1e-12 * max(1.0, np.abs(ref).max())


def test_norm_examples():
    assert oracle.matrix_exponential_1norm(single(), 0.85, 1.0) == pytest.approx(math.exp(-0.15), abs=1e-15)
    assert abs(oracle.matrix_exponential_1norm(single(), 0.85, 1e-8) - 1) <= 1e-6


@given(st.integers(1, 30), st.integers(0, 2**32), st.sampled_from([0.3, 0.85]),
       st.floats(0.01, 100))
@settings(max_examples=40, deadline=None)
def test_norm_is_exact_exponential_decay(n, seed, c, tfac):
    m = random_model(n, seed)
    T = tfac * n
    norm = oracle.matrix_exponential_1norm(m, c, T)
    assert norm < 1.0
    # columns of cP^T - I sum to c - 1 and exp keeps entries non-negative
    assert norm == pytest.approx(math.exp(-(1 - c) * T / n), rel=1e-11)


def test_norm_rejects_non_positive_time(two_cycle):
    with pytest.raises(ValueError):
        oracle.matrix_exponential_1norm(two_cycle, 0.5, 0.0)


def test_dense_guard():
    big = graph.build_from_edges(oracle.DENSE_GUARD + 1, [(0, 1)])
    with pytest.raises(oracle.DenseGuardError):
        oracle.matrix_exponential_1norm(big, 0.85, 1.0)
    with pytest.raises(oracle.DenseGuardError):
        oracle.flow_map(np.ones(big.n_nodes), big, 0.85, 1.0)


# flow map

def test_neumann_identity(web50):
    c = 0.85
    a = c * web50.to_dense().T - np.eye(50)
    w = np.linalg.solve(a, np.ones(50))
    assert np.max(np.abs(w + oracle.solve_fixed_point(web50, c).z_star)) <= 1e-9


def test_flow_map_fixes_z_star(web50):
    z_star = oracle.solve_fixed_point(web50, 0.85).z_star
    for T in (0.5, 3.0, 50.0, 500.0):
        assert np.max(np.abs(oracle.flow_map(z_star, web50, 0.85, T) - z_star)) <= 1e-9


def test_flow_map_at_zero_time(web50):
    z = np.random.default_rng(2).uniform(0, 10, 50)
    assert np.max(np.abs(oracle.flow_map(z, web50, 0.85, 0.0) - z)) <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_flow_map_matches_rk4(seed):
    m = random_model(5, seed, weighted=True)
    z = np.random.default_rng(seed).uniform(0, 10, 5)
    ref = rk4(m, 0.85, z, 3.0, 1e-3)
    assert np.max(np.abs(oracle.flow_map(z, m, 0.85, 3.0) - ref)) <= 1e-6


def test_flow_semigroup(web50):
    z = np.random.default_rng(3).uniform(0, 20, 50)
    c = 0.85
    z_star = oracle.solve_fixed_point(web50, c).z_star
    for S, T in ((0.5, 3.0), (10.0, 25.0), (100.0, 40.0)):
        lhs = oracle.flow_map(oracle.flow_map(z, web50, c, S, z_star), web50, c, T, z_star)
        rhs = oracle.flow_map(z, web50, c, S + T, z_star)
        assert np.max(np.abs(lhs - rhs)) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_lyapunov_decrease(seed):
    m = random_model(10, seed)
    c, dt = 0.85, 1e-4
    z_star = oracle.solve_fixed_point(m, c).z_star
    rng = np.random.default_rng(seed)
    for _ in range(20):
        z = z_star + rng.normal(scale=5, size=10)
        v0 = np.abs(z - z_star).sum()
        v1 = np.abs(oracle.flow_map(z, m, c, dt, z_star) - z_star).sum()
        assert v1 <= v0 * (1 - (1 - c) * dt / 10) + dt ** 2 * v0
